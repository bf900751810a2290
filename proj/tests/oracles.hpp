// Independent reference implementations used only by tests. Each one takes a
// deliberately different route from the library code it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "tabmda/classifiers.hpp"
#include "tabmda/encoder.hpp"
#include "tabmda/matrix.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Cyclic Jacobi eigendecomposition of a symmetric matrix.
// ---------------------------------------------------------------------------

struct EigenPairs {
    std::vector<double> values;          // descending
    std::vector<std::vector<double>> vectors; // vectors[i] belongs to values[i]
};

inline EigenPairs jacobi_eigen(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        }
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });

    EigenPairs out;
    for (const std::size_t idx : order) {
        out.values.push_back(a[idx][idx]);
        std::vector<double> vec(n);
        for (std::size_t k = 0; k < n; ++k) vec[k] = v[k][idx];
        out.vectors.push_back(std::move(vec));
    }
    return out;
}

/// Covariance (denominator n-1) of a row-major data matrix.
inline std::vector<std::vector<double>> sample_covariance(const tabmda::Matrix& data) {
    const std::size_t n = data.rows(), d = data.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += data(i, j);
    }
    for (double& m : mean) m /= static_cast<double>(n);
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = 0; k < d; ++k) {
                cov[j][k] += (data(i, j) - mean[j]) * (data(i, k) - mean[k]);
            }
        }
    }
    for (auto& row : cov) {
        for (double& x : row) x /= static_cast<double>(n - 1);
    }
    return cov;
}

// ---------------------------------------------------------------------------
// Dense single-pass transformer forward with an explicit mask matrix.
// ---------------------------------------------------------------------------

inline tabmda::Matrix dense_attention_forward(const tabmda::EncoderWeights& w,
                                              const tabmda::EncoderConfig& cfg,
                                              const tabmda::Context& ctx,
                                              const tabmda::Matrix& queries) {
    using tabmda::Matrix;
    const std::size_t m = ctx.features.rows();
    const std::size_t q = queries.rows();
    const std::size_t total = m + q;
    const std::size_t d_in = ctx.features.cols();
    const std::size_t d = cfg.d_model;
    const std::size_t d_head = d / cfg.n_heads;

    // Context-statistics standardization (population std, zero-variance
    // divisor 1), done longhand.
    std::vector<double> mean(d_in, 0.0), scale(d_in, 1.0);
    for (std::size_t j = 0; j < d_in; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += ctx.features(i, j);
        mean[j] = s / static_cast<double>(m);
        double sq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            sq += (ctx.features(i, j) - mean[j]) * (ctx.features(i, j) - mean[j]);
        }
        const double sd = std::sqrt(sq / static_cast<double>(m));
        scale[j] = sd < 1e-9 ? 1.0 : sd;
    }

    const double fscale = static_cast<double>(cfg.f_max) / static_cast<double>(d_in);
    Matrix tokens(total, d);
    for (std::size_t i = 0; i < total; ++i) {
        std::vector<double> padded(cfg.f_max, 0.0);
        for (std::size_t j = 0; j < d_in; ++j) {
            const double raw = i < m ? ctx.features(i, j) : queries(i - m, j);
            padded[j] = (raw - mean[j]) / scale[j] * fscale;
        }
        for (std::size_t col = 0; col < d; ++col) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cfg.f_max; ++j) acc += padded[j] * w.input_projection(j, col);
            tokens(i, col) = acc;
        }
        if (i < m) {
            for (std::size_t col = 0; col < d; ++col) {
                tokens(i, col) += w.label_embedding(static_cast<std::size_t>(ctx.labels[i]), col);
            }
        }
    }

    // mask(i, j): token i may attend to token j.
    std::vector<std::vector<bool>> mask(total, std::vector<bool>(total, false));
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t j = 0; j < total; ++j) {
            if (i < m) {
                mask[i][j] = j < m;
            } else {
                mask[i][j] = j < m || j == i;
            }
        }
    }

    auto ln = [&](const std::vector<double>& x, const std::vector<double>& gain,
                  const std::vector<double>& bias) {
        double mu = 0.0;
        for (const double val : x) mu += val;
        mu /= static_cast<double>(x.size());
        double var = 0.0;
        for (const double val : x) var += (val - mu) * (val - mu);
        var /= static_cast<double>(x.size());
        std::vector<double> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            out[j] = gain[j] * (x[j] - mu) / std::sqrt(var + cfg.layer_norm_eps) + bias[j];
        }
        return out;
    };
    auto row_of = [](const Matrix& mat, std::size_t i) {
        return std::vector<double>(mat.row(i).begin(), mat.row(i).end());
    };

    for (const auto& lw : w.layers) {
        Matrix normed(total, d);
        for (std::size_t i = 0; i < total; ++i) {
            const auto v = ln(row_of(tokens, i), lw.ln1_gain, lw.ln1_bias);
            normed.set_row(i, v);
        }
        const Matrix qm = tabmda::matmul(normed, lw.wq);
        const Matrix km = tabmda::matmul(normed, lw.wk);
        const Matrix vm = tabmda::matmul(normed, lw.wv);

        Matrix attn(total, d);
        for (std::size_t i = 0; i < total; ++i) {
            for (std::size_t h = 0; h < cfg.n_heads; ++h) {
                const std::size_t off = h * d_head;
                std::vector<double> scores(total, -std::numeric_limits<double>::infinity());
                double max_score = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < total; ++j) {
                    if (!mask[i][j]) continue;
                    double s = 0.0;
                    for (std::size_t kidx = 0; kidx < d_head; ++kidx) {
                        s += qm(i, off + kidx) * km(j, off + kidx);
                    }
                    scores[j] = s / std::sqrt(static_cast<double>(d_head));
                    max_score = std::max(max_score, scores[j]);
                }
                double denom = 0.0;
                for (std::size_t j = 0; j < total; ++j) {
                    if (!mask[i][j]) continue;
                    scores[j] = std::exp(scores[j] - max_score);
                    denom += scores[j];
                }
                for (std::size_t kidx = 0; kidx < d_head; ++kidx) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < total; ++j) {
                        if (!mask[i][j]) continue;
                        acc += scores[j] / denom * vm(j, off + kidx);
                    }
                    attn(i, off + kidx) = acc;
                }
            }
        }
        const Matrix attn_proj = tabmda::matmul(attn, lw.wo);
        for (std::size_t i = 0; i < total; ++i) {
            for (std::size_t j = 0; j < d; ++j) tokens(i, j) += attn_proj(i, j);
        }
        for (std::size_t i = 0; i < total; ++i) {
            const auto v = ln(row_of(tokens, i), lw.ln2_gain, lw.ln2_bias);
            std::vector<double> hidden(cfg.d_ff, 0.0);
            for (std::size_t hj = 0; hj < cfg.d_ff; ++hj) {
                double acc = lw.ff_b1[hj];
                for (std::size_t j = 0; j < d; ++j) acc += v[j] * lw.ff_w1(j, hj);
                hidden[hj] = 0.5 * acc * (1.0 + std::erf(acc / std::sqrt(2.0)));
            }
            for (std::size_t j = 0; j < d; ++j) {
                double acc = lw.ff_b2[j];
                for (std::size_t hj = 0; hj < cfg.d_ff; ++hj) acc += hidden[hj] * lw.ff_w2(hj, j);
                tokens(i, j) += acc;
            }
        }
    }

    Matrix out(q, d);
    for (std::size_t i = 0; i < q; ++i) out.set_row(i, tokens.row(m + i));
    return out;
}

// ---------------------------------------------------------------------------
// Exhaustive-scan cosine KNN.
// ---------------------------------------------------------------------------

inline std::vector<int> knn_scan(const tabmda::Matrix& train_x, const std::vector<int>& train_y,
                                 const tabmda::Matrix& queries, std::size_t k) {
    const std::size_t n = train_x.rows();
    std::vector<int> out;
    for (std::size_t qi = 0; qi < queries.rows(); ++qi) {
        std::vector<double> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t j = 0; j < queries.cols(); ++j) {
                dot += queries(qi, j) * train_x(i, j);
                na += queries(qi, j) * queries(qi, j);
                nb += train_x(i, j) * train_x(i, j);
            }
            dist[i] = (na == 0.0 || nb == 0.0) ? 1.0 : 1.0 - dot / std::sqrt(na * nb);
        }
        // Selection of the k nearest by repeated scan, ties to lower index.
        std::vector<bool> used(n, false);
        std::map<int, int> votes;
        for (std::size_t pick = 0; pick < std::min(k, n); ++pick) {
            std::size_t arg = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (used[i]) continue;
                if (arg == n || dist[i] < dist[arg]) arg = i;
            }
            used[arg] = true;
            votes[train_y[arg]] += 1;
        }
        int best_class = -1, best_votes = -1;
        for (const auto& [cls, count] : votes) {
            if (count > best_votes) {
                best_votes = count;
                best_class = cls;
            }
        }
        out.push_back(best_class);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exhaustive CART: every (feature, midpoint threshold) pair enumerated.
// ---------------------------------------------------------------------------

struct ScanTree {
    bool leaf = true;
    int label = 0;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::unique_ptr<ScanTree> left, right;
};

/// Exact Gini-gain ranking of a binary partition. Larger is better; ties are
/// exact rational ties. gain > 0 <=> sum_c nL_c^2/|L| + sum_c nR_c^2/|R| >
/// sum_c n_c^2 / n, all over integer counts.
struct GainFraction {
    long long num = 0;
    long long den = 1;

    bool positive_against(long long parent_sumsq, long long total) const {
        return static_cast<__int128>(num) * total >
               static_cast<__int128>(parent_sumsq) * den;
    }
    bool greater_than(const GainFraction& other) const {
        return static_cast<__int128>(num) * other.den >
               static_cast<__int128>(other.num) * den;
    }
};

inline long long sumsq_of(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
    std::map<int, long long> counts;
    for (const std::size_t i : idx) counts[y[i]] += 1;
    long long sumsq = 0;
    for (const auto& [cls, c] : counts) sumsq += c * c;
    return sumsq;
}

inline int majority_of(const std::vector<int>& y, const std::vector<std::size_t>& idx,
                       std::size_t classes) {
    std::vector<std::size_t> counts(classes, 0);
    for (const std::size_t i : idx) counts[static_cast<std::size_t>(y[i])] += 1;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
        if (counts[c] > counts[best]) best = c;
    }
    return static_cast<int>(best);
}

inline std::unique_ptr<ScanTree> build_scan_tree(const tabmda::Matrix& x,
                                                 const std::vector<int>& y,
                                                 std::vector<std::size_t> idx,
                                                 std::size_t classes, std::size_t depth,
                                                 std::size_t max_depth, std::size_t min_leaf) {
    auto node = std::make_unique<ScanTree>();
    node->label = majority_of(y, idx, classes);
    if (depth >= max_depth || idx.size() < 2 * min_leaf) return node;

    const long long parent_sumsq = sumsq_of(y, idx);
    const long long total = static_cast<long long>(idx.size());
    GainFraction best;
    bool found = false;
    std::size_t best_f = 0;
    double best_t = 0.0;
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::vector<double> values;
        for (const std::size_t i : idx) values.push_back(x(i, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t vi = 0; vi + 1 < values.size(); ++vi) {
            const double threshold = (values[vi] + values[vi + 1]) / 2.0;
            std::vector<std::size_t> l, r;
            for (const std::size_t i : idx) {
                (x(i, f) <= threshold ? l : r).push_back(i);
            }
            if (l.size() < min_leaf || r.size() < min_leaf) continue;
            const long long tl = static_cast<long long>(l.size());
            const long long tr = static_cast<long long>(r.size());
            const GainFraction gain{sumsq_of(y, l) * tr + sumsq_of(y, r) * tl, tl * tr};
            if (!gain.positive_against(parent_sumsq, total)) continue;
            if (!found || gain.greater_than(best)) {
                found = true;
                best = gain;
                best_f = f;
                best_t = threshold;
            }
        }
    }
    if (!found) return node;

    std::vector<std::size_t> l, r;
    for (const std::size_t i : idx) {
        (x(i, best_f) <= best_t ? l : r).push_back(i);
    }
    node->leaf = false;
    node->feature = best_f;
    node->threshold = best_t;
    node->left = build_scan_tree(x, y, std::move(l), classes, depth + 1, max_depth, min_leaf);
    node->right = build_scan_tree(x, y, std::move(r), classes, depth + 1, max_depth, min_leaf);
    return node;
}

inline int scan_tree_predict(const ScanTree* node, std::span<const double> row) {
    while (!node->leaf) {
        node = row[node->feature] <= node->threshold ? node->left.get() : node->right.get();
    }
    return node->label;
}

// ---------------------------------------------------------------------------
// Streaming mean/variance (Welford).
// ---------------------------------------------------------------------------

struct Welford {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }
    double sample_std() const {
        return count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) : 0.0;
    }
};

// ---------------------------------------------------------------------------
// Balanced accuracy from an explicit confusion matrix.
// ---------------------------------------------------------------------------

inline double confusion_balanced_accuracy(const std::vector<int>& y_true,
                                          const std::vector<int>& y_pred) {
    int classes = 0;
    for (const int v : y_true) classes = std::max(classes, v + 1);
    for (const int v : y_pred) classes = std::max(classes, v + 1);
    std::vector<std::vector<std::size_t>> confusion(
        static_cast<std::size_t>(classes), std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        confusion[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])] += 1;
    }
    double total = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < confusion.size(); ++c) {
        std::size_t row_sum = 0;
        for (const std::size_t v : confusion[c]) row_sum += v;
        if (row_sum == 0) continue;
        total += static_cast<double>(confusion[c][c]) / static_cast<double>(row_sum);
        present += 1;
    }
    return total / static_cast<double>(present);
}

// ---------------------------------------------------------------------------
// Min-one + largest-remainder quota, re-derived with a different structure.
// ---------------------------------------------------------------------------

inline std::vector<std::size_t> quota_reference(const std::vector<std::size_t>& sizes,
                                                std::size_t n) {
    const std::size_t c = sizes.size();
    std::size_t total = 0;
    for (const std::size_t s : sizes) total += s;

    std::vector<std::size_t> quota(c, 1);
    const std::size_t extra = n - c;
    std::vector<std::pair<double, std::size_t>> by_remainder;
    std::size_t given = 0;
    for (std::size_t i = 0; i < c; ++i) {
        const double ideal = static_cast<double>(extra) * sizes[i] / static_cast<double>(total);
        const double floored = std::floor(ideal);
        quota[i] += static_cast<std::size_t>(floored);
        if (quota[i] > sizes[i]) quota[i] = sizes[i];
        given += quota[i];
        by_remainder.emplace_back(-(ideal - floored), i); // negative: sort ascending
    }
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t left = n - given;
    while (left > 0) {
        bool any = false;
        for (const auto& [neg_rem, i] : by_remainder) {
            if (left == 0) break;
            if (quota[i] < sizes[i]) {
                quota[i] += 1;
                left -= 1;
                any = true;
            }
        }
        if (!any) break;
    }
    return quota;
}

} // namespace oracles
