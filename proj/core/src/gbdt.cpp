#include <algorithm>
#include <cmath>
#include <numeric>

#include "detail.hpp"
#include "tabmda/classifiers.hpp"
#include "tabmda/errors.hpp"
#include "tabmda/numerics.hpp"

namespace tabmda {

namespace {

/// Depth-limited regression tree on gradient/hessian statistics with Newton
/// leaf weights -G/(H+lambda).
class GbdtTreeBuilder {
public:
    GbdtTreeBuilder(const Matrix& x, const std::vector<double>& grad,
                    const std::vector<double>& hess, double lambda, std::size_t max_depth)
        : x_(x), grad_(grad), hess_(hess), lambda_(lambda), max_depth_(max_depth) {}

    std::vector<GbdtNode> build() {
        nodes_.clear();
        std::vector<std::size_t> all(x_.rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
        build_node(std::move(all), 0);
        return std::move(nodes_);
    }

private:
    double score(double g, double h) const { return g * g / (h + lambda_); }

    int build_node(std::vector<std::size_t> indices, std::size_t depth) {
        double g_total = 0.0, h_total = 0.0;
        for (const std::size_t i : indices) {
            g_total += grad_[i];
            h_total += hess_[i];
        }

        const int node_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[node_id].value = -g_total / (h_total + lambda_);
        if (depth >= max_depth_ || indices.size() < 2) {
            return node_id;
        }

        // Best split by Newton gain; non-positive gains rejected; ties go to
        // the lower feature index, then the lower threshold.
        bool found = false;
        std::size_t best_feature = 0;
        double best_threshold = 0.0, best_gain = 0.0;
        std::vector<std::pair<double, std::size_t>> ordered(indices.size());
        for (std::size_t f = 0; f < x_.cols(); ++f) {
            for (std::size_t j = 0; j < indices.size(); ++j) {
                ordered[j] = {x_(indices[j], f), indices[j]};
            }
            std::sort(ordered.begin(), ordered.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double g_left = 0.0, h_left = 0.0;
            for (std::size_t j = 0; j + 1 < ordered.size(); ++j) {
                const auto [value, idx] = ordered[j];
                g_left += grad_[idx];
                h_left += hess_[idx];
                if (ordered[j + 1].first <= value) continue;
                const double gain = 0.5 * (score(g_left, h_left) +
                                           score(g_total - g_left, h_total - h_left) -
                                           score(g_total, h_total));
                if (gain > 0.0 && gain > best_gain) {
                    found = true;
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = (value + ordered[j + 1].first) / 2.0;
                }
            }
        }
        if (!found) {
            return node_id;
        }

        std::vector<std::size_t> left, right;
        left.reserve(indices.size());
        right.reserve(indices.size());
        for (const std::size_t i : indices) {
            (x_(i, best_feature) <= best_threshold ? left : right).push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        nodes_[node_id].is_leaf = false;
        nodes_[node_id].feature = best_feature;
        nodes_[node_id].threshold = best_threshold;
        const int left_id = build_node(std::move(left), depth + 1);
        nodes_[node_id].left = left_id;
        const int right_id = build_node(std::move(right), depth + 1);
        nodes_[node_id].right = right_id;
        return node_id;
    }

    const Matrix& x_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    double lambda_;
    std::size_t max_depth_;
    std::vector<GbdtNode> nodes_;
};

double tree_value(const std::vector<GbdtNode>& nodes, std::span<const double> x) {
    const GbdtNode* node = &nodes[0];
    while (!node->is_leaf) {
        if (x[node->feature] <= node->threshold) {
            node = &nodes[static_cast<std::size_t>(node->left)];
        } else {
            node = &nodes[static_cast<std::size_t>(node->right)];
        }
    }
    return node->value;
}

double mean_cross_entropy(const Matrix& scores, const std::vector<int>& y) {
    const Matrix probs = softmax_rows(scores);
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        loss -= std::log(std::max(probs(i, static_cast<std::size_t>(y[i])), 1e-300));
    }
    return loss / static_cast<double>(scores.rows());
}

} // namespace

GbdtModel gbdt_fit(const Matrix& train_x, const std::vector<int>& train_y,
                   const Hyperparams& hp) {
    hp.validate();
    if (train_x.rows() == 0) throw EmptyTrain("gbdt: empty training set");
    if (train_x.rows() != train_y.size()) throw ShapeError("gbdt: rows and labels disagree");
    const std::size_t classes = detail::infer_class_count(train_y);
    if (detail::distinct_label_count(train_y) < 2) {
        throw SingleClassError("gbdt: need at least 2 distinct classes");
    }

    const std::size_t n = train_x.rows();
    Matrix scores(n, classes);
    std::vector<double> loss_history;
    loss_history.reserve(hp.gbdt_rounds + 1);
    loss_history.push_back(mean_cross_entropy(scores, train_y));

    std::vector<std::vector<std::vector<GbdtNode>>> rounds;
    rounds.reserve(hp.gbdt_rounds);
    std::vector<double> grad(n), hess(n);
    for (std::size_t round = 0; round < hp.gbdt_rounds; ++round) {
        const Matrix probs = softmax_rows(scores);
        std::vector<std::vector<GbdtNode>> class_trees;
        class_trees.reserve(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = probs(i, c);
                grad[i] = p - (static_cast<std::size_t>(train_y[i]) == c ? 1.0 : 0.0);
                hess[i] = p * (1.0 - p);
            }
            GbdtTreeBuilder builder(train_x, grad, hess, hp.gbdt_lambda, hp.gbdt_depth);
            class_trees.push_back(builder.build());
            for (std::size_t i = 0; i < n; ++i) {
                scores(i, c) += hp.gbdt_lr * tree_value(class_trees.back(), train_x.row(i));
            }
        }
        rounds.push_back(std::move(class_trees));
        loss_history.push_back(mean_cross_entropy(scores, train_y));
    }
    return GbdtModel(std::move(rounds), hp.gbdt_lr, classes, std::move(loss_history));
}

int GbdtModel::predict_row(std::span<const double> x) const {
    std::vector<double> scores(class_count_, 0.0);
    for (const auto& round : rounds_) {
        for (std::size_t c = 0; c < class_count_; ++c) {
            scores[c] += learning_rate_ * tree_value(round[c], x);
        }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < class_count_; ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return static_cast<int>(best);
}

} // namespace tabmda
