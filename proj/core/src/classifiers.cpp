#include "tabmda/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "detail.hpp"
#include "tabmda/errors.hpp"
#include "tabmda/numerics.hpp"

namespace tabmda {

void Hyperparams::validate() const {
    if (knn_k < 1 || logreg_max_iter < 1 || tree_max_depth < 1 || tree_min_leaf < 1 ||
        forest_trees < 1 || gbdt_rounds < 1 || gbdt_depth < 1) {
        throw ConfigError("hyperparams: counts must be positive");
    }
    if (logreg_l2 <= 0.0) throw ConfigError("hyperparams: logreg_l2 must be positive");
    if (!(gbdt_lr > 0.0 && gbdt_lr <= 1.0)) {
        throw ConfigError("hyperparams: gbdt_lr must be in (0, 1]");
    }
    if (gbdt_lambda < 0.0) throw ConfigError("hyperparams: gbdt_lambda must be >= 0");
}

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::knn: return "knn";
        case ClassifierKind::logreg: return "logreg";
        case ClassifierKind::tree: return "tree";
        case ClassifierKind::forest: return "forest";
        case ClassifierKind::gbdt: return "gbdt";
    }
    return "?";
}

ClassifierKind classifier_kind_from_string(std::string_view name) {
    if (name == "knn") return ClassifierKind::knn;
    if (name == "logreg") return ClassifierKind::logreg;
    if (name == "tree") return ClassifierKind::tree;
    if (name == "forest") return ClassifierKind::forest;
    if (name == "gbdt") return ClassifierKind::gbdt;
    throw ConfigError("unknown classifier '" + std::string(name) + "'");
}

std::vector<int> Classifier::predict(const Matrix& queries) const {
    std::vector<int> out;
    out.reserve(queries.rows());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        out.push_back(predict_row(queries.row(i)));
    }
    return out;
}

namespace {

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        dot += a[j] * b[j];
        na += a[j] * a[j];
        nb += b[j] * b[j];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

// ---------------------------------------------------------------------------
// KNN
// ---------------------------------------------------------------------------

std::vector<int> knn_predict(const Matrix& train_x, const std::vector<int>& train_y,
                             const Matrix& queries, std::size_t k) {
    KnnModel model(train_x, train_y, k);
    return model.predict(queries);
}

KnnModel::KnnModel(Matrix train_x, std::vector<int> train_y, std::size_t k)
    : train_x_(std::move(train_x)), train_y_(std::move(train_y)), k_(k) {
    if (train_x_.rows() == 0) throw EmptyTrain("knn: empty training set");
    if (train_x_.rows() != train_y_.size()) throw ShapeError("knn: rows and labels disagree");
    class_count_ = detail::infer_class_count(train_y_);
}

int KnnModel::predict_row(std::span<const double> x) const {
    if (x.size() != train_x_.cols()) throw ShapeError("knn: query width differs from train");
    const std::size_t n = train_x_.rows();
    const std::size_t k = std::min(k_, n);

    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = {cosine_distance(x, train_x_.row(i)), i};
    }
    // (distance, index) order implements the tie rule exactly.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    std::vector<double> votes(class_count_, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        votes[static_cast<std::size_t>(train_y_[dist[j].second])] += 1.0;
    }
    return detail::majority_class(votes);
}

// ---------------------------------------------------------------------------
// logistic regression
// ---------------------------------------------------------------------------

namespace {

/// Row scores x.W + b.
Matrix logreg_scores(const Matrix& w, const std::vector<double>& b, const Matrix& x) {
    Matrix scores = matmul(x, w);
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        for (std::size_t c = 0; c < scores.cols(); ++c) scores(i, c) += b[c];
    }
    return scores;
}

} // namespace

double logreg_loss(const Matrix& w, const std::vector<double>& b, const Matrix& x,
                   const std::vector<int>& y, double lambda) {
    const std::size_t n = x.rows();
    const Matrix probs = softmax_rows(logreg_scores(w, b, x));
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loss -= std::log(std::max(probs(i, static_cast<std::size_t>(y[i])), 1e-300));
    }
    loss /= static_cast<double>(n);
    double reg = 0.0;
    for (const double v : w.data()) reg += v * v;
    return loss + 0.5 * lambda * reg;
}

double logreg_loss_grad(const Matrix& w, const std::vector<double>& b, const Matrix& x,
                        const std::vector<int>& y, double lambda, Matrix& grad_w,
                        std::vector<double>& grad_b) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t classes = w.cols();

    const Matrix probs = softmax_rows(logreg_scores(w, b, x));
    double loss = 0.0;
    Matrix residual(n, classes);
    for (std::size_t i = 0; i < n; ++i) {
        loss -= std::log(std::max(probs(i, static_cast<std::size_t>(y[i])), 1e-300));
        for (std::size_t c = 0; c < classes; ++c) {
            residual(i, c) = probs(i, c) - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
        }
    }
    loss /= static_cast<double>(n);

    grad_w = Matrix(d, classes);
    grad_b.assign(classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double xij = x(i, j);
            for (std::size_t c = 0; c < classes; ++c) {
                grad_w(j, c) += xij * residual(i, c);
            }
        }
        for (std::size_t c = 0; c < classes; ++c) grad_b[c] += residual(i, c);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double reg = 0.0;
    for (std::size_t idx = 0; idx < grad_w.data().size(); ++idx) {
        grad_w.data()[idx] = grad_w.data()[idx] * inv_n + lambda * w.data()[idx];
        reg += w.data()[idx] * w.data()[idx];
    }
    for (double& g : grad_b) g *= inv_n;
    return loss + 0.5 * lambda * reg;
}

LogRegModel logreg_fit(const Matrix& train_x, const std::vector<int>& train_y,
                       const Hyperparams& hp) {
    hp.validate();
    if (train_x.rows() < 2) throw EmptyTrain("logreg: need at least 2 samples");
    if (train_x.rows() != train_y.size()) throw ShapeError("logreg: rows and labels disagree");
    const std::size_t classes = detail::infer_class_count(train_y);
    if (detail::distinct_label_count(train_y) < 2) {
        throw SingleClassError("logreg: need at least 2 distinct classes");
    }

    const double lambda = 1.0 / hp.logreg_l2;
    const std::size_t d = train_x.cols();
    Matrix w(d, classes);
    std::vector<double> b(classes, 0.0);

    Matrix grad_w;
    std::vector<double> grad_b;
    double step = 1.0;
    constexpr double armijo_c = 1e-4;
    for (std::size_t iter = 0; iter < hp.logreg_max_iter; ++iter) {
        const double loss = logreg_loss_grad(w, b, train_x, train_y, lambda, grad_w, grad_b);
        double grad_sq = 0.0;
        for (const double g : grad_w.data()) grad_sq += g * g;
        for (const double g : grad_b) grad_sq += g * g;
        if (std::sqrt(grad_sq) < 1e-6) break;

        // Armijo backtracking from the last accepted step (doubled once).
        double t = std::min(step * 2.0, 1e4);
        while (t > 1e-16) {
            Matrix w_try = w;
            std::vector<double> b_try = b;
            for (std::size_t idx = 0; idx < w.data().size(); ++idx) {
                w_try.data()[idx] -= t * grad_w.data()[idx];
            }
            for (std::size_t c = 0; c < classes; ++c) b_try[c] -= t * grad_b[c];
            if (logreg_loss(w_try, b_try, train_x, train_y, lambda) <=
                loss - armijo_c * t * grad_sq) {
                w = std::move(w_try);
                b = std::move(b_try);
                break;
            }
            t *= 0.5;
        }
        step = t;
        if (t <= 1e-16) break;
    }
    return LogRegModel(std::move(w), std::move(b));
}

int LogRegModel::predict_row(std::span<const double> x) const {
    if (x.size() != w_.rows()) throw ShapeError("logreg: query width differs from train");
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < b_.size(); ++c) {
        double s = b_[c];
        for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * w_(j, c);
        if (s > best_score) {
            best_score = s;
            best = c;
        }
    }
    return static_cast<int>(best);
}

// ---------------------------------------------------------------------------
// balanced accuracy
// ---------------------------------------------------------------------------

double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw ShapeError("balanced_accuracy: length mismatch");
    }
    if (y_true.empty()) throw ShapeError("balanced_accuracy: empty inputs");

    const std::size_t classes =
        std::max(detail::infer_class_count(y_true), detail::infer_class_count(y_pred));
    std::vector<std::size_t> support(classes, 0), hits(classes, 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const auto t = static_cast<std::size_t>(y_true[i]);
        support[t] += 1;
        if (y_true[i] == y_pred[i]) hits[t] += 1;
    }
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (support[c] == 0) continue;
        sum += static_cast<double>(hits[c]) / static_cast<double>(support[c]);
        present += 1;
    }
    return sum / static_cast<double>(present);
}

std::unique_ptr<Classifier> fit_classifier(ClassifierKind kind, const Matrix& train_x,
                                           const std::vector<int>& train_y,
                                           std::uint64_t seed, const Hyperparams& hp) {
    switch (kind) {
        case ClassifierKind::knn:
            return std::make_unique<KnnModel>(train_x, train_y, hp.knn_k);
        case ClassifierKind::logreg:
            return std::make_unique<LogRegModel>(logreg_fit(train_x, train_y, hp));
        case ClassifierKind::tree:
            return std::make_unique<DecisionTreeModel>(tree_fit(train_x, train_y, hp));
        case ClassifierKind::forest:
            return std::make_unique<ForestModel>(forest_fit(train_x, train_y, seed, hp));
        case ClassifierKind::gbdt:
            return std::make_unique<GbdtModel>(gbdt_fit(train_x, train_y, hp));
    }
    throw ConfigError("fit_classifier: unknown kind");
}

} // namespace tabmda
