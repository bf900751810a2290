#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "tabmda/matrix.hpp"

namespace tabmda {

/// Fixed downstream-model settings; identical for real and augmented inputs.
struct Hyperparams {
    std::size_t knn_k = 5;
    std::size_t logreg_max_iter = 1000;
    double logreg_l2 = 1.0; // lambda = 1 / logreg_l2 on the per-sample-averaged loss
    std::size_t tree_max_depth = 3;
    std::size_t tree_min_leaf = 2;
    std::size_t forest_trees = 200;
    std::size_t gbdt_rounds = 200;
    double gbdt_lr = 0.3;
    std::size_t gbdt_depth = 3;
    double gbdt_lambda = 1.0;

    void validate() const;
};

enum class ClassifierKind { knn, logreg, tree, forest, gbdt };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view name);

/// A fitted model. predict_row accepts any row of the training feature width
/// and returns a class in [0, class_count).
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual int predict_row(std::span<const double> x) const = 0;
    virtual std::size_t class_count() const = 0;

    std::vector<int> predict(const Matrix& queries) const;
};

// ---------------------------------------------------------------------------
// k-nearest neighbours (cosine distance)
// ---------------------------------------------------------------------------

/// Cosine-distance KNN: distance 1 - a.b/(|a||b|), zero-norm rows at distance
/// 1 to everything. Distance ties break to the lower train index, vote ties
/// to the lower class index. Uses all points when the train set is smaller
/// than k.
std::vector<int> knn_predict(const Matrix& train_x, const std::vector<int>& train_y,
                             const Matrix& queries, std::size_t k = 5);

class KnnModel final : public Classifier {
public:
    KnnModel(Matrix train_x, std::vector<int> train_y, std::size_t k);
    int predict_row(std::span<const double> x) const override;
    std::size_t class_count() const override { return class_count_; }

private:
    Matrix train_x_;
    std::vector<int> train_y_;
    std::size_t k_;
    std::size_t class_count_;
};

// ---------------------------------------------------------------------------
// multinomial logistic regression
// ---------------------------------------------------------------------------

/// Per-sample-averaged multinomial cross-entropy plus (lambda/2)|W|^2; the
/// bias is unregularized. Used by the fitter and by gradient checks.
double logreg_loss(const Matrix& w, const std::vector<double>& b, const Matrix& x,
                   const std::vector<int>& y, double lambda);

/// Analytic gradient of logreg_loss; returns the loss value.
double logreg_loss_grad(const Matrix& w, const std::vector<double>& b, const Matrix& x,
                        const std::vector<int>& y, double lambda, Matrix& grad_w,
                        std::vector<double>& grad_b);

class LogRegModel final : public Classifier {
public:
    LogRegModel(Matrix w, std::vector<double> b) : w_(std::move(w)), b_(std::move(b)) {}
    int predict_row(std::span<const double> x) const override;
    std::size_t class_count() const override { return b_.size(); }

    const Matrix& weights() const { return w_; }
    const std::vector<double>& bias() const { return b_; }

private:
    Matrix w_; // D x C
    std::vector<double> b_;
};

/// Deterministic full-batch descent with Armijo backtracking; stops at
/// gradient norm < 1e-6 or after logreg_max_iter iterations.
LogRegModel logreg_fit(const Matrix& train_x, const std::vector<int>& train_y,
                       const Hyperparams& hp = {});

// ---------------------------------------------------------------------------
// CART decision tree and random forest
// ---------------------------------------------------------------------------

struct TreeNode {
    bool is_leaf = true;
    int label = 0;          // majority class at the node
    std::size_t feature = 0;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

class DecisionTreeModel final : public Classifier {
public:
    DecisionTreeModel(std::vector<TreeNode> nodes, std::size_t class_count)
        : nodes_(std::move(nodes)), class_count_(class_count) {}
    int predict_row(std::span<const double> x) const override;
    std::size_t class_count() const override { return class_count_; }

    const std::vector<TreeNode>& nodes() const { return nodes_; }

private:
    std::vector<TreeNode> nodes_;
    std::size_t class_count_;
};

/// Greedy CART with Gini impurity. Thresholds sit at midpoints of consecutive
/// distinct sorted values; gain ties break to the lower feature index, then
/// the lower threshold; leaves predict the majority class (ties to the lower
/// class index).
DecisionTreeModel tree_fit(const Matrix& train_x, const std::vector<int>& train_y,
                           const Hyperparams& hp = {});

class ForestModel final : public Classifier {
public:
    ForestModel(std::vector<DecisionTreeModel> trees, std::size_t class_count)
        : trees_(std::move(trees)), class_count_(class_count) {}
    int predict_row(std::span<const double> x) const override;
    std::size_t class_count() const override { return class_count_; }

    const std::vector<DecisionTreeModel>& trees() const { return trees_; }

private:
    std::vector<DecisionTreeModel> trees_;
    std::size_t class_count_;
};

/// Bagged CART trees: each tree sees a size-N bootstrap (derived seed per
/// tree) and floor(sqrt(D)) candidate features per split; majority vote with
/// ties to the lower class index.
ForestModel forest_fit(const Matrix& train_x, const std::vector<int>& train_y,
                       std::uint64_t seed, const Hyperparams& hp = {});

// ---------------------------------------------------------------------------
// gradient-boosted trees (softmax objective)
// ---------------------------------------------------------------------------

struct GbdtNode {
    bool is_leaf = true;
    double value = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

class GbdtModel final : public Classifier {
public:
    GbdtModel(std::vector<std::vector<std::vector<GbdtNode>>> rounds, double learning_rate,
              std::size_t class_count, std::vector<double> loss_history)
        : rounds_(std::move(rounds)), learning_rate_(learning_rate),
          class_count_(class_count), loss_history_(std::move(loss_history)) {}

    int predict_row(std::span<const double> x) const override;
    std::size_t class_count() const override { return class_count_; }

    /// Mean training cross-entropy before any round and after each round.
    const std::vector<double>& training_loss() const { return loss_history_; }

private:
    std::vector<std::vector<std::vector<GbdtNode>>> rounds_; // [round][class] -> tree
    double learning_rate_;
    std::size_t class_count_;
    std::vector<double> loss_history_;
};

/// Newton boosting on the multiclass softmax objective: one depth-limited
/// regression tree per class per round, leaf weight -G/(H+lambda), split gain
/// (G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l))/2 with non-positive gains
/// rejected.
GbdtModel gbdt_fit(const Matrix& train_x, const std::vector<int>& train_y,
                   const Hyperparams& hp = {});

// ---------------------------------------------------------------------------

/// Unweighted mean of per-class recall over the classes present in y_true.
double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// Factory used by the harness. The seed only matters to the forest.
std::unique_ptr<Classifier> fit_classifier(ClassifierKind kind, const Matrix& train_x,
                                           const std::vector<int>& train_y,
                                           std::uint64_t seed, const Hyperparams& hp = {});

} // namespace tabmda
