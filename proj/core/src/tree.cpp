#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "detail.hpp"
#include "tabmda/classifiers.hpp"
#include "tabmda/errors.hpp"
#include "tabmda/rng.hpp"

namespace tabmda {

namespace {

// Sample weights are integer multiplicities (1 for a plain tree, bootstrap
// counts for forest trees), so Gini-gain comparisons can be exact: maximizing
// the weighted-Gini decrease equals maximizing
//   S = sumsq(L)/t_L + sumsq(R)/t_R
// where sumsq is the sum of squared class counts. Candidates are compared as
// exact fractions, which makes the documented tie rule (lowest feature, then
// lowest threshold) meaningful instead of rounding noise.
struct BestSplit {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::int64_t s_num = 0;
    std::int64_t s_den = 1;
};

bool fraction_greater(std::int64_t a_num, std::int64_t a_den, std::int64_t b_num,
                      std::int64_t b_den) {
    return static_cast<__int128>(a_num) * b_den > static_cast<__int128>(b_num) * a_den;
}

class CartBuilder {
public:
    CartBuilder(const Matrix& x, const std::vector<int>& y,
                const std::vector<std::int64_t>& weights, std::size_t class_count,
                std::size_t max_depth, std::int64_t min_leaf, std::size_t features_per_split,
                Rng* rng)
        : x_(x), y_(y), weights_(weights), class_count_(class_count), max_depth_(max_depth),
          min_leaf_(min_leaf), features_per_split_(features_per_split), rng_(rng) {}

    std::vector<TreeNode> build(std::vector<std::size_t> root_indices) {
        nodes_.clear();
        build_node(std::move(root_indices), 0);
        return std::move(nodes_);
    }

private:
    int build_node(std::vector<std::size_t> indices, std::size_t depth) {
        std::vector<std::int64_t> class_counts(class_count_, 0);
        std::int64_t total = 0;
        for (const std::size_t i : indices) {
            class_counts[static_cast<std::size_t>(y_[i])] += weights_[i];
            total += weights_[i];
        }

        const int node_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[node_id].label = detail::majority_class(class_counts);

        if (depth >= max_depth_ || total < 2 * min_leaf_) {
            return node_id;
        }
        const BestSplit split = find_split(indices, class_counts, total);
        if (!split.found) {
            return node_id;
        }

        std::vector<std::size_t> left, right;
        left.reserve(indices.size());
        right.reserve(indices.size());
        for (const std::size_t i : indices) {
            (x_(i, split.feature) <= split.threshold ? left : right).push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        nodes_[node_id].is_leaf = false;
        nodes_[node_id].feature = split.feature;
        nodes_[node_id].threshold = split.threshold;
        const int left_id = build_node(std::move(left), depth + 1);
        nodes_[node_id].left = left_id;
        const int right_id = build_node(std::move(right), depth + 1);
        nodes_[node_id].right = right_id;
        return node_id;
    }

    BestSplit find_split(const std::vector<std::size_t>& indices,
                         const std::vector<std::int64_t>& class_counts, std::int64_t total) {
        std::int64_t parent_sumsq = 0; // sum of squared class counts
        for (const std::int64_t c : class_counts) parent_sumsq += c * c;

        std::vector<std::size_t> features;
        if (features_per_split_ > 0 && features_per_split_ < x_.cols()) {
            // Partial Fisher-Yates over the feature range, then ascending
            // order so tie-breaking matches the full-feature rule.
            std::vector<std::size_t> all(x_.cols());
            std::iota(all.begin(), all.end(), std::size_t{0});
            for (std::size_t j = 0; j < features_per_split_; ++j) {
                const std::size_t pick = j + rng_->next_below(all.size() - j);
                std::swap(all[j], all[pick]);
            }
            features.assign(all.begin(),
                            all.begin() + static_cast<std::ptrdiff_t>(features_per_split_));
            std::sort(features.begin(), features.end());
        } else {
            features.resize(x_.cols());
            std::iota(features.begin(), features.end(), std::size_t{0});
        }

        BestSplit best;
        std::vector<std::pair<double, std::size_t>> ordered(indices.size());
        std::vector<std::int64_t> left_counts(class_count_);
        for (const std::size_t f : features) {
            for (std::size_t j = 0; j < indices.size(); ++j) {
                ordered[j] = {x_(indices[j], f), indices[j]};
            }
            std::sort(ordered.begin(), ordered.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::fill(left_counts.begin(), left_counts.end(), 0);
            std::int64_t left_total = 0;
            std::int64_t sumsq_left = 0;
            std::int64_t sumsq_right = parent_sumsq;
            for (std::size_t j = 0; j + 1 < ordered.size(); ++j) {
                const auto [value, idx] = ordered[j];
                const auto cls = static_cast<std::size_t>(y_[idx]);
                const std::int64_t w = weights_[idx];
                sumsq_left += 2 * left_counts[cls] * w + w * w;
                const std::int64_t right_count = class_counts[cls] - left_counts[cls];
                sumsq_right += -2 * right_count * w + w * w;
                left_counts[cls] += w;
                left_total += w;
                if (ordered[j + 1].first <= value) continue; // same value group
                const std::int64_t right_total = total - left_total;
                if (left_total < min_leaf_ || right_total < min_leaf_) continue;

                const std::int64_t s_num = sumsq_left * right_total + sumsq_right * left_total;
                const std::int64_t s_den = left_total * right_total;
                // Positive gain <=> S > parent_sumsq / total.
                const bool positive = static_cast<__int128>(s_num) * total >
                                      static_cast<__int128>(parent_sumsq) * s_den;
                if (!positive) continue;
                if (!best.found || fraction_greater(s_num, s_den, best.s_num, best.s_den)) {
                    best.found = true;
                    best.s_num = s_num;
                    best.s_den = s_den;
                    best.feature = f;
                    best.threshold = (value + ordered[j + 1].first) / 2.0;
                }
            }
        }
        return best;
    }

    const Matrix& x_;
    const std::vector<int>& y_;
    const std::vector<std::int64_t>& weights_;
    std::size_t class_count_;
    std::size_t max_depth_;
    std::int64_t min_leaf_;
    std::size_t features_per_split_;
    Rng* rng_;
    std::vector<TreeNode> nodes_;
};

} // namespace

DecisionTreeModel tree_fit(const Matrix& train_x, const std::vector<int>& train_y,
                           const Hyperparams& hp) {
    hp.validate();
    if (train_x.rows() < 2) throw EmptyTrain("tree: need at least 2 samples");
    if (train_x.rows() != train_y.size()) throw ShapeError("tree: rows and labels disagree");

    const std::size_t classes = detail::infer_class_count(train_y);
    const std::vector<std::int64_t> unit_weights(train_x.rows(), 1);
    std::vector<std::size_t> all(train_x.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});

    CartBuilder builder(train_x, train_y, unit_weights, classes, hp.tree_max_depth,
                        static_cast<std::int64_t>(hp.tree_min_leaf), 0, nullptr);
    return DecisionTreeModel(builder.build(std::move(all)), classes);
}

int DecisionTreeModel::predict_row(std::span<const double> x) const {
    const TreeNode* node = &nodes_[0];
    while (!node->is_leaf) {
        if (x[node->feature] <= node->threshold) {
            node = &nodes_[static_cast<std::size_t>(node->left)];
        } else {
            node = &nodes_[static_cast<std::size_t>(node->right)];
        }
    }
    return node->label;
}

ForestModel forest_fit(const Matrix& train_x, const std::vector<int>& train_y,
                       std::uint64_t seed, const Hyperparams& hp) {
    hp.validate();
    if (train_x.rows() < 2) throw EmptyTrain("forest: need at least 2 samples");
    if (train_x.rows() != train_y.size()) throw ShapeError("forest: rows and labels disagree");

    const std::size_t n = train_x.rows();
    const std::size_t classes = detail::infer_class_count(train_y);
    const auto features_per_split = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(train_x.cols())))));

    std::vector<DecisionTreeModel> trees;
    trees.reserve(hp.forest_trees);
    for (std::size_t t = 0; t < hp.forest_trees; ++t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::int64_t> weights(n, 0);
        for (std::size_t draw = 0; draw < n; ++draw) {
            weights[rng.next_below(n)] += 1;
        }
        std::vector<std::size_t> in_bag;
        in_bag.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (weights[i] > 0) in_bag.push_back(i);
        }
        CartBuilder builder(train_x, train_y, weights, classes, hp.tree_max_depth,
                            static_cast<std::int64_t>(hp.tree_min_leaf), features_per_split,
                            &rng);
        trees.emplace_back(builder.build(std::move(in_bag)), classes);
    }
    return ForestModel(std::move(trees), classes);
}

int ForestModel::predict_row(std::span<const double> x) const {
    std::vector<std::int64_t> votes(class_count_, 0);
    for (const auto& tree : trees_) {
        votes[static_cast<std::size_t>(tree.predict_row(x))] += 1;
    }
    return detail::majority_class(votes);
}

} // namespace tabmda
