#include "tabmda/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabmda/errors.hpp"
#include "tabmda/rng.hpp"

namespace tabmda {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

std::vector<std::size_t> class_sizes_of(const std::vector<int>& labels) {
    int max_label = -1;
    for (const int y : labels) {
        if (y < 0) throw ShapeError("stratified sampling: negative label");
        max_label = std::max(max_label, y);
    }
    std::vector<std::size_t> sizes(static_cast<std::size_t>(max_label) + 1, 0);
    for (const int y : labels) sizes[static_cast<std::size_t>(y)] += 1;
    return sizes;
}

/// Context size for a fraction: at least one seat per class, otherwise the
/// rounded share of the training set.
std::size_t fraction_to_count(double fraction, std::size_t n_train, std::size_t n_classes) {
    const auto rounded = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_train)));
    return std::min(n_train, std::max(n_classes, rounded));
}

} // namespace

void IcsParams::validate() const {
    if (k_contexts < 1) throw ConfigError("ics: k_contexts must be >= 1");
    if (!trivial_augment && !(context_fraction > 0.0 && context_fraction <= 1.0)) {
        throw ConfigError("ics: context_fraction must be in (0, 1]");
    }
}

std::vector<std::size_t> stratified_quota(const std::vector<std::size_t>& class_sizes,
                                          std::size_t n) {
    const std::size_t c = class_sizes.size();
    const std::size_t total = std::accumulate(class_sizes.begin(), class_sizes.end(),
                                              std::size_t{0});
    if (n < c) throw ContextTooSmall("stratified sampling: n smaller than class count");
    if (n > total) throw ContextTooLarge("stratified sampling: n larger than population");

    const std::size_t extra_seats = n - c;
    std::vector<std::size_t> quota(c);
    std::vector<double> remainder(c);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < c; ++i) {
        const double ideal =
            static_cast<double>(extra_seats) * static_cast<double>(class_sizes[i]) /
            static_cast<double>(total);
        const auto floored = static_cast<std::size_t>(std::floor(ideal));
        quota[i] = std::min(class_sizes[i], 1 + floored);
        remainder[i] = ideal - static_cast<double>(floored);
        assigned += quota[i];
    }

    // Hand out the remaining seats by descending remainder (ascending class
    // index on ties), skipping full classes; cycle until none are left.
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainder[a] > remainder[b];
    });
    std::size_t deficit = n - assigned;
    while (deficit > 0) {
        bool progressed = false;
        for (const std::size_t i : order) {
            if (deficit == 0) break;
            if (quota[i] < class_sizes[i]) {
                quota[i] += 1;
                deficit -= 1;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    return quota;
}

std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels, std::size_t n,
                                              std::uint64_t seed) {
    if (labels.empty()) throw EmptyInput("stratified sampling: no labels");
    const auto sizes = class_sizes_of(labels);
    std::vector<std::vector<std::size_t>> members(sizes.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    // Dense labels are not required here; empty classes get no seats.
    std::vector<std::size_t> present_sizes;
    std::vector<std::size_t> present_classes;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (sizes[c] > 0) {
            present_sizes.push_back(sizes[c]);
            present_classes.push_back(c);
        }
    }
    const auto quota = stratified_quota(present_sizes, n);

    Rng rng(seed);
    std::vector<std::size_t> picked;
    picked.reserve(n);
    for (std::size_t pc = 0; pc < present_classes.size(); ++pc) {
        auto& pool = members[present_classes[pc]];
        const std::size_t take = quota[pc];
        // Partial Fisher-Yates over the class pool (ascending original order).
        for (std::size_t j = 0; j < take; ++j) {
            const std::size_t swap_with = j + rng.next_below(pool.size() - j);
            std::swap(pool[j], pool[swap_with]);
            picked.push_back(pool[j]);
        }
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

Matrix ics_augment(const InContextEncoder& encoder, const IcsParams& params,
                   const Dataset& train, std::span<const double> point) {
    params.validate();
    if (point.size() != train.dim()) {
        throw ShapeError("ics_augment: point width differs from training features");
    }
    const std::size_t n_train = train.size();
    const std::size_t n_classes = class_sizes_of(train.labels).size();

    Matrix queries(1, point.size());
    queries.set_row(0, point);

    Matrix out(params.k_contexts, encoder.embedding_dim());
    for (std::size_t k = 1; k <= params.k_contexts; ++k) {
        const std::uint64_t ctx_seed = derive_seed(params.seed, k);
        double fraction = params.context_fraction;
        if (params.trivial_augment) {
            Rng fraction_rng(ctx_seed);
            fraction = 0.5 + 0.49 * fraction_rng.next_double();
        }
        const std::size_t n_ctx = fraction_to_count(fraction, n_train, n_classes);
        const auto indices = stratified_subsample(train.labels, n_ctx, ctx_seed);

        Context ctx;
        ctx.features = select_rows(train.features, indices);
        ctx.labels.reserve(indices.size());
        for (const std::size_t idx : indices) ctx.labels.push_back(train.labels[idx]);

        const Matrix embedded = encoder.embed(ctx, queries);
        out.set_row(k - 1, embedded.row(0));
    }
    return out;
}

AugmentedDataset build_augmented_trainset(const InContextEncoder& encoder,
                                          const IcsParams& params, const Dataset& train) {
    params.validate();
    const std::size_t n = train.size();
    const std::size_t k = params.k_contexts;

    AugmentedDataset aug;
    aug.embeddings = Matrix(n * k, encoder.embedding_dim());
    aug.labels.reserve(n * k);
    aug.provenance.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        IcsParams point_params = params;
        point_params.seed = derive_seed(params.seed, kGoldenGamma * (i + 1));
        const Matrix rows = ics_augment(encoder, point_params, train, train.features.row(i));
        for (std::size_t kk = 0; kk < k; ++kk) {
            aug.embeddings.set_row(i * k + kk, rows.row(kk));
            aug.labels.push_back(train.labels[i]);
            aug.provenance.emplace_back(i, kk);
        }
    }
    return aug;
}

Matrix embed_eval_points(const InContextEncoder& encoder, const Dataset& train,
                         const Matrix& points) {
    if (points.rows() > 0 && points.cols() != train.dim()) {
        throw ShapeError("embed_eval_points: point width differs from training features");
    }
    if (points.rows() == 0) {
        return Matrix(0, encoder.embedding_dim());
    }
    Context ctx;
    ctx.features = train.features;
    ctx.labels = train.labels;
    return encoder.embed(ctx, points);
}

} // namespace tabmda
