#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tabmda/dataset.hpp"
#include "tabmda/encoder.hpp"
#include "tabmda/matrix.hpp"

namespace tabmda {

/// In-context subsetting settings. When trivial_augment is set the context
/// fraction is drawn from U[0.5, 0.99) per (point, context) instead of using
/// context_fraction.
struct IcsParams {
    std::size_t k_contexts = 20;
    double context_fraction = 1.0;
    bool trivial_augment = false;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The (K*N) x D' training set produced by in-context subsetting. Row order
/// is source-point major: row i*K + k holds augmentation k of point i.
struct AugmentedDataset {
    Matrix embeddings;
    std::vector<int> labels;
    std::vector<std::pair<std::size_t, std::size_t>> provenance; // (source, context)
};

/// Per-class sample counts for a stratified draw of n out of the given class
/// sizes: one seat per class first, the remaining n - C seats by largest
/// remainder on class proportions (ties to the lower class index), capped at
/// the class size with deterministic redistribution of freed seats.
std::vector<std::size_t> stratified_quota(const std::vector<std::size_t>& class_sizes,
                                          std::size_t n);

/// Stratified sample of n indices without replacement, sorted ascending.
/// Within each class the members are drawn uniformly from the seeded PRNG.
/// Errors: ContextTooSmall when n < C, ContextTooLarge when n > N.
std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels, std::size_t n,
                                              std::uint64_t seed);

/// Encode one point against K stratified sub-contexts of the training set;
/// row k-1 of the result is the embedding under context k. Context k draws
/// its sample with seed splitmix64(params.seed XOR k), k = 1..K, so parallel
/// and sequential generation agree bit for bit.
Matrix ics_augment(const InContextEncoder& encoder, const IcsParams& params,
                   const Dataset& train, std::span<const double> point);

/// Apply ics_augment to every training point. Point i uses the derived base
/// seed splitmix64(params.seed XOR (golden-gamma * (i+1))); labels are
/// replicated K times with (source, context) provenance.
AugmentedDataset build_augmented_trainset(const InContextEncoder& encoder,
                                          const IcsParams& params, const Dataset& train);

/// Embed points against the full training set as context (the evaluation-time
/// encoding; equal to ics_augment with K = 1 and fraction 1).
Matrix embed_eval_points(const InContextEncoder& encoder, const Dataset& train,
                         const Matrix& points);

} // namespace tabmda
