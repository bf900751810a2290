#pragma once

#include <cstdint>

#include "tabmda/dataset.hpp"

namespace tabmda {

/// Seeded Gaussian-blobs dataset: one normal cluster per class with centers
/// drawn from N(0, center_spread^2) and within-class std class_std. Labels
/// cycle through the classes, so counts are balanced up to remainder.
Dataset make_blobs(std::size_t n_samples, std::size_t n_features, std::size_t n_classes,
                   double class_std, std::uint64_t seed, double center_spread = 3.0);

} // namespace tabmda
