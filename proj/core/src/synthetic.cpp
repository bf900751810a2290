#include "tabmda/synthetic.hpp"

#include <string>

#include "tabmda/errors.hpp"
#include "tabmda/rng.hpp"

namespace tabmda {

Dataset make_blobs(std::size_t n_samples, std::size_t n_features, std::size_t n_classes,
                   double class_std, std::uint64_t seed, double center_spread) {
    if (n_samples < n_classes || n_features == 0 || n_classes == 0) {
        throw ConfigError("make_blobs: need at least one sample per class");
    }
    Rng rng(seed);
    Matrix centers(n_classes, n_features);
    for (double& v : centers.data()) v = rng.next_normal() * center_spread;

    Dataset ds;
    ds.features = Matrix(n_samples, n_features);
    ds.labels.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t cls = i % n_classes;
        ds.labels.push_back(static_cast<int>(cls));
        auto row = ds.features.row(i);
        const auto center = centers.row(cls);
        for (std::size_t j = 0; j < n_features; ++j) {
            row[j] = center[j] + rng.next_normal() * class_std;
        }
    }
    for (std::size_t j = 0; j < n_features; ++j) {
        ds.feature_names.push_back("f" + std::to_string(j));
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        ds.class_names.push_back(std::to_string(c));
    }
    ds.source_id = "blobs";
    return ds;
}

} // namespace tabmda
