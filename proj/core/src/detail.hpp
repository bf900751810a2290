#pragma once

#include <algorithm>
#include <vector>

#include "tabmda/errors.hpp"

namespace tabmda::detail {

inline std::size_t infer_class_count(const std::vector<int>& y) {
    int max_label = -1;
    for (const int v : y) {
        if (v < 0) throw ShapeError("labels must be nonnegative");
        max_label = std::max(max_label, v);
    }
    return static_cast<std::size_t>(max_label) + 1;
}

inline std::size_t distinct_label_count(const std::vector<int>& y) {
    std::vector<bool> seen(infer_class_count(y), false);
    std::size_t distinct = 0;
    for (const int v : y) {
        if (!seen[static_cast<std::size_t>(v)]) {
            seen[static_cast<std::size_t>(v)] = true;
            distinct += 1;
        }
    }
    return distinct;
}

/// Argmax over class weights; ties go to the lower class index.
template <typename T>
inline int majority_class(const std::vector<T>& counts) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = c;
    }
    return static_cast<int>(best);
}

} // namespace tabmda::detail
