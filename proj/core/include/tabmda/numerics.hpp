#pragma once

#include <array>
#include <vector>

#include "tabmda/matrix.hpp"

namespace tabmda {

/// Per-column location/scale from a fit set. `scale` holds the divisor that
/// was actually applied: 1.0 for columns whose std fell below 1e-9.
struct StandardizeStats {
    std::vector<double> mean;
    std::vector<double> scale;
};

struct StandardizeResult {
    Matrix train;
    std::vector<Matrix> others;
    StandardizeStats stats;
};

/// Column-wise z-scoring. Statistics (mean, population std) come from `train`
/// alone and are applied to `train` and every matrix in `others`.
StandardizeResult standardize_fit_apply(const Matrix& train,
                                        const std::vector<Matrix>& others = {});

/// Apply previously fitted stats to another matrix of the same width.
Matrix apply_standardize(const Matrix& m, const StandardizeStats& stats);

/// Two-component PCA model. Component rows are orthonormal; the entry of
/// largest absolute value in each row is nonnegative (lowest index wins ties).
struct PcaModel {
    std::vector<double> mean;                    // length D
    Matrix components;                           // 2 x D
    std::array<double, 2> explained_variance{};  // nonincreasing
};

struct PcaResult {
    PcaModel model;
    Matrix coordinates; // N x 2: (data - mean) * components^T
};

/// Fit the top-2 principal components of the sample covariance (denominator
/// N-1) and project the data onto them.
PcaResult pca_fit_project(const Matrix& data);

/// Row-wise softmax computed with max-subtraction.
Matrix softmax_rows(const Matrix& m);

} // namespace tabmda
