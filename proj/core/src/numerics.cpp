#include "tabmda/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>

#include "tabmda/errors.hpp"

namespace tabmda {

namespace {

constexpr double kDegenerateStd = 1e-9;

} // namespace

StandardizeResult standardize_fit_apply(const Matrix& train,
                                        const std::vector<Matrix>& others) {
    if (train.rows() == 0) {
        throw EmptyInput("standardize: train matrix has no rows");
    }
    const std::size_t n = train.rows();
    const std::size_t d = train.cols();

    StandardizeStats stats;
    stats.mean.assign(d, 0.0);
    stats.scale.assign(d, 1.0);

    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += train(i, j);
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = train(i, j) - mean;
            sq += diff * diff;
        }
        const double std_dev = std::sqrt(sq / static_cast<double>(n));
        stats.mean[j] = mean;
        stats.scale[j] = std_dev < kDegenerateStd ? 1.0 : std_dev;
    }

    StandardizeResult result;
    result.stats = stats;
    result.train = apply_standardize(train, stats);
    result.others.reserve(others.size());
    for (const auto& m : others) {
        result.others.push_back(apply_standardize(m, stats));
    }
    return result;
}

Matrix apply_standardize(const Matrix& m, const StandardizeStats& stats) {
    if (m.cols() != stats.mean.size()) {
        throw ShapeError("standardize: column count does not match fitted stats");
    }
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = (m(i, j) - stats.mean[j]) / stats.scale[j];
        }
    }
    return out;
}

PcaResult pca_fit_project(const Matrix& data) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    if (n < 2 || d < 2) {
        throw InsufficientData("pca: need at least 2 rows and 2 columns");
    }

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += data(i, j);
        model.mean[j] = sum / static_cast<double>(n);
    }

    // Sample covariance, denominator N-1.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
    {
        Eigen::MatrixXd centered(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    data(i, j) - model.mean[j];
            }
        }
        cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw InsufficientData("pca: eigendecomposition failed");
    }

    // Eigen returns eigenvalues in increasing order; take the top two.
    model.components = Matrix(2, d);
    for (std::size_t comp = 0; comp < 2; ++comp) {
        const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - comp);
        model.explained_variance[comp] = std::max(0.0, solver.eigenvalues()(col));
        // Sign convention: the entry of largest absolute value (lowest index
        // on ties) must be nonnegative.
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double mag = std::abs(solver.eigenvectors()(static_cast<Eigen::Index>(j), col));
            if (mag > best) {
                best = mag;
                arg = j;
            }
        }
        const double flip =
            solver.eigenvectors()(static_cast<Eigen::Index>(arg), col) < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            model.components(comp, j) =
                flip * solver.eigenvectors()(static_cast<Eigen::Index>(j), col);
        }
    }

    PcaResult result;
    result.coordinates = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t comp = 0; comp < 2; ++comp) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                acc += (data(i, j) - model.mean[j]) * model.components(comp, j);
            }
            result.coordinates(i, comp) = acc;
        }
    }
    result.model = std::move(model);
    return result;
}

Matrix softmax_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        double max_val = -std::numeric_limits<double>::infinity();
        for (const double v : row) max_val = std::max(max_val, v);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double e = std::exp(row[j] - max_val);
            out(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) /= sum;
        }
    }
    return out;
}

} // namespace tabmda
