#pragma once

#include <random>

#include "core/model.hpp"

namespace frugal::test {

/// Random matrix with N(0,1) entries, deterministic per seed.
inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    return Matrix::NullaryExpr(rows, cols, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
}

/// Random square matrix rescaled to the requested spectral radius.
inline Matrix random_stable_matrix(Eigen::Index n, double radius, std::uint64_t seed) {
    Matrix m = random_matrix(n, n, seed);
    const double rho = linalg::spectral_radius(m);
    return m * (radius / rho);
}

inline Matrix random_spd_matrix(Eigen::Index n, std::uint64_t seed) {
    Matrix a = random_matrix(n, n, seed);
    return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

/// Batch-means estimate of the covariance of z_t from a single long
/// stationary run: mean over batches plus a per-entry standard error that
/// absorbs autocorrelation.
struct CovarianceEstimate {
    Matrix mean;
    Matrix se;
};

inline CovarianceEstimate batch_covariance(const Matrix& samples, int batches) {
    const Eigen::Index dim = samples.cols();
    const Eigen::Index per = samples.rows() / batches;
    std::vector<Matrix> estimates;
    for (int b = 0; b < batches; ++b) {
        Matrix block = samples.middleRows(b * per, per);
        Eigen::RowVectorXd mu = block.colwise().mean();
        Matrix centered = block.rowwise() - mu;
        estimates.push_back(centered.transpose() * centered / double(per - 1));
    }
    CovarianceEstimate out;
    out.mean = Matrix::Zero(dim, dim);
    for (const Matrix& e : estimates) out.mean += e;
    out.mean /= batches;
    Matrix var = Matrix::Zero(dim, dim);
    for (const Matrix& e : estimates) var += (e - out.mean).cwiseProduct(e - out.mean);
    var /= (batches - 1);
    out.se = (var / batches).cwiseSqrt();
    return out;
}

inline WorldModel scalar_world(double d, double e, double q, double r) {
    return WorldModel::isotropic(Matrix::Constant(1, 1, d), Matrix::Constant(1, 1, e), q, r);
}

inline CostWeights scalar_weights(double cs, double ca, double cb) {
    CostWeights w;
    w.C_s = Matrix::Constant(1, 1, cs);
    w.C_a = Matrix::Constant(1, 1, ca);
    w.C_b = cb;
    return w;
}

inline Strategy scalar_strategy(double phi, double psi) {
    Strategy s;
    s.Phi = Matrix::Constant(1, 1, phi);
    s.Psi = Matrix::Constant(1, 1, psi);
    return s;
}

} // namespace frugal::test
