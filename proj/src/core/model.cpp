#include "core/model.hpp"

#include <string>

namespace frugal {

namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(rows) +
                                "x" + std::to_string(cols) + ", got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

} // namespace

void WorldModel::check_shapes() const {
    const Eigen::Index n = state_dim();
    const Eigen::Index m = action_dim();
    if (n <= 0 || m <= 0) throw DimensionMismatch("world dimensions must be positive");
    require_shape(D, n, n, "world D");
    require_shape(E, n, m, "world E");
    require_shape(Q, n, n, "world Q");
    require_shape(R, n, n, "world R");
    if (!D.allFinite() || !E.allFinite() || !Q.allFinite() || !R.allFinite()) {
        throw InvalidArgument("world matrices must be finite");
    }
    if (linalg::asymmetry(Q) > 1e-10) throw NotSymmetric("world Q");
    if (linalg::asymmetry(R) > 1e-10) throw NotSymmetric("world R");
    if (!linalg::is_positive_definite(Q, 0.0)) {
        throw InvalidArgument("world Q must be positive definite");
    }
    if (!linalg::is_positive_definite(R, 0.0)) {
        throw InvalidArgument("world R must be positive definite");
    }
}

void WorldModel::check_stabilizable() const {
    check_shapes();
    // Identity weights give a detectable pair, so the Riccati iteration
    // converges exactly when (D, E) is stabilizable.
    linalg::solve_dare(D, E, Matrix::Identity(state_dim(), state_dim()),
                       Matrix::Identity(action_dim(), action_dim()));
}

WorldModel WorldModel::isotropic(Matrix d, Matrix e, double q, double r) {
    WorldModel w;
    const Eigen::Index n = d.rows();
    w.D = std::move(d);
    w.E = std::move(e);
    w.Q = q * Matrix::Identity(n, n);
    w.R = r * Matrix::Identity(n, n);
    w.check_shapes();
    return w;
}

void CostWeights::check(const WorldModel& world) const {
    require_shape(C_s, world.state_dim(), world.state_dim(), "C_s");
    require_shape(C_a, world.action_dim(), world.action_dim(), "C_a");
    if (linalg::asymmetry(C_s) > 1e-10) throw NotSymmetric("C_s");
    if (linalg::asymmetry(C_a) > 1e-10) throw NotSymmetric("C_a");
    if (linalg::sym_eig(C_s).eigenvalues.minCoeff() < -1e-12) {
        throw InvalidArgument("C_s must be positive semidefinite");
    }
    if (!linalg::is_positive_definite(C_a, 0.0)) {
        throw InvalidArgument("C_a must be positive definite");
    }
    if (!(C_b >= 0.0)) throw InvalidArgument("C_b must be nonnegative");
}

const char* to_string(Regime r) {
    return r == Regime::lossless ? "lossless" : "lossy";
}

Strategy strategy_from_filter(const FilterForm& f) {
    const Eigen::Index n = f.Gamma.rows();
    const Eigen::Index m = f.L.rows();
    require_shape(f.Gamma, n, n, "filter Gamma");
    require_shape(f.beta, n, n, "filter beta");
    require_shape(f.L, m, n, "filter L");
    Strategy s;
    s.Phi = f.L * f.Gamma * linalg::pinv(f.L);
    s.Psi = f.L * f.beta;
    return s;
}

SigmaBlocks split_sigma(const Matrix& sigma, Eigen::Index n, Eigen::Index m) {
    if (sigma.rows() != n + m || sigma.cols() != n + m) {
        throw DimensionMismatch("joint covariance must be (n+m) x (n+m)");
    }
    SigmaBlocks b;
    b.s = sigma.topLeftCorner(n, n);
    b.sa = sigma.topRightCorner(n, m);
    b.a = sigma.bottomRightCorner(m, m);
    return b;
}

FilterForm filter_from_strategy(const Strategy& s, const Matrix& sigma) {
    const Eigen::Index n = s.state_dim();
    const Eigen::Index m = s.action_dim();
    SigmaBlocks blocks = split_sigma(sigma, n, m);

    Eigen::SelfAdjointEigenSolver<Matrix> es(blocks.a);
    const double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, max_eig)) {
        throw SingularActionCovariance("Sigma_a is singular; filter view undefined");
    }

    FilterForm f;
    f.K = blocks.a.ldlt().solve(blocks.sa.transpose()).transpose(); // Sigma_sa Sigma_a^-1
    f.Gamma = f.K * s.Phi * linalg::pinv(f.K);
    f.beta = f.K * s.Psi;
    f.L = linalg::pinv(f.K);
    if (!f.K.allFinite() || !f.Gamma.allFinite() || !f.beta.allFinite() || !f.L.allFinite()) {
        throw SingularActionCovariance("filter recovery produced non-finite values");
    }
    return f;
}

} // namespace frugal
