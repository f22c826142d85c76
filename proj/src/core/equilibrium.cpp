#include "core/equilibrium.hpp"

#include <cmath>

namespace frugal {

namespace {

constexpr double kLog2 = 0.6931471805599453;

// log det of a symmetric PD matrix via Cholesky; throws DegenerateCovariance
// when the factorization fails.
double logdet_spd(const Matrix& s, const char* what) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) {
        throw DegenerateCovariance(std::string(what) + " is not positive definite");
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void require_strategy_shapes(const WorldModel& world, const Strategy& s) {
    if (s.Phi.rows() != world.action_dim() || s.Phi.cols() != world.action_dim() ||
        s.Psi.rows() != world.action_dim() || s.Psi.cols() != world.state_dim()) {
        throw DimensionMismatch("strategy shapes do not match the world");
    }
}

} // namespace

AugmentedSystem build_augmented(const WorldModel& world, const Strategy& s) {
    require_strategy_shapes(world, s);
    const Eigen::Index n = world.state_dim();
    const Eigen::Index m = world.action_dim();

    AugmentedSystem sys;
    sys.M = Matrix::Zero(n + m, n + m);
    sys.M.topLeftCorner(n, n) = world.D;
    sys.M.topRightCorner(n, m) = world.E;
    sys.M.bottomLeftCorner(m, n) = s.Psi * world.D;
    sys.M.bottomRightCorner(m, m) = s.Phi + s.Psi * world.E;

    sys.Upsilon = Matrix::Zero(n + m, n + m);
    sys.Upsilon.topLeftCorner(n, n) = world.Q;
    sys.Upsilon.topRightCorner(n, m) = world.Q * s.Psi.transpose();
    sys.Upsilon.bottomLeftCorner(m, n) = s.Psi * world.Q;
    sys.Upsilon.bottomRightCorner(m, m) = s.Psi * (world.Q + world.R) * s.Psi.transpose();
    return sys;
}

double gaussian_information_bits(const SigmaBlocks& blocks) {
    // Independence of the blocks means zero information, including in the
    // degenerate case where the action covariance itself is singular.
    if (blocks.sa.cwiseAbs().maxCoeff() == 0.0) return 0.0;

    // det Sigma = det Sigma_s * det(Sigma_a - Sigma_sa^T Sigma_s^-1 Sigma_sa),
    // so the information reduces to a ratio of action-block determinants.
    Eigen::LLT<Matrix> llt_s(blocks.s);
    if (llt_s.info() != Eigen::Success) {
        throw DegenerateCovariance("Sigma_s is not positive definite");
    }
    Matrix schur_a = blocks.a - blocks.sa.transpose() * llt_s.solve(blocks.sa);
    const double bits = (logdet_spd(blocks.a, "Sigma_a") - logdet_spd(schur_a, "Sigma | s")) /
                        (2.0 * kLog2);
    return bits < 0.0 && bits > -1e-9 ? 0.0 : bits;
}

EquilibriumReport steady_state(const WorldModel& world, const CostWeights& weights,
                               const Strategy& s) {
    AugmentedSystem sys = build_augmented(world, s);
    EquilibriumReport rep;
    rep.spectral_radius = linalg::spectral_radius(sys.M);
    if (rep.spectral_radius >= 1.0 - linalg::default_tolerances().stability) {
        throw UnstableStrategy("augmented spectral radius " + std::to_string(rep.spectral_radius));
    }
    rep.Sigma = linalg::solve_dlyap(sys.M, sys.Upsilon);

    const Eigen::Index n = world.state_dim();
    const Eigen::Index m = world.action_dim();
    SigmaBlocks blocks = split_sigma(rep.Sigma, n, m);
    rep.Sigma_s = blocks.s;
    rep.Sigma_sa = blocks.sa;
    rep.Sigma_a = blocks.a;

    rep.state_cost = (weights.C_s * blocks.s).trace();
    rep.action_cost = (weights.C_a * blocks.a).trace();
    rep.information_bits = gaussian_information_bits(blocks);
    rep.total_loss = rep.state_cost + rep.action_cost + weights.C_b * rep.information_bits;
    return rep;
}

LossGradient loss_gradient(const WorldModel& world, const CostWeights& weights,
                           const Strategy& s) {
    const Eigen::Index n = world.state_dim();
    const Eigen::Index m = world.action_dim();
    AugmentedSystem sys = build_augmented(world, s);
    const double rho = linalg::spectral_radius(sys.M);
    if (rho >= 1.0 - linalg::default_tolerances().stability) {
        throw UnstableStrategy("cannot differentiate an unstable strategy");
    }
    Matrix sigma = linalg::solve_dlyap(sys.M, sys.Upsilon);
    SigmaBlocks blocks = split_sigma(sigma, n, m);

    // W = d loss / d Sigma. The information term contributes
    // C_b/(2 ln 2) * (blkdiag(Sigma_s^-1, Sigma_a^-1) - Sigma^-1).
    Matrix w = Matrix::Zero(n + m, n + m);
    w.topLeftCorner(n, n) = weights.C_s;
    w.bottomRightCorner(m, m) = weights.C_a;
    if (weights.C_b != 0.0) {
        Eigen::LLT<Matrix> llt_s(blocks.s);
        Eigen::LLT<Matrix> llt_a(blocks.a);
        Eigen::LLT<Matrix> llt_full(sigma);
        if (llt_s.info() != Eigen::Success || llt_a.info() != Eigen::Success ||
            llt_full.info() != Eigen::Success) {
            throw DegenerateCovariance("information gradient needs PD covariance blocks");
        }
        const double scale = weights.C_b / (2.0 * kLog2);
        w.topLeftCorner(n, n) += scale * llt_s.solve(Matrix::Identity(n, n));
        w.bottomRightCorner(m, m) += scale * llt_a.solve(Matrix::Identity(m, m));
        w -= scale * llt_full.solve(Matrix::Identity(n + m, n + m));
    }
    w = ((w + w.transpose()) / 2.0).eval();

    // Adjoint Lyapunov equation Lambda = M^T Lambda M + W, then
    //   d loss / d M       = 2 Lambda M Sigma
    //   d loss / d Upsilon = Lambda.
    Matrix lambda = linalg::solve_dlyap(sys.M.transpose(), w);
    Matrix g = 2.0 * lambda * sys.M * sigma;

    LossGradient grad;
    grad.dPhi = g.bottomRightCorner(m, m);

    // Psi enters M through the bottom block row [Psi D, Psi E] and Upsilon
    // through its cross and action blocks.
    Matrix g21 = g.bottomLeftCorner(m, n);
    Matrix g22 = g.bottomRightCorner(m, m);
    Matrix lambda21 = lambda.bottomLeftCorner(m, n);
    Matrix lambda22 = lambda.bottomRightCorner(m, m);
    grad.dPsi = g21 * world.D.transpose() + g22 * world.E.transpose() +
                2.0 * lambda21 * world.Q +
                2.0 * lambda22 * s.Psi * (world.Q + world.R);
    return grad;
}

} // namespace frugal
