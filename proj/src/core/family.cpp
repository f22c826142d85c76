#include "core/family.hpp"

#include <cmath>
#include <random>

namespace frugal {

namespace {

struct EliminationData {
    Matrix A;       // m x n
    Matrix B;       // m x n
    Matrix R_minus; // n x n, R - Sigma_s
    double r_slack = 0.0;
};

EliminationData eliminate_psi(const WorldModel& world, const SigmaBlocks& blocks) {
    Eigen::LLT<Matrix> llt_s(blocks.s);
    if (llt_s.info() != Eigen::Success) {
        throw SingularStateCovariance("Sigma_s is not positive definite");
    }
    EliminationData e;
    e.R_minus = world.R - blocks.s;
    e.r_slack = linalg::sym_eig(((e.R_minus + e.R_minus.transpose()) / 2.0).eval())
                    .eigenvalues.minCoeff();
    // A = Sigma_sa^T Sigma_s^-1, B = (Sigma_sa^T D^T + Sigma_a E^T) Sigma_s^-1.
    e.A = llt_s.solve(blocks.sa).transpose();
    Matrix lhs = blocks.sa.transpose() * world.D.transpose() +
                 blocks.a * world.E.transpose();
    e.B = llt_s.solve(lhs.transpose()).transpose();
    return e;
}

Matrix psi_for(const EliminationData& e, const Matrix& phi) {
    return e.A - phi * e.B;
}

} // namespace

QuadraticFormData quadratic_form_data(const WorldModel& world, const Matrix& sigma) {
    const Eigen::Index n = world.state_dim();
    const Eigen::Index m = world.action_dim();
    SigmaBlocks blocks = split_sigma(sigma, n, m);
    EliminationData e = eliminate_psi(world, blocks);

    QuadraticFormData q;
    q.F2 = blocks.a + e.B * e.R_minus * e.B.transpose();
    q.F2 = ((q.F2 + q.F2.transpose()) / 2.0).eval();
    q.F1 = -e.B * (blocks.sa + e.R_minus * e.A.transpose());
    q.F0 = blocks.a - e.A * blocks.sa - blocks.sa.transpose() * e.A.transpose() -
           e.A * e.R_minus * e.A.transpose();
    q.F0 = ((q.F0 + q.F0.transpose()) / 2.0).eval();
    q.r_slack_min_eig = e.r_slack;

    // The construction needs F2 positive definite; that can fail when the
    // state covariance exceeds the observation noise floor badly enough.
    Eigen::LLT<Matrix> llt_f2(q.F2);
    if (llt_f2.info() != Eigen::Success) {
        throw ConstraintViolated("F2 is not positive definite (min eig of R - Sigma_s is " +
                                 std::to_string(e.r_slack) + ")");
    }
    q.xi = q.F0 + q.F1.transpose() * llt_f2.solve(q.F1);
    q.xi = ((q.xi + q.xi.transpose()) / 2.0).eval();
    return q;
}

double ellipsoid_residual(const WorldModel& world, const Matrix& sigma, const Strategy& s) {
    SigmaBlocks blocks = split_sigma(sigma, world.state_dim(), world.action_dim());
    Matrix r_minus = world.R - blocks.s;
    Matrix residual = blocks.a - s.Phi * blocks.a * s.Phi.transpose() -
                      s.Psi * blocks.sa - blocks.sa.transpose() * s.Psi.transpose() -
                      s.Psi * r_minus * s.Psi.transpose();
    return residual.norm();
}

Regime classify_regime(const QuadraticFormData& q, double tol) {
    return q.xi.norm() < tol ? Regime::lossless : Regime::lossy;
}

Regime classify_regime(const QuadraticFormData& q) {
    return classify_regime(q, 1e-6 * (1.0 + q.F0.norm()));
}

namespace {

struct XiFactor {
    Matrix sqrt_xi;       // U_xi Lambda_xi^(1/2)
    Matrix inv_sqrt_f2;   // Lambda_F2^(-1/2) U_F2^T
    linalg::SymmetricEigen eig_xi;
    linalg::SymmetricEigen eig_f2;
};

XiFactor factor(const QuadraticFormData& q) {
    XiFactor f;
    f.eig_f2 = linalg::sym_eig(q.F2);
    f.eig_xi = linalg::sym_eig(q.xi);

    Vector xi_vals = f.eig_xi.eigenvalues;
    for (Eigen::Index i = 0; i < xi_vals.size(); ++i) {
        if (xi_vals(i) < -1e-8) {
            throw NegativeEigenvalue("xi has eigenvalue " + std::to_string(xi_vals(i)));
        }
        if (xi_vals(i) < 0.0) xi_vals(i) = 0.0; // numerical noise near the boundary
    }
    f.sqrt_xi = f.eig_xi.eigenvectors * xi_vals.cwiseSqrt().asDiagonal();
    f.inv_sqrt_f2 = f.eig_f2.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                    f.eig_f2.eigenvectors.transpose();
    return f;
}

} // namespace

FamilyMember member(const WorldModel& world, const Matrix& sigma,
                    const QuadraticFormData& q, const Matrix& theta) {
    const Eigen::Index m = world.action_dim();
    if (theta.rows() != m || theta.cols() != m) {
        throw DimensionMismatch("Theta must be m x m");
    }
    if ((theta.transpose() * theta - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-10) {
        throw NotOrthogonal("Theta^T Theta differs from the identity");
    }

    SigmaBlocks blocks = split_sigma(sigma, world.state_dim(), m);
    EliminationData e = eliminate_psi(world, blocks);
    XiFactor f = factor(q);

    Eigen::LLT<Matrix> llt_f2(q.F2);
    Matrix affine = llt_f2.solve(q.F1).transpose(); // F1^T F2^-1

    FamilyMember fm;
    fm.Theta = theta;
    fm.strategy.Phi = f.sqrt_xi * theta * f.inv_sqrt_f2 - affine;
    fm.strategy.Psi = psi_for(e, fm.strategy.Phi);

    AugmentedSystem sys = build_augmented(world, fm.strategy);
    fm.stable = linalg::spectral_radius(sys.M) < 1.0 - linalg::default_tolerances().stability;
    if (fm.stable) {
        Matrix regenerated = linalg::solve_dlyap(sys.M, sys.Upsilon);
        fm.sigma_rel_err = (regenerated - sigma).norm() / sigma.norm();
    } else {
        fm.sigma_rel_err = std::numeric_limits<double>::infinity();
    }
    return fm;
}

Matrix theta_of(const Strategy& s, const QuadraticFormData& q) {
    const Eigen::Index m = s.action_dim();
    XiFactor f = factor(q);
    Eigen::LLT<Matrix> llt_f2(q.F2);
    Matrix affine = llt_f2.solve(q.F1).transpose();

    // (Phi + F1^T F2^-1) U_F2 Lambda_F2^(1/2) = U_xi Lambda_xi^(1/2) Theta;
    // invert the xi factor on its column space and complete with the
    // identity on null directions.
    Matrix sqrt_f2 = f.eig_f2.eigenvectors * f.eig_f2.eigenvalues.cwiseSqrt().asDiagonal();
    Matrix lhs = (s.Phi + affine) * sqrt_f2;
    Matrix rotated = f.eig_xi.eigenvectors.transpose() * lhs; // Lambda_xi^(1/2) Theta
    Matrix theta = Matrix::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double lam = std::max(f.eig_xi.eigenvalues(i), 0.0);
        if (lam > 1e-14 * (1.0 + f.eig_xi.eigenvalues.cwiseAbs().maxCoeff())) {
            theta.row(i) = rotated.row(i) / std::sqrt(lam);
        }
    }
    return theta;
}

std::vector<FamilyMember> enumerate_family(const WorldModel& world, const SolveResult& seed,
                                           int count, std::uint64_t theta_seed) {
    if (!seed.converged) {
        throw SeedNotConverged("family enumeration needs a converged seed solve");
    }
    const Eigen::Index m = world.action_dim();
    QuadraticFormData q = quadratic_form_data(world, seed.report.Sigma);
    const Regime regime = classify_regime(q);

    std::vector<Matrix> thetas;
    if (m == 1) {
        thetas.push_back(Matrix::Constant(1, 1, 1.0));
        if (regime == Regime::lossy) thetas.push_back(Matrix::Constant(1, 1, -1.0));
    } else if (m == 2) {
        // Rotations at uniformly spaced angles interleaved with reflections
        // at quarter-step offsets. The offset keeps members distinct even
        // when xi is rank-deficient, where a reflection at angle a acts like
        // the rotation at -a.
        const int pairs = (count + 1) / 2;
        for (int k = 0; k < pairs && static_cast<int>(thetas.size()) < count; ++k) {
            const double angle = 2.0 * M_PI * k / pairs;
            Matrix rot(2, 2);
            rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
            thetas.push_back(rot);
            if (static_cast<int>(thetas.size()) < count) {
                const double ra = angle + 0.5 * M_PI / pairs;
                Matrix refl(2, 2);
                refl << std::cos(ra), std::sin(ra), std::sin(ra), -std::cos(ra);
                thetas.push_back(refl);
            }
        }
    } else {
        std::mt19937_64 rng(theta_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int k = 0; k < count; ++k) {
            Matrix g = Matrix::NullaryExpr(m, m, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
            Eigen::HouseholderQR<Matrix> qr(g);
            Matrix qmat = qr.householderQ();
            Matrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
            for (Eigen::Index i = 0; i < m; ++i) {
                if (rmat(i, i) < 0.0) qmat.col(i) = -qmat.col(i);
            }
            thetas.push_back(qmat);
        }
    }

    std::vector<FamilyMember> members;
    members.reserve(thetas.size());
    for (const Matrix& theta : thetas) {
        members.push_back(member(world, seed.report.Sigma, q, theta));
    }
    return members;
}

} // namespace frugal
