#include "core/interpret.hpp"

#include <cmath>

#include "core/optimizer.hpp"

namespace frugal {

Matrix estimation_error_cov_for_readout(const Matrix& readout, const SigmaBlocks& blocks) {
    return blocks.s - readout * blocks.sa.transpose() - blocks.sa * readout.transpose() +
           readout * blocks.a * readout.transpose();
}

Matrix estimation_error_cov(const WorldModel& world, const Strategy& s, const Matrix& sigma) {
    SigmaBlocks blocks = split_sigma(sigma, world.state_dim(), world.action_dim());
    // A silent action channel carries no information; the limiting readout
    // is zero and the estimate error is the full state covariance.
    if (blocks.a.norm() < 1e-14 * (1.0 + blocks.s.norm()) &&
        blocks.sa.norm() < 1e-14 * (1.0 + blocks.s.norm())) {
        return blocks.s;
    }
    FilterForm f = filter_from_strategy(s, sigma);
    Matrix sigma_e = estimation_error_cov_for_readout(f.K, blocks);
    sigma_e = ((sigma_e + sigma_e.transpose()) / 2.0).eval();
    const double min_eig = linalg::sym_eig(sigma_e).eigenvalues.minCoeff();
    if (min_eig < -1e-8 * (1.0 + sigma_e.norm())) {
        throw DegenerateCovariance("estimation error covariance is indefinite");
    }
    return sigma_e;
}

RecoveredModel recover_subjective_model(const WorldModel& world, const FilterForm& f,
                                        const Matrix& sigma_e) {
    const Eigen::Index n = world.state_dim();
    Matrix update = Matrix::Identity(n, n) - f.beta;
    Eigen::FullPivLU<Matrix> lu(update);
    if (!lu.isInvertible()) {
        throw NonInvertibleUpdate("(I - beta) is singular");
    }

    RecoveredModel rec;
    rec.model.Etil = world.E;
    rec.model.Rtil = world.R;
    // Gamma = (I - beta)(Dtil + Etil L) inverted for Dtil.
    rec.model.Dtil = lu.solve(f.Gamma) - world.E * f.L;
    // Covariance fixed point Sigma_e = (I - beta)(Dtil Sigma_e Dtil^T + Qtil)
    // rearranged for Qtil.
    Matrix s_assumed = lu.solve(sigma_e); // Dtil Sigma_e Dtil^T + Qtil
    rec.model.Qtil = s_assumed - rec.model.Dtil * sigma_e * rec.model.Dtil.transpose();
    rec.model.Qtil = ((rec.model.Qtil + rec.model.Qtil.transpose()) / 2.0).eval();

    Matrix s_check = rec.model.Dtil * sigma_e * rec.model.Dtil.transpose() + rec.model.Qtil;
    rec.fixed_point_residual =
        (sigma_e - update * s_check).norm() / (1.0 + sigma_e.norm());
    // Steady-state gain formula beta = S (S + R)^-1.
    Matrix beta_check =
        ((s_check + world.R).transpose().partialPivLu().solve(s_check.transpose())).transpose();
    rec.gain_residual = (f.beta - beta_check).norm() / (1.0 + f.beta.norm());

    // The alternative closed form is kept as a diagnostic only; its inner
    // term mixes covariance and inverse-covariance units, so it is not used
    // for the recovery itself.
    Matrix r_inv = world.R.inverse();
    Matrix inner = r_inv * (r_inv - sigma_e) * r_inv;
    Eigen::FullPivLU<Matrix> lu_inner(inner);
    if (lu_inner.isInvertible()) {
        rec.closed_form_q = lu_inner.inverse() -
                                rec.model.Dtil * sigma_e * rec.model.Dtil.transpose() - world.R;
        rec.closed_form_q_discrepancy =
            (rec.closed_form_q - rec.model.Qtil).norm() / (1.0 + rec.model.Qtil.norm());
    } else {
        rec.closed_form_q = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
        rec.closed_form_q_discrepancy = std::numeric_limits<double>::quiet_NaN();
    }

    if (rec.fixed_point_residual > 1e-4 || rec.gain_residual > 1e-4) {
        throw InconsistentFixedPoint(
            "no assumed process noise satisfies both checks (fixed point " +
            std::to_string(rec.fixed_point_residual) + ", gain " +
            std::to_string(rec.gain_residual) + ")");
    }
    return rec;
}

namespace {

bool has_complex_eigenvalue(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    return (es.eigenvalues().imag().cwiseAbs().array() > 1e-8).any();
}

} // namespace

Interpretation interpret_strategy(const WorldModel& world, const Strategy& s,
                                  const Matrix& sigma) {
    const Eigen::Index n = world.state_dim();
    const Eigen::Index m = world.action_dim();
    SigmaBlocks blocks = split_sigma(sigma, n, m);
    Matrix r_inv = world.R.inverse();
    Matrix psi_pinv = linalg::pinv(s.Psi);

    auto error_cov = [&](const Matrix& k) {
        return (blocks.s - k * blocks.sa.transpose() - blocks.sa * k.transpose() +
                k * blocks.a * k.transpose())
            .eval();
    };
    auto residual = [&](const Matrix& k) {
        return (k - error_cov(k) * r_inv * psi_pinv).eval();
    };

    // Newton iteration with a finite-difference Jacobian, warm-started at
    // the regression readout (already the fixed point when inference is
    // lossless).
    Eigen::LLT<Matrix> llt_a(blocks.a);
    if (llt_a.info() != Eigen::Success) {
        throw SingularActionCovariance("Sigma_a must be positive definite");
    }
    Matrix k = llt_a.solve(blocks.sa.transpose()).transpose();
    double resid = residual(k).norm();
    const Eigen::Index p = n * m;
    for (int it = 0; it < 100 && resid >= 1e-12 * (1.0 + k.norm()); ++it) {
        Vector fv = residual(k).reshaped();
        Matrix jac(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            Matrix kp = k;
            const double h = 1e-7 * (1.0 + std::abs(kp(i % n, i / n)));
            kp(i % n, i / n) += h;
            jac.col(i) = (residual(kp).reshaped() - fv) / h;
        }
        Vector step = jac.partialPivLu().solve(fv);
        double alpha = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls, alpha /= 2.0) {
            Matrix kn = k - alpha * step.reshaped(n, m);
            const double rn = residual(kn).norm();
            if (rn < resid) {
                k = kn;
                resid = rn;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    if (!(resid < 1e-8 * (1.0 + k.norm()))) {
        throw InconsistentFixedPoint("consistent readout not found, residual " +
                                     std::to_string(resid));
    }

    Interpretation out;
    out.sigma_e = ((error_cov(k) + error_cov(k).transpose()) / 2.0).eval();
    out.filter.K = k;
    out.filter.beta = out.sigma_e * r_inv;
    Eigen::FullPivLU<Matrix> lu_beta(out.filter.beta);
    if (!lu_beta.isInvertible()) {
        throw NonInvertibleUpdate("consistent observation scaling is singular");
    }
    out.filter.L = s.Psi * lu_beta.inverse();
    out.filter.Gamma = k * s.Phi * out.filter.L;
    out.recovered = recover_subjective_model(world, out.filter, out.sigma_e);
    return out;
}

StrategyProfile profile(const WorldModel& world, const Strategy& s, const Matrix& sigma) {
    const Eigen::Index n = world.state_dim();
    StrategyProfile p;

    FilterForm f = filter_from_strategy(s, sigma);
    p.error_cov = estimation_error_cov(world, s, sigma);

    const Matrix kalman = kalman_steady_state(world.D, world.Q, world.R).gain;
    p.credulity_index = f.beta.norm() / kalman.norm();

    if (world.action_dim() == 1) {
        p.reactivity_index = s.Phi(0, 0);
    } else {
        Eigen::EigenSolver<Matrix> es(s.Phi, /*computeEigenvectors=*/false);
        Eigen::Index dominant = 0;
        es.eigenvalues().cwiseAbs().maxCoeff(&dominant);
        const std::complex<double> lambda = es.eigenvalues()(dominant);
        const double mag = std::abs(lambda);
        p.reactivity_index = mag > 0.0 ? lambda.real() / mag : 0.0;
    }

    p.oscillation_flag = has_complex_eigenvalue(s.Phi);
    try {
        Interpretation interp = interpret_strategy(world, s, sigma);
        p.subjective = interp.recovered.model;
        p.subjective_available = true;
        p.oscillation_flag = p.oscillation_flag || has_complex_eigenvalue(p.subjective.Dtil);
    } catch (const InconsistentFixedPoint&) {
        p.subjective.Etil = world.E;
        p.subjective.Rtil = world.R;
        p.subjective.Dtil = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
        p.subjective.Qtil = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    }
    return p;
}

} // namespace frugal
