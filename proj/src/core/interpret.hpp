#pragma once

#include "core/model.hpp"

namespace frugal {

/// Qualitative character of a strategy (Fig. 3 vocabulary): how strongly it
/// trusts observations relative to the free-information Kalman gain, and
/// whether its base dynamics decays smoothly or flips sign.
struct StrategyProfile {
    SubjectiveModel subjective;
    // A subjective model exists exactly when the consistent-readout fixed
    // point has a solution; always the case for square readouts (m = n),
    // not guaranteed when the action space is narrower than the state.
    bool subjective_available = false;
    Matrix error_cov;              // n x n, mean squared estimation error
    double credulity_index = 0.0;  // |beta| / |true Kalman gain|; > 1 credulous, < 1 skeptical
    double reactivity_index = 0.0; // in [-1, 1]; negative flips sign each step
    bool oscillation_flag = false; // Phi (or the assumed transition) has complex eigenvalues
};

/// Result of the subjective-model recovery. The fixed point
///   Sigma_e = (I - beta)(Dtil Sigma_e Dtil^T + Qtil)
/// holds by construction; gain_residual measures how closely
/// beta = S (S + R)^-1 with S = Dtil Sigma_e Dtil^T + Qtil holds, which is
/// the genuinely informative check. An alternative closed form for the
/// assumed process noise is evaluated alongside as a diagnostic only.
struct RecoveredModel {
    SubjectiveModel model;
    double fixed_point_residual = 0.0;
    double gain_residual = 0.0;
    Matrix closed_form_q;              // (R^-1 (R^-1 - Sigma_e) R^-1)^-1 - D Sigma_e D^T - R
    double closed_form_q_discrepancy = 0.0;
};

/// Mean squared error of the best linear state estimate read out of the
/// action, Sigma_e = Sigma_s - K Sigma_sa^T - Sigma_sa K^T + K Sigma_a K^T
/// with K = Sigma_sa Sigma_a^-1 (which reduces to the Schur complement).
Matrix estimation_error_cov(const WorldModel& world, const Strategy& s, const Matrix& sigma);

/// Same, for an arbitrary linear readout shat = K' a. Minimized in trace by
/// the regression readout above.
Matrix estimation_error_cov_for_readout(const Matrix& readout, const SigmaBlocks& blocks);

/// Distorted world model under which the strategy's filter is exact
/// Bayesian inference: Dtil = (I - beta)^-1 Gamma - E L, Qtil from the
/// covariance fixed point, Etil = E and Rtil = R pinned to the truth.
///
/// Throws NonInvertibleUpdate when (I - beta) is singular and
/// InconsistentFixedPoint when no Qtil satisfies both checks within 1e-4.
RecoveredModel recover_subjective_model(const WorldModel& world, const FilterForm& f,
                                        const Matrix& sigma_e);

/// Filter view whose observation scaling is self-consistent with the gain
/// formula. Combining the covariance fixed point with beta = S (S + R)^-1
/// forces beta R = Sigma_e, so the readout must solve
///   K = Sigma_e(K) R^-1 Psi^+
/// which is found by Newton iteration from the regression readout. In the
/// lossless regime the two coincide; in the lossy regime the consistent
/// readout is the one that admits a subjective generative model.
struct Interpretation {
    FilterForm filter;   // consistent Gamma, beta, L, K
    Matrix sigma_e;      // error covariance of the consistent readout
    RecoveredModel recovered;
};

Interpretation interpret_strategy(const WorldModel& world, const Strategy& s,
                                  const Matrix& sigma);

StrategyProfile profile(const WorldModel& world, const Strategy& s, const Matrix& sigma);

} // namespace frugal
