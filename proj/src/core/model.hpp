#pragma once

#include "core/linalg.hpp"

namespace frugal {

/// True linear-Gaussian plant: s_t = D s_{t-1} + E a_{t-1} + w,  o_t = s_t + v,
/// with w ~ N(0, Q) and v ~ N(0, R).
struct WorldModel {
    Matrix D; // state transition, n x n
    Matrix E; // input gain, n x m
    Matrix Q; // process-noise covariance, n x n, symmetric PD
    Matrix R; // observation-noise covariance, n x n, symmetric PD

    Eigen::Index state_dim() const { return D.rows(); }
    Eigen::Index action_dim() const { return E.cols(); }

    /// Checks shapes, symmetry, and positive definiteness of the noise
    /// covariances. Throws on violation.
    void check_shapes() const;

    /// Verifies (D, E) stabilizable by solving the identity-weighted Riccati
    /// equation. Throws NoStabilizingSolution when it is not.
    void check_stabilizable() const;

    static WorldModel isotropic(Matrix d, Matrix e, double q, double r);
};

/// The three competing penalties: state deviation, motion effort, and the
/// price per bit of information held about the state.
struct CostWeights {
    Matrix C_s;  // n x n, PSD
    Matrix C_a;  // m x m, PD
    double C_b = 0.0; // >= 0, per bit

    void check(const WorldModel& world) const;
};

/// Controller input-output form: a_t = Phi a_{t-1} + Psi o_t.
struct Strategy {
    Matrix Phi; // m x m
    Matrix Psi; // m x n

    Eigen::Index action_dim() const { return Phi.rows(); }
    Eigen::Index state_dim() const { return Psi.cols(); }
};

/// Exponential-filter view of a strategy: the belief mean obeys
/// shat_t = Gamma shat_{t-1} + beta o_t and actions are a_t = L shat_t.
/// K is the linear readout regressing the state estimate from the action,
/// used to lift the action-space controller back to state space.
struct FilterForm {
    Matrix Gamma; // n x n memory factor
    Matrix beta;  // n x n observation scaling
    Matrix L;     // m x n control gain
    Matrix K;     // n x m state readout
};

/// Gaussian belief over the hidden state.
struct Belief {
    Vector mean;
    Matrix covariance;
};

/// World model as the agent assumes it to be. E and R are pinned to their
/// true values; D and Q absorb the distortions of a lossy filter.
struct SubjectiveModel {
    Matrix Dtil;
    Matrix Etil;
    Matrix Qtil;
    Matrix Rtil;
};

/// Inference regime of a solved strategy.
enum class Regime { lossless, lossy };

const char* to_string(Regime r);

/// {Phi, Psi} = {L Gamma L^+, L beta}.
Strategy strategy_from_filter(const FilterForm& f);

/// Recovers the filter view of a strategy at equilibrium. sigma is the full
/// (n+m) x (n+m) steady-state covariance of [s; a]. The readout is the
/// least-squares regression K = Sigma_sa Sigma_a^-1, which minimizes the
/// trace of the estimation-error covariance over all linear readouts; then
/// Gamma = K Phi K^+, beta = K Psi, L = K^+.
///
/// Throws SingularActionCovariance when Sigma_a is not invertible.
FilterForm filter_from_strategy(const Strategy& s, const Matrix& sigma);

/// Block views into the joint covariance of [s; a].
struct SigmaBlocks {
    Matrix s;  // n x n
    Matrix sa; // n x m cross-covariance E[s a^T]
    Matrix a;  // m x m
};

SigmaBlocks split_sigma(const Matrix& sigma, Eigen::Index n, Eigen::Index m);

} // namespace frugal
