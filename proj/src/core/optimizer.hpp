#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/equilibrium.hpp"

namespace frugal {

struct OptimizerConfig {
    double learning_rate = 0.02;
    long max_iters = 40000;
    double grad_tol = 1e-7;
    int restarts = 8;
    std::uint64_t seed = 0;
    double stability_margin = 1e-3; // iterates keep rho(M) <= 1 - margin

    void check() const;
};

struct SolveResult {
    Strategy strategy;
    EquilibriumReport report;
    bool converged = false;       // grad norm < grad_tol and Hessian min eig >= -1e-6
    double grad_norm = 0.0;
    double hessian_min_eig = 0.0;
    std::vector<double> restart_losses; // final loss per restart, +inf if unusable
    int best_restart = -1;
};

/// Minimizes the equilibrium loss over {Phi, Psi} with seeded random
/// restarts. Gradient descent with heavy-ball momentum; every accepted
/// iterate satisfies the stability margin and keeps the covariance positive
/// definite (enforced by backtracking). Deterministic given the config.
///
/// Throws NoStableInitialization when no restart finds a stable starting
/// point. A result that fails the convergence checks is still returned,
/// flagged through `converged`.
SolveResult solve(const WorldModel& world, const CostWeights& weights,
                  const OptimizerConfig& cfg);

/// Kalman filter + LQR assembled into controller form, evaluated at
/// equilibrium (the information term is reported but was not optimized).
struct LqgBaseline {
    Strategy strategy;
    EquilibriumReport report;
    Matrix L;          // m x n LQR gain, a = L s_hat
    Matrix beta;       // n x n steady-state Kalman gain
    Matrix Gamma;      // n x n filter memory, (I - beta)(D + E L)
    Matrix prior_cov;  // steady-state one-step-ahead error covariance
    Matrix posterior_cov;
};

LqgBaseline classical_lqg_baseline(const WorldModel& world, const CostWeights& weights);

/// Steady-state Kalman quantities of the true model (observation o = s + v).
struct KalmanSteadyState {
    Matrix gain;          // beta = S (S + R)^-1
    Matrix prior_cov;     // S
    Matrix posterior_cov; // (I - beta) S
};

KalmanSteadyState kalman_steady_state(const Matrix& D, const Matrix& Q, const Matrix& R);

/// Loss surface over a (Phi, Psi) grid for a scalar task. Entry (i, j) is
/// the equilibrium loss at (phi_values[i], psi_values[j]); strategies whose
/// closed loop is unstable report +inf.
Matrix landscape(const WorldModel& world, const CostWeights& weights,
                 const std::vector<double>& phi_values,
                 const std::vector<double>& psi_values);

/// Grid-local strict minima of a landscape (8-neighborhood), as (i, j) pairs.
std::vector<std::pair<int, int>> grid_local_minima(const Matrix& losses);

/// One cell of the phase diagram sweep.
struct SweepCell {
    double c_s = 0.0;
    double c_b = 0.0;
    bool ok = false;
    std::string error;      // empty when ok
    Regime regime = Regime::lossless;
    bool converged = false;
    double xi_norm = 0.0;   // Frobenius norm of the quadratic-form residual
    double l_norm = 0.0;    // Frobenius norm of the recovered control gain
    double state_var = 0.0; // Sigma_s (scalar task)
    double bits = 0.0;
    double state_cost = 0.0;
    double action_cost = 0.0;
    double total_loss = 0.0;
};

/// Solves and classifies every (C_s, C_b) cell of a scalar task. Per-cell
/// failures are recorded in the cell, never aborting the sweep. `jobs`
/// bounds the number of worker threads; results do not depend on it.
std::vector<SweepCell> phase_sweep(const WorldModel& world, const CostWeights& base,
                                   const std::vector<double>& cs_values,
                                   const std::vector<double>& cb_values,
                                   const OptimizerConfig& cfg, int jobs = 1);

} // namespace frugal
