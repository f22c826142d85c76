#pragma once

#include "core/model.hpp"

namespace frugal {

/// Joint evolution of states and actions, z_t = M z_{t-1} + eta with
/// eta ~ N(0, Upsilon). Eliminating the observation gives
///   M       = [[D,     E      ],
///              [Psi D, Phi + Psi E]]
///   Upsilon = [[Q,     Q Psi^T          ],
///              [Psi Q, Psi (Q+R) Psi^T  ]]
struct AugmentedSystem {
    Matrix M;       // (n+m) x (n+m)
    Matrix Upsilon; // (n+m) x (n+m), symmetric PSD
};

/// Steady-state covariance of [s; a] together with the loss decomposition.
struct EquilibriumReport {
    Matrix Sigma;            // (n+m) x (n+m), symmetric
    Matrix Sigma_s;          // n x n
    Matrix Sigma_sa;         // n x m, E[s a^T]
    Matrix Sigma_a;          // m x m
    double state_cost = 0.0;       // Tr(C_s Sigma_s)
    double action_cost = 0.0;      // Tr(C_a Sigma_a)
    double information_bits = 0.0; // 1/2 log2(det Sigma_s det Sigma_a / det Sigma)
    double total_loss = 0.0;       // state + action + C_b * bits
    double spectral_radius = 0.0;  // of M
};

/// Gradient of the equilibrium loss with respect to the strategy.
struct LossGradient {
    Matrix dPhi; // m x m
    Matrix dPsi; // m x n
};

AugmentedSystem build_augmented(const WorldModel& world, const Strategy& s);

/// Equilibrium covariance and loss for a stabilizing strategy.
/// Throws UnstableStrategy when the closed loop is not stable and
/// DegenerateCovariance when the log-determinants cannot be evaluated.
EquilibriumReport steady_state(const WorldModel& world, const CostWeights& weights,
                               const Strategy& s);

/// Analytic gradient via the adjoint (dual Lyapunov) method: one extra
/// Lyapunov solve per call, exact up to solver precision. Matches central
/// finite differences; the tests hold it to 1e-4 relative.
LossGradient loss_gradient(const WorldModel& world, const CostWeights& weights,
                           const Strategy& s);

/// Gaussian mutual information (bits) between the state and action blocks
/// of a joint covariance. Returns exactly 0 when the cross block vanishes.
double gaussian_information_bits(const SigmaBlocks& blocks);

} // namespace frugal
