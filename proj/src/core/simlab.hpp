#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/equilibrium.hpp"

namespace frugal {

/// Closed-loop trajectory. Rows are time steps; channels always have equal
/// length, truncated together if the rollout diverges.
struct Rollout {
    Matrix states;       // steps x n
    Matrix observations; // steps x n
    Matrix actions;      // steps x m
    double dt = 0.0;     // seconds per step for nonlinear tasks, 0 otherwise
    std::uint64_t seed = 0;
    bool diverged = false;
    long diverged_at = -1;
};

/// Nonlinear benchmark plant with a named parameter set. The dynamics are
/// continuous-time, expressed around a target state that is an equilibrium
/// under the nominal (zero-deviation) action.
struct NonlinearPlant {
    std::string name; // "cartpole" or "planar_drone"
    std::map<std::string, double> params;
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    Vector target;

    /// Continuous dynamics sdot = f(state, action deviation from nominal).
    Vector dynamics(const Vector& state, const Vector& action) const;

    /// Physical parameters eligible for sensitivity scans.
    std::vector<std::string> physical_parameters() const;

    double param(const std::string& key) const;
    void set_param(const std::string& key, double value);
};

NonlinearPlant make_cartpole();
NonlinearPlant make_planar_drone();
NonlinearPlant make_plant(const std::string& name);

/// One 4th-order Runge-Kutta step of the plant dynamics.
Vector rk4_step(const NonlinearPlant& plant, const Vector& state, const Vector& action,
                double dt);

/// Discrete linear-Gaussian approximation around the target state:
/// D = I + dt J_s, E = dt J_a with central-difference Jacobians, plus the
/// plant's noise specification (isotropic Q, diagonal R with velocity
/// entries 10x the position entries).
///
/// Throws NotEquilibrium when the target does not hold still under the
/// nominal action.
WorldModel linearize(const NonlinearPlant& plant, double dt);

/// Closed loop on the true linear plant, a_t = Phi a_{t-1} + Psi o_t.
Rollout rollout_linear(const WorldModel& world, const Strategy& s, long steps,
                       std::uint64_t seed, const Vector* initial_state = nullptr);

/// Closed loop on the nonlinear plant. The controller acts on deviations
/// from the target observation around the nominal action; process noise is
/// injected per step with the same covariance the linearization uses.
Rollout rollout_nonlinear(const NonlinearPlant& plant, const Strategy& s, long steps,
                          double dt, const Vector& initial_state, std::uint64_t seed,
                          double blowup_bound = 1e3);

/// Mean and standard error of the empirical cost components over
/// independent trials.
struct CostSample {
    double state_mean = 0.0, state_se = 0.0;
    double action_mean = 0.0, action_se = 0.0;
    double bits_mean = 0.0, bits_se = 0.0;
    double total_mean = 0.0, total_se = 0.0;
    int trials = 0;
};

CostSample empirical_costs(const WorldModel& world, const CostWeights& weights,
                           const Strategy& s, int trials, long steps, long burn_in,
                           std::uint64_t seed);

/// Loss sensitivity of a fixed strategy to relative perturbations of the
/// named physical parameters: central difference of the equilibrium loss on
/// the re-linearized model, scaled by the parameter value. Parameters whose
/// perturbed loop is unstable report +infinity.
std::vector<double> sensitivity(const NonlinearPlant& plant, double dt,
                                const CostWeights& weights, const Strategy& s,
                                const std::vector<std::string>& parameter_names,
                                double rel_step);

} // namespace frugal
