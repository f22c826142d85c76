/*
 * frugal - joint inference/control optimization for linear-Gaussian tasks
 * with an explicit price on information.
 *
 * C interface of the shared library. Handles are opaque; every function
 * returns a frugal_status and leaves a human-readable message for the
 * calling thread in frugal_last_error() on failure. Matrices cross the
 * boundary as row-major double arrays with dimensions implied by the world
 * (n states, m actions).
 */

#ifndef FRUGAL_H
#define FRUGAL_H

#include <stdint.h>

#ifndef FRUGAL_API
#if defined(_WIN32) || defined(__CYGWIN__)
#define FRUGAL_API __declspec(dllexport)
#else
#define FRUGAL_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum frugal_status {
    FRUGAL_OK = 0,
    FRUGAL_ERR_ARGUMENT = 1,    /* null pointers, bad shapes or option values */
    FRUGAL_ERR_NUMERICAL = 2,   /* instability, singularity, degeneracy */
    FRUGAL_ERR_CONSTRAINT = 3,  /* a documented precondition was violated */
    FRUGAL_ERR_CONVERGENCE = 4, /* an iterative method hit its limit */
    FRUGAL_ERR_INTERNAL = 5
} frugal_status;

/* Message describing the current thread's most recent failure. */
FRUGAL_API const char* frugal_last_error(void);

typedef struct frugal_world frugal_world;       /* linear-Gaussian plant */
typedef struct frugal_plant frugal_plant;       /* nonlinear benchmark plant */
typedef struct frugal_solution frugal_solution; /* optimized strategy bundle */
typedef struct frugal_family frugal_family;     /* enumerated solution family */
typedef struct frugal_rollout frugal_rollout;   /* simulated trajectory */
typedef struct frugal_sweep frugal_sweep;       /* phase-diagram table */

/* ------------------------------------------------------------------ */
/* Worlds                                                              */

/* D: n*n, E: n*m, Q: n*n, R: n*n; Q and R symmetric positive definite. */
FRUGAL_API frugal_status frugal_world_create(int n, int m, const double* D, const double* E,
                                             const double* Q, const double* R,
                                             frugal_world** out);
FRUGAL_API void frugal_world_destroy(frugal_world* world);
FRUGAL_API int frugal_world_state_dim(const frugal_world* world);
FRUGAL_API int frugal_world_action_dim(const frugal_world* world);
/* Any output pointer may be null. Buffers sized n*n / n*m as for create. */
FRUGAL_API frugal_status frugal_world_get(const frugal_world* world, double* D, double* E,
                                          double* Q, double* R);
/* Verifies that (D, E) is stabilizable. */
FRUGAL_API frugal_status frugal_world_validate(const frugal_world* world);

/* ------------------------------------------------------------------ */
/* Nonlinear plants                                                    */

/* name: "cartpole" or "planar_drone". */
FRUGAL_API frugal_status frugal_plant_create(const char* name, frugal_plant** out);
FRUGAL_API void frugal_plant_destroy(frugal_plant* plant);
FRUGAL_API int frugal_plant_state_dim(const frugal_plant* plant);
FRUGAL_API int frugal_plant_action_dim(const frugal_plant* plant);
FRUGAL_API frugal_status frugal_plant_set_param(frugal_plant* plant, const char* key,
                                                double value);
FRUGAL_API frugal_status frugal_plant_get_param(const frugal_plant* plant, const char* key,
                                                double* value);
/* Discrete linear-Gaussian approximation around the plant's target state. */
FRUGAL_API frugal_status frugal_plant_linearize(const frugal_plant* plant, double dt,
                                                frugal_world** out);

/* ------------------------------------------------------------------ */
/* Equilibrium evaluation                                              */

typedef struct frugal_report {
    double state_cost;
    double action_cost;
    double information_bits;
    double total_loss;
    double spectral_radius; /* of the closed-loop transition */
} frugal_report;

/* Evaluates a fixed strategy at equilibrium. sigma (optional) receives the
 * (n+m)x(n+m) steady-state covariance. */
FRUGAL_API frugal_status frugal_evaluate(const frugal_world* world, const double* Cs,
                                         const double* Ca, double cb, const double* Phi,
                                         const double* Psi, frugal_report* report,
                                         double* sigma);

/* Loss surface over a (Phi, Psi) grid for scalar tasks; losses is a
 * row-major n_phi x n_psi buffer, +inf marks unstable points. */
FRUGAL_API frugal_status frugal_landscape(const frugal_world* world, const double* Cs,
                                          const double* Ca, double cb,
                                          const double* phi_values, int n_phi,
                                          const double* psi_values, int n_psi, double* losses);

/* ------------------------------------------------------------------ */
/* Optimization                                                        */

typedef struct frugal_solve_options {
    double learning_rate;
    long max_iters;
    double grad_tol;
    int restarts;
    uint64_t seed;
    double stability_margin;
} frugal_solve_options;

FRUGAL_API void frugal_solve_options_init(frugal_solve_options* options);

/* Best-of-restarts minimization of the equilibrium loss. A solution handle
 * is produced even when the convergence checks fail; inspect
 * frugal_solution_converged. */
FRUGAL_API frugal_status frugal_solve(const frugal_world* world, const double* Cs,
                                      const double* Ca, double cb,
                                      const frugal_solve_options* options,
                                      frugal_solution** out);

/* Wraps an externally supplied strategy (e.g. loaded from a previous run)
 * as a solution handle, evaluating it at equilibrium. */
FRUGAL_API frugal_status frugal_solution_from_strategy(const frugal_world* world,
                                                       const double* Cs, const double* Ca,
                                                       double cb, const double* Phi,
                                                       const double* Psi, int converged,
                                                       frugal_solution** out);
FRUGAL_API void frugal_solution_destroy(frugal_solution* solution);

FRUGAL_API int frugal_solution_converged(const frugal_solution* solution);
FRUGAL_API double frugal_solution_grad_norm(const frugal_solution* solution);
FRUGAL_API double frugal_solution_hessian_min_eig(const frugal_solution* solution);
FRUGAL_API int frugal_solution_restarts(const frugal_solution* solution);
FRUGAL_API double frugal_solution_restart_loss(const frugal_solution* solution, int index);
FRUGAL_API frugal_status frugal_solution_strategy(const frugal_solution* solution, double* Phi,
                                                  double* Psi);
FRUGAL_API frugal_status frugal_solution_report(const frugal_solution* solution,
                                                frugal_report* report);
FRUGAL_API frugal_status frugal_solution_sigma(const frugal_solution* solution, double* sigma);

/* Exponential-filter view {Gamma, beta, L, K} of the solved strategy (the
 * least-squares readout). Buffers: Gamma n*n, beta n*n, L m*n, K n*m. */
FRUGAL_API frugal_status frugal_solution_filter_form(const frugal_solution* solution,
                                                     double* Gamma, double* beta, double* L,
                                                     double* K);

/* Inference regime of the solved strategy via the quadratic-form residual. */
FRUGAL_API frugal_status frugal_solution_regime(const frugal_solution* solution,
                                                double* xi_norm, double* r_slack_min_eig,
                                                int* lossy);

/* Classical Kalman + LQR controller projected onto the strategy class and
 * evaluated at equilibrium. L is m*n, beta n*n; either may be null. */
FRUGAL_API frugal_status frugal_lqg_baseline(const frugal_world* world, const double* Cs,
                                             const double* Ca, double cb, double* Phi,
                                             double* Psi, frugal_report* report, double* L,
                                             double* beta);

/* ------------------------------------------------------------------ */
/* Interpretation                                                      */

/* Subjective generative model under which the strategy is exact Bayesian
 * inference. Fails with FRUGAL_ERR_NUMERICAL when no consistent model
 * exists (possible when the action space is narrower than the state).
 * Buffers: Dtil n*n, Qtil n*n, sigma_e n*n; residual pointers optional. */
FRUGAL_API frugal_status frugal_interpret(const frugal_world* world, const double* Phi,
                                          const double* Psi, double* Dtil, double* Qtil,
                                          double* sigma_e, double* fixed_point_residual,
                                          double* gain_residual);

/* Qualitative profile: credulity (observation trust relative to the true
 * Kalman gain), reactivity (sign structure of the base dynamics) and an
 * oscillation flag. subjective_available reports whether a consistent
 * generative model backs the profile. */
FRUGAL_API frugal_status frugal_profile(const frugal_world* world, const double* Phi,
                                        const double* Psi, double* credulity,
                                        double* reactivity, int* oscillation,
                                        int* subjective_available);

/* ------------------------------------------------------------------ */
/* Solution families                                                   */

FRUGAL_API frugal_status frugal_family_enumerate(const frugal_world* world,
                                                 const frugal_solution* seed, int count,
                                                 uint64_t theta_seed, frugal_family** out);
FRUGAL_API void frugal_family_destroy(frugal_family* family);
FRUGAL_API int frugal_family_size(const frugal_family* family);
/* Buffers: Theta m*m, Phi m*m, Psi m*n; stable and sigma_rel_err report the
 * member's validation outcome. Any output may be null. */
FRUGAL_API frugal_status frugal_family_member(const frugal_family* family, int index,
                                              double* Theta, double* Phi, double* Psi,
                                              int* stable, double* sigma_rel_err);

/* ------------------------------------------------------------------ */
/* Simulation                                                          */

FRUGAL_API frugal_status frugal_rollout_linear(const frugal_world* world, const double* Phi,
                                               const double* Psi, long steps, uint64_t seed,
                                               const double* initial_state,
                                               frugal_rollout** out);
FRUGAL_API frugal_status frugal_rollout_nonlinear(const frugal_plant* plant, const double* Phi,
                                                  const double* Psi, long steps, double dt,
                                                  const double* initial_state, uint64_t seed,
                                                  frugal_rollout** out);
FRUGAL_API void frugal_rollout_destroy(frugal_rollout* rollout);
FRUGAL_API long frugal_rollout_steps(const frugal_rollout* rollout);
FRUGAL_API int frugal_rollout_diverged(const frugal_rollout* rollout);
/* Buffers sized steps*n, steps*n, steps*m; any may be null. */
FRUGAL_API frugal_status frugal_rollout_data(const frugal_rollout* rollout, double* states,
                                             double* observations, double* actions);

typedef struct frugal_cost_sample {
    double state_mean, state_se;
    double action_mean, action_se;
    double bits_mean, bits_se;
    double total_mean, total_se;
    int trials;
} frugal_cost_sample;

FRUGAL_API frugal_status frugal_empirical_costs(const frugal_world* world, const double* Cs,
                                                const double* Ca, double cb, const double* Phi,
                                                const double* Psi, int trials, long steps,
                                                long burn_in, uint64_t seed,
                                                frugal_cost_sample* out);

/* Relative-perturbation loss sensitivity of a fixed strategy to the named
 * physical parameters; +inf marks perturbations whose loop is unstable. */
FRUGAL_API frugal_status frugal_sensitivity(const frugal_plant* plant, double dt,
                                            const double* Cs, const double* Ca, double cb,
                                            const double* Phi, const double* Psi,
                                            const char* const* parameter_names, int n_params,
                                            double rel_step, double* scores);

/* ------------------------------------------------------------------ */
/* Phase sweep                                                         */

typedef struct frugal_sweep_cell {
    double c_s;
    double c_b;
    int ok;      /* 0 when the cell failed; see frugal_sweep_cell_error */
    int lossy;
    int converged;
    double xi_norm;
    double l_norm;
    double state_var;
    double bits;
    double state_cost;
    double action_cost;
    double total_loss;
} frugal_sweep_cell;

/* Solves and classifies one cell per (C_s, C_b) pair of a scalar task.
 * Per-cell failures are recorded, never aborting the sweep. jobs bounds the
 * worker threads; results are independent of it. */
FRUGAL_API frugal_status frugal_phase_sweep(const frugal_world* world, const double* Ca,
                                            const double* cs_values, int n_cs,
                                            const double* cb_values, int n_cb,
                                            const frugal_solve_options* options, int jobs,
                                            frugal_sweep** out);
FRUGAL_API void frugal_sweep_destroy(frugal_sweep* sweep);
FRUGAL_API int frugal_sweep_size(const frugal_sweep* sweep);
FRUGAL_API frugal_status frugal_sweep_get_cell(const frugal_sweep* sweep, int index,
                                           frugal_sweep_cell* cell);
/* Message for a failed cell; empty string for successful ones. The pointer
 * stays valid while the sweep handle lives. */
FRUGAL_API const char* frugal_sweep_cell_error(const frugal_sweep* sweep, int index);

#ifdef __cplusplus
}
#endif

#endif /* FRUGAL_H */
