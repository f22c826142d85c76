#include "frugal/frugal.h"

#include <cstring>
#include <string>

#include "core/family.hpp"
#include "core/interpret.hpp"
#include "core/optimizer.hpp"
#include "core/simlab.hpp"

namespace {

thread_local std::string g_last_error;

using RowMajorMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorOut =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

frugal::Matrix to_matrix(const double* data, Eigen::Index rows, Eigen::Index cols) {
    if (!data) throw frugal::InvalidArgument("null matrix argument");
    return RowMajorMap(data, rows, cols);
}

void from_matrix(const frugal::Matrix& m, double* out) {
    if (out) RowMajorOut(out, m.rows(), m.cols()) = m;
}

frugal_status status_of(const frugal::Error& e) {
    // Malformed caller input (null buffers, bad option values, unknown
    // names) is an argument error regardless of the core category.
    if (dynamic_cast<const frugal::InvalidArgument*>(&e)) return FRUGAL_ERR_ARGUMENT;
    switch (e.category()) {
        case frugal::Error::Category::dimension: return FRUGAL_ERR_ARGUMENT;
        case frugal::Error::Category::numerical: return FRUGAL_ERR_NUMERICAL;
        case frugal::Error::Category::constraint: return FRUGAL_ERR_CONSTRAINT;
        case frugal::Error::Category::convergence: return FRUGAL_ERR_CONVERGENCE;
    }
    return FRUGAL_ERR_INTERNAL;
}

template <typename Fn>
frugal_status guarded(Fn&& fn) {
    try {
        fn();
        return FRUGAL_OK;
    } catch (const frugal::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FRUGAL_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return FRUGAL_ERR_INTERNAL;
    }
}

frugal::CostWeights read_weights(const frugal::WorldModel& world, const double* cs,
                                 const double* ca, double cb) {
    frugal::CostWeights w;
    w.C_s = to_matrix(cs, world.state_dim(), world.state_dim());
    w.C_a = to_matrix(ca, world.action_dim(), world.action_dim());
    w.C_b = cb;
    w.check(world);
    return w;
}

frugal::Strategy read_strategy(const frugal::WorldModel& world, const double* phi,
                               const double* psi) {
    frugal::Strategy s;
    s.Phi = to_matrix(phi, world.action_dim(), world.action_dim());
    s.Psi = to_matrix(psi, world.action_dim(), world.state_dim());
    return s;
}

void fill_report(const frugal::EquilibriumReport& rep, frugal_report* out) {
    if (!out) return;
    out->state_cost = rep.state_cost;
    out->action_cost = rep.action_cost;
    out->information_bits = rep.information_bits;
    out->total_loss = rep.total_loss;
    out->spectral_radius = rep.spectral_radius;
}

} // namespace

struct frugal_world {
    frugal::WorldModel model;
};

struct frugal_plant {
    frugal::NonlinearPlant plant;
};

struct frugal_solution {
    frugal::WorldModel world;
    frugal::SolveResult result;
};

struct frugal_family {
    std::vector<frugal::FamilyMember> members;
};

struct frugal_rollout {
    frugal::Rollout roll;
};

struct frugal_sweep {
    std::vector<frugal::SweepCell> cells;
};

extern "C" {

const char* frugal_last_error(void) { return g_last_error.c_str(); }

/* ---- worlds ---- */

frugal_status frugal_world_create(int n, int m, const double* D, const double* E,
                                  const double* Q, const double* R, frugal_world** out) {
    return guarded([&] {
        if (!out) throw frugal::InvalidArgument("null output handle");
        if (n <= 0 || m <= 0) throw frugal::DimensionMismatch("dimensions must be positive");
        frugal::WorldModel w;
        w.D = to_matrix(D, n, n);
        w.E = to_matrix(E, n, m);
        w.Q = to_matrix(Q, n, n);
        w.R = to_matrix(R, n, n);
        w.check_shapes();
        *out = new frugal_world{std::move(w)};
    });
}

void frugal_world_destroy(frugal_world* world) { delete world; }

int frugal_world_state_dim(const frugal_world* world) {
    return world ? static_cast<int>(world->model.state_dim()) : 0;
}

int frugal_world_action_dim(const frugal_world* world) {
    return world ? static_cast<int>(world->model.action_dim()) : 0;
}

frugal_status frugal_world_get(const frugal_world* world, double* D, double* E, double* Q,
                               double* R) {
    return guarded([&] {
        if (!world) throw frugal::InvalidArgument("null world");
        from_matrix(world->model.D, D);
        from_matrix(world->model.E, E);
        from_matrix(world->model.Q, Q);
        from_matrix(world->model.R, R);
    });
}

frugal_status frugal_world_validate(const frugal_world* world) {
    return guarded([&] {
        if (!world) throw frugal::InvalidArgument("null world");
        world->model.check_stabilizable();
    });
}

/* ---- plants ---- */

frugal_status frugal_plant_create(const char* name, frugal_plant** out) {
    return guarded([&] {
        if (!out || !name) throw frugal::InvalidArgument("null argument");
        *out = new frugal_plant{frugal::make_plant(name)};
    });
}

void frugal_plant_destroy(frugal_plant* plant) { delete plant; }

int frugal_plant_state_dim(const frugal_plant* plant) {
    return plant ? static_cast<int>(plant->plant.n) : 0;
}

int frugal_plant_action_dim(const frugal_plant* plant) {
    return plant ? static_cast<int>(plant->plant.m) : 0;
}

frugal_status frugal_plant_set_param(frugal_plant* plant, const char* key, double value) {
    return guarded([&] {
        if (!plant || !key) throw frugal::InvalidArgument("null argument");
        plant->plant.set_param(key, value);
    });
}

frugal_status frugal_plant_get_param(const frugal_plant* plant, const char* key,
                                     double* value) {
    return guarded([&] {
        if (!plant || !key || !value) throw frugal::InvalidArgument("null argument");
        *value = plant->plant.param(key);
    });
}

frugal_status frugal_plant_linearize(const frugal_plant* plant, double dt,
                                     frugal_world** out) {
    return guarded([&] {
        if (!plant || !out) throw frugal::InvalidArgument("null argument");
        *out = new frugal_world{frugal::linearize(plant->plant, dt)};
    });
}

/* ---- equilibrium ---- */

frugal_status frugal_evaluate(const frugal_world* world, const double* Cs, const double* Ca,
                              double cb, const double* Phi, const double* Psi,
                              frugal_report* report, double* sigma) {
    return guarded([&] {
        if (!world) throw frugal::InvalidArgument("null world");
        frugal::CostWeights w = read_weights(world->model, Cs, Ca, cb);
        frugal::Strategy s = read_strategy(world->model, Phi, Psi);
        frugal::EquilibriumReport rep = frugal::steady_state(world->model, w, s);
        fill_report(rep, report);
        from_matrix(rep.Sigma, sigma);
    });
}

frugal_status frugal_landscape(const frugal_world* world, const double* Cs, const double* Ca,
                               double cb, const double* phi_values, int n_phi,
                               const double* psi_values, int n_psi, double* losses) {
    return guarded([&] {
        if (!world || !phi_values || !psi_values || !losses) {
            throw frugal::InvalidArgument("null argument");
        }
        frugal::CostWeights w = read_weights(world->model, Cs, Ca, cb);
        std::vector<double> phis(phi_values, phi_values + n_phi);
        std::vector<double> psis(psi_values, psi_values + n_psi);
        from_matrix(frugal::landscape(world->model, w, phis, psis), losses);
    });
}

/* ---- optimization ---- */

void frugal_solve_options_init(frugal_solve_options* options) {
    if (!options) return;
    frugal::OptimizerConfig defaults;
    options->learning_rate = defaults.learning_rate;
    options->max_iters = defaults.max_iters;
    options->grad_tol = defaults.grad_tol;
    options->restarts = defaults.restarts;
    options->seed = defaults.seed;
    options->stability_margin = defaults.stability_margin;
}

static frugal::OptimizerConfig read_options(const frugal_solve_options* options) {
    frugal::OptimizerConfig cfg;
    if (options) {
        cfg.learning_rate = options->learning_rate;
        cfg.max_iters = options->max_iters;
        cfg.grad_tol = options->grad_tol;
        cfg.restarts = options->restarts;
        cfg.seed = options->seed;
        cfg.stability_margin = options->stability_margin;
    }
    return cfg;
}

frugal_status frugal_solve(const frugal_world* world, const double* Cs, const double* Ca,
                           double cb, const frugal_solve_options* options,
                           frugal_solution** out) {
    return guarded([&] {
        if (!world || !out) throw frugal::InvalidArgument("null argument");
        frugal::CostWeights w = read_weights(world->model, Cs, Ca, cb);
        frugal::SolveResult result = frugal::solve(world->model, w, read_options(options));
        *out = new frugal_solution{world->model, std::move(result)};
    });
}

frugal_status frugal_solution_from_strategy(const frugal_world* world, const double* Cs,
                                            const double* Ca, double cb, const double* Phi,
                                            const double* Psi, int converged,
                                            frugal_solution** out) {
    return guarded([&] {
        if (!world || !out) throw frugal::InvalidArgument("null argument");
        frugal::CostWeights w = read_weights(world->model, Cs, Ca, cb);
        frugal::SolveResult result;
        result.strategy = read_strategy(world->model, Phi, Psi);
        result.report = frugal::steady_state(world->model, w, result.strategy);
        result.converged = converged != 0;
        *out = new frugal_solution{world->model, std::move(result)};
    });
}

void frugal_solution_destroy(frugal_solution* solution) { delete solution; }

int frugal_solution_converged(const frugal_solution* solution) {
    return solution && solution->result.converged ? 1 : 0;
}

double frugal_solution_grad_norm(const frugal_solution* solution) {
    return solution ? solution->result.grad_norm : 0.0;
}

double frugal_solution_hessian_min_eig(const frugal_solution* solution) {
    return solution ? solution->result.hessian_min_eig : 0.0;
}

int frugal_solution_restarts(const frugal_solution* solution) {
    return solution ? static_cast<int>(solution->result.restart_losses.size()) : 0;
}

double frugal_solution_restart_loss(const frugal_solution* solution, int index) {
    if (!solution || index < 0 ||
        index >= static_cast<int>(solution->result.restart_losses.size())) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return solution->result.restart_losses[index];
}

frugal_status frugal_solution_strategy(const frugal_solution* solution, double* Phi,
                                       double* Psi) {
    return guarded([&] {
        if (!solution) throw frugal::InvalidArgument("null solution");
        from_matrix(solution->result.strategy.Phi, Phi);
        from_matrix(solution->result.strategy.Psi, Psi);
    });
}

frugal_status frugal_solution_report(const frugal_solution* solution, frugal_report* report) {
    return guarded([&] {
        if (!solution || !report) throw frugal::InvalidArgument("null argument");
        fill_report(solution->result.report, report);
    });
}

frugal_status frugal_solution_sigma(const frugal_solution* solution, double* sigma) {
    return guarded([&] {
        if (!solution || !sigma) throw frugal::InvalidArgument("null argument");
        from_matrix(solution->result.report.Sigma, sigma);
    });
}

frugal_status frugal_solution_filter_form(const frugal_solution* solution, double* Gamma,
                                          double* beta, double* L, double* K) {
    return guarded([&] {
        if (!solution) throw frugal::InvalidArgument("null solution");
        frugal::FilterForm f = frugal::filter_from_strategy(solution->result.strategy,
                                                            solution->result.report.Sigma);
        from_matrix(f.Gamma, Gamma);
        from_matrix(f.beta, beta);
        from_matrix(f.L, L);
        from_matrix(f.K, K);
    });
}

frugal_status frugal_solution_regime(const frugal_solution* solution, double* xi_norm,
                                     double* r_slack_min_eig, int* lossy) {
    return guarded([&] {
        if (!solution) throw frugal::InvalidArgument("null solution");
        frugal::QuadraticFormData q =
            frugal::quadratic_form_data(solution->world, solution->result.report.Sigma);
        if (xi_norm) *xi_norm = q.xi.norm();
        if (r_slack_min_eig) *r_slack_min_eig = q.r_slack_min_eig;
        if (lossy) *lossy = frugal::classify_regime(q) == frugal::Regime::lossy ? 1 : 0;
    });
}

frugal_status frugal_lqg_baseline(const frugal_world* world, const double* Cs,
                                  const double* Ca, double cb, double* Phi, double* Psi,
                                  frugal_report* report, double* L, double* beta) {
    return guarded([&] {
        if (!world) throw frugal::InvalidArgument("null world");
        frugal::CostWeights w = read_weights(world->model, Cs, Ca, cb);
        frugal::LqgBaseline base = frugal::classical_lqg_baseline(world->model, w);
        from_matrix(base.strategy.Phi, Phi);
        from_matrix(base.strategy.Psi, Psi);
        fill_report(base.report, report);
        from_matrix(base.L, L);
        from_matrix(base.beta, beta);
    });
}

/* ---- interpretation ---- */

frugal_status frugal_interpret(const frugal_world* world, const double* Phi, const double* Psi,
                               double* Dtil, double* Qtil, double* sigma_e,
                               double* fixed_point_residual, double* gain_residual) {
    return guarded([&] {
        if (!world) throw frugal::InvalidArgument("null world");
        frugal::Strategy s = read_strategy(world->model, Phi, Psi);
        frugal::AugmentedSystem sys = frugal::build_augmented(world->model, s);
        frugal::Matrix sigma = frugal::linalg::solve_dlyap(sys.M, sys.Upsilon);
        frugal::Interpretation interp = frugal::interpret_strategy(world->model, s, sigma);
        from_matrix(interp.recovered.model.Dtil, Dtil);
        from_matrix(interp.recovered.model.Qtil, Qtil);
        from_matrix(interp.sigma_e, sigma_e);
        if (fixed_point_residual) *fixed_point_residual = interp.recovered.fixed_point_residual;
        if (gain_residual) *gain_residual = interp.recovered.gain_residual;
    });
}

frugal_status frugal_profile(const frugal_world* world, const double* Phi, const double* Psi,
                             double* credulity, double* reactivity, int* oscillation,
                             int* subjective_available) {
    return guarded([&] {
        if (!world) throw frugal::InvalidArgument("null world");
        frugal::Strategy s = read_strategy(world->model, Phi, Psi);
        frugal::AugmentedSystem sys = frugal::build_augmented(world->model, s);
        frugal::Matrix sigma = frugal::linalg::solve_dlyap(sys.M, sys.Upsilon);
        frugal::StrategyProfile p = frugal::profile(world->model, s, sigma);
        if (credulity) *credulity = p.credulity_index;
        if (reactivity) *reactivity = p.reactivity_index;
        if (oscillation) *oscillation = p.oscillation_flag ? 1 : 0;
        if (subjective_available) *subjective_available = p.subjective_available ? 1 : 0;
    });
}

/* ---- families ---- */

frugal_status frugal_family_enumerate(const frugal_world* world, const frugal_solution* seed,
                                      int count, uint64_t theta_seed, frugal_family** out) {
    return guarded([&] {
        if (!world || !seed || !out) throw frugal::InvalidArgument("null argument");
        auto members = frugal::enumerate_family(world->model, seed->result, count, theta_seed);
        *out = new frugal_family{std::move(members)};
    });
}

void frugal_family_destroy(frugal_family* family) { delete family; }

int frugal_family_size(const frugal_family* family) {
    return family ? static_cast<int>(family->members.size()) : 0;
}

frugal_status frugal_family_member(const frugal_family* family, int index, double* Theta,
                                   double* Phi, double* Psi, int* stable,
                                   double* sigma_rel_err) {
    return guarded([&] {
        if (!family) throw frugal::InvalidArgument("null family");
        if (index < 0 || index >= static_cast<int>(family->members.size())) {
            throw frugal::InvalidArgument("member index out of range");
        }
        const frugal::FamilyMember& m = family->members[index];
        from_matrix(m.Theta, Theta);
        from_matrix(m.strategy.Phi, Phi);
        from_matrix(m.strategy.Psi, Psi);
        if (stable) *stable = m.stable ? 1 : 0;
        if (sigma_rel_err) *sigma_rel_err = m.sigma_rel_err;
    });
}

/* ---- simulation ---- */

frugal_status frugal_rollout_linear(const frugal_world* world, const double* Phi,
                                    const double* Psi, long steps, uint64_t seed,
                                    const double* initial_state, frugal_rollout** out) {
    return guarded([&] {
        if (!world || !out) throw frugal::InvalidArgument("null argument");
        frugal::Strategy s = read_strategy(world->model, Phi, Psi);
        if (initial_state) {
            frugal::Vector init =
                Eigen::Map<const frugal::Vector>(initial_state, world->model.state_dim());
            *out = new frugal_rollout{
                frugal::rollout_linear(world->model, s, steps, seed, &init)};
        } else {
            *out = new frugal_rollout{frugal::rollout_linear(world->model, s, steps, seed)};
        }
    });
}

frugal_status frugal_rollout_nonlinear(const frugal_plant* plant, const double* Phi,
                                       const double* Psi, long steps, double dt,
                                       const double* initial_state, uint64_t seed,
                                       frugal_rollout** out) {
    return guarded([&] {
        if (!plant || !out || !initial_state) throw frugal::InvalidArgument("null argument");
        frugal::Strategy s;
        s.Phi = to_matrix(Phi, plant->plant.m, plant->plant.m);
        s.Psi = to_matrix(Psi, plant->plant.m, plant->plant.n);
        frugal::Vector init = Eigen::Map<const frugal::Vector>(initial_state, plant->plant.n);
        *out = new frugal_rollout{
            frugal::rollout_nonlinear(plant->plant, s, steps, dt, init, seed)};
    });
}

void frugal_rollout_destroy(frugal_rollout* rollout) { delete rollout; }

long frugal_rollout_steps(const frugal_rollout* rollout) {
    return rollout ? static_cast<long>(rollout->roll.states.rows()) : 0;
}

int frugal_rollout_diverged(const frugal_rollout* rollout) {
    return rollout && rollout->roll.diverged ? 1 : 0;
}

frugal_status frugal_rollout_data(const frugal_rollout* rollout, double* states,
                                  double* observations, double* actions) {
    return guarded([&] {
        if (!rollout) throw frugal::InvalidArgument("null rollout");
        from_matrix(rollout->roll.states, states);
        from_matrix(rollout->roll.observations, observations);
        from_matrix(rollout->roll.actions, actions);
    });
}

frugal_status frugal_empirical_costs(const frugal_world* world, const double* Cs,
                                     const double* Ca, double cb, const double* Phi,
                                     const double* Psi, int trials, long steps, long burn_in,
                                     uint64_t seed, frugal_cost_sample* out) {
    return guarded([&] {
        if (!world || !out) throw frugal::InvalidArgument("null argument");
        frugal::CostWeights w = read_weights(world->model, Cs, Ca, cb);
        frugal::Strategy s = read_strategy(world->model, Phi, Psi);
        frugal::CostSample sample =
            frugal::empirical_costs(world->model, w, s, trials, steps, burn_in, seed);
        out->state_mean = sample.state_mean;
        out->state_se = sample.state_se;
        out->action_mean = sample.action_mean;
        out->action_se = sample.action_se;
        out->bits_mean = sample.bits_mean;
        out->bits_se = sample.bits_se;
        out->total_mean = sample.total_mean;
        out->total_se = sample.total_se;
        out->trials = sample.trials;
    });
}

frugal_status frugal_sensitivity(const frugal_plant* plant, double dt, const double* Cs,
                                 const double* Ca, double cb, const double* Phi,
                                 const double* Psi, const char* const* parameter_names,
                                 int n_params, double rel_step, double* scores) {
    return guarded([&] {
        if (!plant || !parameter_names || !scores) {
            throw frugal::InvalidArgument("null argument");
        }
        std::vector<std::string> names;
        for (int i = 0; i < n_params; ++i) {
            if (!parameter_names[i]) throw frugal::InvalidArgument("null parameter name");
            names.emplace_back(parameter_names[i]);
        }
        frugal::WorldModel linear = frugal::linearize(plant->plant, dt);
        frugal::CostWeights w = read_weights(linear, Cs, Ca, cb);
        frugal::Strategy s = read_strategy(linear, Phi, Psi);
        auto result = frugal::sensitivity(plant->plant, dt, w, s, names, rel_step);
        std::memcpy(scores, result.data(), sizeof(double) * result.size());
    });
}

/* ---- phase sweep ---- */

frugal_status frugal_phase_sweep(const frugal_world* world, const double* Ca,
                                 const double* cs_values, int n_cs, const double* cb_values,
                                 int n_cb, const frugal_solve_options* options, int jobs,
                                 frugal_sweep** out) {
    return guarded([&] {
        if (!world || !Ca || !cs_values || !cb_values || !out) {
            throw frugal::InvalidArgument("null argument");
        }
        frugal::CostWeights base;
        base.C_s = frugal::Matrix::Constant(1, 1, 1.0);
        base.C_a = to_matrix(Ca, world->model.action_dim(), world->model.action_dim());
        base.C_b = 0.0;
        std::vector<double> cs(cs_values, cs_values + n_cs);
        std::vector<double> cb(cb_values, cb_values + n_cb);
        auto cells =
            frugal::phase_sweep(world->model, base, cs, cb, read_options(options), jobs);
        *out = new frugal_sweep{std::move(cells)};
    });
}

void frugal_sweep_destroy(frugal_sweep* sweep) { delete sweep; }

int frugal_sweep_size(const frugal_sweep* sweep) {
    return sweep ? static_cast<int>(sweep->cells.size()) : 0;
}

frugal_status frugal_sweep_get_cell(const frugal_sweep* sweep, int index, frugal_sweep_cell* cell) {
    return guarded([&] {
        if (!sweep || !cell) throw frugal::InvalidArgument("null argument");
        if (index < 0 || index >= static_cast<int>(sweep->cells.size())) {
            throw frugal::InvalidArgument("cell index out of range");
        }
        const frugal::SweepCell& c = sweep->cells[index];
        cell->c_s = c.c_s;
        cell->c_b = c.c_b;
        cell->ok = c.ok ? 1 : 0;
        cell->lossy = c.regime == frugal::Regime::lossy ? 1 : 0;
        cell->converged = c.converged ? 1 : 0;
        cell->xi_norm = c.xi_norm;
        cell->l_norm = c.l_norm;
        cell->state_var = c.state_var;
        cell->bits = c.bits;
        cell->state_cost = c.state_cost;
        cell->action_cost = c.action_cost;
        cell->total_loss = c.total_loss;
    });
}

const char* frugal_sweep_cell_error(const frugal_sweep* sweep, int index) {
    if (!sweep || index < 0 || index >= static_cast<int>(sweep->cells.size())) return "";
    return sweep->cells[index].error.c_str();
}

} /* extern "C" */
