#include "core/simlab.hpp"

#include <cmath>
#include <random>

namespace frugal {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ull * (stream + 1));
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

Vector cartpole_dynamics(const std::map<std::string, double>& p, const Vector& s,
                         const Vector& a) {
    const double mc = p.at("cart_mass");
    const double mp = p.at("pole_mass");
    const double l = p.at("pole_half_length");
    const double g = p.at("gravity");
    const double total = mc + mp;

    const double gamma = s(2);
    const double gamma_dot = s(3);
    const double force = a(0);
    const double sin_g = std::sin(gamma);
    const double cos_g = std::cos(gamma);

    const double temp = (force + mp * l * gamma_dot * gamma_dot * sin_g) / total;
    const double gamma_ddot =
        (g * sin_g - cos_g * temp) / (l * (4.0 / 3.0 - mp * cos_g * cos_g / total));
    const double x_ddot = temp - mp * l * gamma_ddot * cos_g / total;

    Vector ds(4);
    ds << s(1), x_ddot, gamma_dot, gamma_ddot;
    return ds;
}

Vector drone_dynamics(const std::map<std::string, double>& p, const Vector& s,
                      const Vector& a) {
    const double mass = p.at("mass");
    const double arm = p.at("arm_length");
    const double inertia = p.at("inertia");
    const double g = p.at("gravity");

    // Thrust commands are deviations from the hover thrust m g / 2 per rotor.
    const double t1 = 0.5 * mass * g + a(0);
    const double t2 = 0.5 * mass * g + a(1);
    const double tilt = s(2);

    Vector ds(6);
    ds(0) = s(3);
    ds(1) = s(4);
    ds(2) = s(5);
    ds(3) = -(t1 + t2) * std::sin(tilt) / mass;
    ds(4) = (t1 + t2) * std::cos(tilt) / mass - g;
    ds(5) = arm * (t1 - t2) / inertia;
    return ds;
}

// Index sets carrying velocity-type observation noise (10x the position
// entries).
std::vector<int> velocity_indices(const std::string& name) {
    if (name == "cartpole") return {1, 3};
    return {3, 4, 5};
}

} // namespace

Vector NonlinearPlant::dynamics(const Vector& state, const Vector& action) const {
    if (state.size() != n || action.size() != m) {
        throw DimensionMismatch("plant state/action dimensions");
    }
    if (name == "cartpole") return cartpole_dynamics(params, state, action);
    return drone_dynamics(params, state, action);
}

std::vector<std::string> NonlinearPlant::physical_parameters() const {
    if (name == "cartpole") return {"cart_mass", "pole_mass", "pole_half_length", "gravity"};
    return {"mass", "arm_length", "inertia", "gravity"};
}

double NonlinearPlant::param(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw InvalidArgument("unknown plant parameter: " + key);
    return it->second;
}

void NonlinearPlant::set_param(const std::string& key, double value) {
    auto it = params.find(key);
    if (it == params.end()) throw InvalidArgument("unknown plant parameter: " + key);
    it->second = value;
}

NonlinearPlant make_cartpole() {
    NonlinearPlant p;
    p.name = "cartpole";
    p.n = 4;
    p.m = 1;
    p.target = Vector::Zero(4);
    p.params = {
        {"cart_mass", 1.0},        {"pole_mass", 0.1}, {"pole_half_length", 0.5},
        {"gravity", 9.8},          {"process_noise", 1e-5},
        {"obs_noise_position", 0.01}, {"obs_noise_velocity", 0.1},
    };
    return p;
}

NonlinearPlant make_planar_drone() {
    NonlinearPlant p;
    p.name = "planar_drone";
    p.n = 6;
    p.m = 2;
    p.target = Vector::Zero(6);
    p.params = {
        {"mass", 0.5},   {"arm_length", 0.2}, {"inertia", 0.01},
        {"gravity", 9.8}, {"process_noise", 1e-5},
        {"obs_noise_position", 0.01}, {"obs_noise_velocity", 0.1},
    };
    return p;
}

NonlinearPlant make_plant(const std::string& name) {
    if (name == "cartpole") return make_cartpole();
    if (name == "planar_drone") return make_planar_drone();
    throw InvalidArgument("unknown plant: " + name);
}

Vector rk4_step(const NonlinearPlant& plant, const Vector& state, const Vector& action,
                double dt) {
    Vector k1 = plant.dynamics(state, action);
    Vector k2 = plant.dynamics(state + 0.5 * dt * k1, action);
    Vector k3 = plant.dynamics(state + 0.5 * dt * k2, action);
    Vector k4 = plant.dynamics(state + dt * k3, action);
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

WorldModel linearize(const NonlinearPlant& plant, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    const Eigen::Index n = plant.n;
    const Eigen::Index m = plant.m;
    const Vector nominal = Vector::Zero(m);

    Vector settled = rk4_step(plant, plant.target, nominal, dt);
    if ((settled - plant.target).norm() > 1e-9) {
        throw NotEquilibrium("target state drifts under the nominal action");
    }

    const double h = 1e-6;
    Matrix j_state(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector sp = plant.target, sm = plant.target;
        sp(i) += h;
        sm(i) -= h;
        j_state.col(i) = (plant.dynamics(sp, nominal) - plant.dynamics(sm, nominal)) / (2.0 * h);
    }
    Matrix j_action(n, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        Vector ap = nominal, am = nominal;
        ap(i) += h;
        am(i) -= h;
        j_action.col(i) = (plant.dynamics(plant.target, ap) - plant.dynamics(plant.target, am)) /
                          (2.0 * h);
    }

    WorldModel world;
    world.D = Matrix::Identity(n, n) + dt * j_state;
    world.E = dt * j_action;
    world.Q = plant.param("process_noise") * Matrix::Identity(n, n);
    Vector r_diag = Vector::Constant(n, plant.param("obs_noise_position"));
    for (int idx : velocity_indices(plant.name)) r_diag(idx) = plant.param("obs_noise_velocity");
    world.R = r_diag.asDiagonal();
    world.check_shapes();
    return world;
}

Rollout rollout_linear(const WorldModel& world, const Strategy& s, long steps,
                       std::uint64_t seed, const Vector* initial_state) {
    const Eigen::Index n = world.state_dim();
    const Eigen::Index m = world.action_dim();
    if (steps <= 0) throw InvalidArgument("steps must be positive");

    // Symmetric square roots tolerate semidefinite noise (including the
    // noise-free case Q = R = 0).
    auto psd_factor = [](const Matrix& cov) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
        return (es.eigenvectors() *
                es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal())
            .eval();
    };
    Matrix chol_q = psd_factor(world.Q);
    Matrix chol_r = psd_factor(world.R);

    std::mt19937_64 rng(mix_seed(seed, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](Eigen::Index k) {
        Vector z(k);
        for (Eigen::Index i = 0; i < k; ++i) z(i) = gauss(rng);
        return z;
    };

    Rollout roll;
    roll.seed = seed;
    roll.states = Matrix::Zero(steps, n);
    roll.observations = Matrix::Zero(steps, n);
    roll.actions = Matrix::Zero(steps, m);

    Vector state = initial_state ? *initial_state : Vector::Zero(n);
    Vector action = Vector::Zero(m);
    for (long t = 0; t < steps; ++t) {
        if (t > 0) {
            state = world.D * state + world.E * action + chol_q * draw(n);
        }
        Vector obs = state + chol_r * draw(n);
        action = s.Phi * action + s.Psi * obs;
        roll.states.row(t) = state.transpose();
        roll.observations.row(t) = obs.transpose();
        roll.actions.row(t) = action.transpose();
    }
    return roll;
}

Rollout rollout_nonlinear(const NonlinearPlant& plant, const Strategy& s, long steps,
                          double dt, const Vector& initial_state, std::uint64_t seed,
                          double blowup_bound) {
    if (steps <= 0) throw InvalidArgument("steps must be positive");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    const Eigen::Index n = plant.n;
    const Eigen::Index m = plant.m;
    if (initial_state.size() != n) throw DimensionMismatch("initial state size");

    const double noise_std = std::sqrt(plant.param("process_noise"));
    Vector obs_std(n);
    obs_std.setConstant(std::sqrt(plant.param("obs_noise_position")));
    for (int idx : velocity_indices(plant.name)) {
        obs_std(idx) = std::sqrt(plant.param("obs_noise_velocity"));
    }

    std::mt19937_64 rng(mix_seed(seed, 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](Eigen::Index k) {
        Vector z(k);
        for (Eigen::Index i = 0; i < k; ++i) z(i) = gauss(rng);
        return z;
    };

    Rollout roll;
    roll.seed = seed;
    roll.dt = dt;
    roll.states = Matrix::Zero(steps, n);
    roll.observations = Matrix::Zero(steps, n);
    roll.actions = Matrix::Zero(steps, m);

    Vector state = initial_state;
    Vector action = Vector::Zero(m);
    long filled = 0;
    for (long t = 0; t < steps; ++t) {
        if (t > 0) {
            state = rk4_step(plant, state, action, dt) + noise_std * draw(n);
        }
        if (!state.allFinite() || state.norm() > blowup_bound) {
            roll.diverged = true;
            roll.diverged_at = t;
            break;
        }
        Vector obs = state + obs_std.cwiseProduct(draw(n));
        action = s.Phi * action + s.Psi * (obs - plant.target);
        roll.states.row(t) = state.transpose();
        roll.observations.row(t) = obs.transpose();
        roll.actions.row(t) = action.transpose();
        filled = t + 1;
    }
    if (roll.diverged) {
        roll.states.conservativeResize(filled, n);
        roll.observations.conservativeResize(filled, n);
        roll.actions.conservativeResize(filled, m);
    }
    return roll;
}

CostSample empirical_costs(const WorldModel& world, const CostWeights& weights,
                           const Strategy& s, int trials, long steps, long burn_in,
                           std::uint64_t seed) {
    if (trials < 2) throw InvalidArgument("empirical costs need at least 2 trials");
    if (burn_in < 0 || burn_in >= steps) throw InvalidArgument("burn_in must lie in [0, steps)");
    const Eigen::Index n = world.state_dim();
    const Eigen::Index m = world.action_dim();

    std::vector<double> state_costs(trials), action_costs(trials), bits(trials), totals(trials);
    for (int trial = 0; trial < trials; ++trial) {
        Rollout roll = rollout_linear(world, s, steps, mix_seed(seed, trial));
        const long count = steps - burn_in;
        Matrix z(count, n + m);
        z.leftCols(n) = roll.states.bottomRows(count);
        z.rightCols(m) = roll.actions.bottomRows(count);

        double sc = 0.0, ac = 0.0;
        for (long t = 0; t < count; ++t) {
            Vector sv = z.row(t).head(n);
            Vector av = z.row(t).tail(m);
            sc += sv.dot(weights.C_s * sv);
            ac += av.dot(weights.C_a * av);
        }
        sc /= count;
        ac /= count;

        Eigen::RowVectorXd mean = z.colwise().mean();
        Matrix centered = z.rowwise() - mean;
        Matrix cov = centered.transpose() * centered / static_cast<double>(count - 1);
        SigmaBlocks blocks = split_sigma(((cov + cov.transpose()) / 2.0).eval(), n, m);

        state_costs[trial] = sc;
        action_costs[trial] = ac;
        bits[trial] = gaussian_information_bits(blocks);
        totals[trial] = sc + ac + weights.C_b * bits[trial];
    }

    auto summarize = [&](const std::vector<double>& xs, double& mean, double& se) {
        double sum = 0.0;
        for (double x : xs) sum += x;
        mean = sum / xs.size();
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= (xs.size() - 1);
        se = std::sqrt(var / xs.size());
    };

    CostSample out;
    out.trials = trials;
    summarize(state_costs, out.state_mean, out.state_se);
    summarize(action_costs, out.action_mean, out.action_se);
    summarize(bits, out.bits_mean, out.bits_se);
    summarize(totals, out.total_mean, out.total_se);
    return out;
}

std::vector<double> sensitivity(const NonlinearPlant& plant, double dt,
                                const CostWeights& weights, const Strategy& s,
                                const std::vector<std::string>& parameter_names,
                                double rel_step) {
    if (!(rel_step > 0.0)) throw InvalidArgument("rel_step must be positive");

    auto loss_at = [&](const NonlinearPlant& p) {
        WorldModel world = linearize(p, dt);
        return steady_state(world, weights, s).total_loss;
    };

    std::vector<double> scores;
    scores.reserve(parameter_names.size());
    for (const std::string& name : parameter_names) {
        const double base = plant.param(name); // throws on unknown names
        double plus = 0.0, minus = 0.0;
        bool stable = true;
        try {
            NonlinearPlant p = plant;
            p.set_param(name, base * (1.0 + rel_step));
            plus = loss_at(p);
            p.set_param(name, base * (1.0 - rel_step));
            minus = loss_at(p);
        } catch (const Error&) {
            stable = false;
        }
        // Central difference scaled by the parameter value:
        // p * dL/dp = (L(p(1+h)) - L(p(1-h))) / (2h).
        scores.push_back(stable ? (plus - minus) / (2.0 * rel_step)
                                : std::numeric_limits<double>::infinity());
    }
    return scores;
}

} // namespace frugal
