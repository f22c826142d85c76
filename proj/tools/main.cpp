// frugal - command-line front end for the frugal control library.
//
// Subcommands: solve, sweep, family, simulate. Each reads one JSON config,
// runs the corresponding pipeline through the C API and writes
// machine-readable artifacts into --out. Exit codes: 0 success, 1 input
// error, 2 not converged / completed with warnings, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "frugal/frugal.h"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotConvergedExit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void api(frugal_status status, const std::string& what) {
    if (status == FRUGAL_OK) return;
    const std::string msg = what + ": " + frugal_last_error();
    if (status == FRUGAL_ERR_ARGUMENT) throw ConfigError(msg);
    throw RunError(msg);
}

// ---- RAII wrappers over the C handles ----

template <typename T, void (*Destroy)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    explicit Handle(T* p) : ptr(p) {}
    ~Handle() { reset(); }
    Handle(Handle&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
    Handle& operator=(Handle&& other) noexcept {
        if (this != &other) {
            reset();
            ptr = other.ptr;
            other.ptr = nullptr;
        }
        return *this;
    }
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    void reset() {
        if (ptr) Destroy(ptr);
        ptr = nullptr;
    }
    T** out() {
        reset();
        return &ptr;
    }
    operator T*() const { return ptr; }
};

using World = Handle<frugal_world, frugal_world_destroy>;
using Plant = Handle<frugal_plant, frugal_plant_destroy>;
using Solution = Handle<frugal_solution, frugal_solution_destroy>;
using Family = Handle<frugal_family, frugal_family_destroy>;
using RolloutHandle = Handle<frugal_rollout, frugal_rollout_destroy>;
using Sweep = Handle<frugal_sweep, frugal_sweep_destroy>;

// ---- config parsing ----

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
}

const json& require(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing required field '" + key + "'");
    return *it;
}

// A matrix field is either a nested row array or, for square targets, a
// scalar meaning value * identity.
std::vector<double> parse_matrix(const json& j, int rows, int cols, const std::string& where) {
    std::vector<double> data(static_cast<std::size_t>(rows) * cols, 0.0);
    if (j.is_number()) {
        if (rows != cols) {
            throw ConfigError(where + ": scalar shorthand needs a square matrix, want " +
                              std::to_string(rows) + "x" + std::to_string(cols));
        }
        for (int i = 0; i < rows; ++i) data[i * cols + i] = j.get<double>();
        return data;
    }
    if (!j.is_array() || static_cast<int>(j.size()) != rows) {
        throw ConfigError(where + ": expected " + std::to_string(rows) + " rows");
    }
    for (int r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            throw ConfigError(where + ": row " + std::to_string(r) + " must have " +
                              std::to_string(cols) + " entries");
        }
        for (int c = 0; c < cols; ++c) {
            if (!row[c].is_number()) throw ConfigError(where + ": non-numeric entry");
            data[r * cols + c] = row[c].get<double>();
        }
    }
    return data;
}

json matrix_json(const double* data, int rows, int cols) {
    json out = json::array();
    for (int r = 0; r < rows; ++r) {
        json row = json::array();
        for (int c = 0; c < cols; ++c) row.push_back(data[r * cols + c]);
        out.push_back(std::move(row));
    }
    return out;
}

struct Problem {
    World world;
    Plant plant; // engaged only for plant-backed configs
    bool has_plant = false;
    double dt = 0.02;
    int n = 0;
    int m = 0;
    std::vector<double> Cs, Ca;
    double cb = 0.0;
    frugal_solve_options options{};
    json world_meta;
};

Problem load_problem(const json& config, std::optional<std::uint64_t> seed_override) {
    Problem p;
    const json& world = require(config, "world", "config");

    if (world.contains("plant")) {
        const std::string name = require(world, "plant", "world").get<std::string>();
        api(frugal_plant_create(name.c_str(), p.plant.out()), "world.plant");
        p.has_plant = true;
        p.dt = world.value("dt", 0.02);
        if (world.contains("params")) {
            for (auto& [key, value] : world["params"].items()) {
                if (!value.is_number()) throw ConfigError("world.params." + key + ": not a number");
                api(frugal_plant_set_param(p.plant, key.c_str(), value.get<double>()),
                    "world.params." + key);
            }
        }
        api(frugal_plant_linearize(p.plant, p.dt, p.world.out()), "world.plant linearization");
        p.world_meta["plant"] = name;
        p.world_meta["dt"] = p.dt;
    } else {
        const json& dj = require(world, "D", "world");
        if (!dj.is_array() || dj.empty()) throw ConfigError("world.D: expected a row array");
        const int n = static_cast<int>(dj.size());
        const json& ej = require(world, "E", "world");
        if (!ej.is_array() || ej.empty() || !ej[0].is_array() || ej[0].empty()) {
            throw ConfigError("world.E: expected a non-empty matrix");
        }
        const int m = static_cast<int>(ej[0].size());
        auto D = parse_matrix(dj, n, n, "world.D");
        auto E = parse_matrix(ej, n, m, "world.E");
        auto Q = parse_matrix(require(world, "Q", "world"), n, n, "world.Q");
        auto R = parse_matrix(require(world, "R", "world"), n, n, "world.R");
        api(frugal_world_create(n, m, D.data(), E.data(), Q.data(), R.data(), p.world.out()),
            "world");
        p.world_meta["source"] = "matrices";
    }

    p.n = frugal_world_state_dim(p.world);
    p.m = frugal_world_action_dim(p.world);

    if (frugal_world_validate(p.world) != FRUGAL_OK) {
        throw ConfigError(std::string("world: not stabilizable: ") + frugal_last_error());
    }

    {
        std::vector<double> D(p.n * p.n), E(p.n * p.m), Q(p.n * p.n), R(p.n * p.n);
        api(frugal_world_get(p.world, D.data(), E.data(), Q.data(), R.data()), "world readback");
        p.world_meta["n"] = p.n;
        p.world_meta["m"] = p.m;
        p.world_meta["D"] = matrix_json(D.data(), p.n, p.n);
        p.world_meta["E"] = matrix_json(E.data(), p.n, p.m);
        p.world_meta["Q"] = matrix_json(Q.data(), p.n, p.n);
        p.world_meta["R"] = matrix_json(R.data(), p.n, p.n);
    }

    const json& weights = require(config, "weights", "config");
    p.Cs = parse_matrix(require(weights, "C_s", "weights"), p.n, p.n, "weights.C_s");
    p.Ca = parse_matrix(require(weights, "C_a", "weights"), p.m, p.m, "weights.C_a");
    const json& cb = require(weights, "C_b", "weights");
    if (!cb.is_number()) throw ConfigError("weights.C_b: not a number");
    p.cb = cb.get<double>();

    frugal_solve_options_init(&p.options);
    if (config.contains("optimizer")) {
        const json& opt = config["optimizer"];
        p.options.learning_rate = opt.value("learning_rate", p.options.learning_rate);
        p.options.max_iters = opt.value("max_iters", p.options.max_iters);
        p.options.grad_tol = opt.value("grad_tol", p.options.grad_tol);
        p.options.restarts = opt.value("restarts", p.options.restarts);
        p.options.seed = opt.value("seed", p.options.seed);
        p.options.stability_margin = opt.value("stability_margin", p.options.stability_margin);
    }
    if (seed_override) p.options.seed = *seed_override;
    return p;
}

// ---- artifact writing ----

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RunError("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string csv_number(double v) {
    char buf[40];
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json options_json(const frugal_solve_options& o) {
    return json{{"learning_rate", o.learning_rate}, {"max_iters", o.max_iters},
                {"grad_tol", o.grad_tol},           {"restarts", o.restarts},
                {"seed", o.seed},                   {"stability_margin", o.stability_margin}};
}

json report_json(const frugal_report& r) {
    return json{{"state_cost", r.state_cost},
                {"action_cost", r.action_cost},
                {"information_bits", r.information_bits},
                {"total_loss", r.total_loss},
                {"spectral_radius", r.spectral_radius}};
}

json weights_json(const Problem& p) {
    return json{{"C_s", matrix_json(p.Cs.data(), p.n, p.n)},
                {"C_a", matrix_json(p.Ca.data(), p.m, p.m)},
                {"C_b", p.cb}};
}

// Full description of one strategy: equilibrium report, profile and (when
// it exists) the subjective model.
json describe_strategy(const Problem& p, const std::vector<double>& phi,
                       const std::vector<double>& psi) {
    json out;
    out["Phi"] = matrix_json(phi.data(), p.m, p.m);
    out["Psi"] = matrix_json(psi.data(), p.m, p.n);

    frugal_report rep{};
    api(frugal_evaluate(p.world, p.Cs.data(), p.Ca.data(), p.cb, phi.data(), psi.data(), &rep,
                        nullptr),
        "equilibrium evaluation");
    out["report"] = report_json(rep);

    double credulity = 0, reactivity = 0;
    int oscillation = 0, available = 0;
    api(frugal_profile(p.world, phi.data(), psi.data(), &credulity, &reactivity, &oscillation,
                       &available),
        "profile");
    out["profile"] = json{{"credulity_index", credulity},
                          {"reactivity_index", reactivity},
                          {"oscillation", oscillation != 0}};

    if (available) {
        std::vector<double> dtil(p.n * p.n), qtil(p.n * p.n), sigma_e(p.n * p.n);
        double fp = 0, gain = 0;
        api(frugal_interpret(p.world, phi.data(), psi.data(), dtil.data(), qtil.data(),
                             sigma_e.data(), &fp, &gain),
            "interpretation");
        out["subjective_model"] = json{{"available", true},
                                       {"D", matrix_json(dtil.data(), p.n, p.n)},
                                       {"Q", matrix_json(qtil.data(), p.n, p.n)},
                                       {"error_cov", matrix_json(sigma_e.data(), p.n, p.n)},
                                       {"fixed_point_residual", fp},
                                       {"gain_residual", gain}};
    } else {
        out["subjective_model"] = json{{"available", false}};
    }
    return out;
}

// ---- solve ----

int cmd_solve(const json& config, const fs::path& out_dir,
              std::optional<std::uint64_t> seed_override) {
    Problem p = load_problem(config, seed_override);

    Solution sol;
    api(frugal_solve(p.world, p.Cs.data(), p.Ca.data(), p.cb, &p.options, sol.out()), "solve");

    std::vector<double> phi(p.m * p.m), psi(p.m * p.n);
    api(frugal_solution_strategy(sol, phi.data(), psi.data()), "solution strategy");

    json artifact;
    artifact["schema"] = "frugal-solution-v1";
    artifact["world"] = p.world_meta;
    artifact["weights"] = weights_json(p);
    artifact["optimizer"] = options_json(p.options);
    artifact["strategy"] = describe_strategy(p, phi, psi);

    {
        std::vector<double> gamma(p.n * p.n), beta(p.n * p.n), gain(p.m * p.n), k(p.n * p.m);
        api(frugal_solution_filter_form(sol, gamma.data(), beta.data(), gain.data(), k.data()),
            "filter form");
        artifact["filter_form"] = json{{"Gamma", matrix_json(gamma.data(), p.n, p.n)},
                                       {"beta", matrix_json(beta.data(), p.n, p.n)},
                                       {"L", matrix_json(gain.data(), p.m, p.n)},
                                       {"K", matrix_json(k.data(), p.n, p.m)}};
    }
    {
        double xi_norm = 0, r_slack = 0;
        int lossy = 0;
        api(frugal_solution_regime(sol, &xi_norm, &r_slack, &lossy), "regime");
        artifact["regime"] = json{{"label", lossy ? "lossy" : "lossless"},
                                  {"xi_norm", xi_norm},
                                  {"r_slack_min_eig", r_slack}};
    }
    {
        json conv;
        conv["converged"] = frugal_solution_converged(sol) != 0;
        conv["grad_norm"] = frugal_solution_grad_norm(sol);
        conv["hessian_min_eig"] = frugal_solution_hessian_min_eig(sol);
        json losses = json::array();
        for (int i = 0; i < frugal_solution_restarts(sol); ++i) {
            const double l = frugal_solution_restart_loss(sol, i);
            losses.push_back(std::isfinite(l) ? json(l) : json("unusable"));
        }
        conv["restart_losses"] = losses;
        artifact["convergence"] = conv;
    }
    {
        std::vector<double> bphi(p.m * p.m), bpsi(p.m * p.n), bl(p.m * p.n), bbeta(p.n * p.n);
        frugal_report brep{};
        frugal_status st = frugal_lqg_baseline(p.world, p.Cs.data(), p.Ca.data(), p.cb,
                                               bphi.data(), bpsi.data(), &brep, bl.data(),
                                               bbeta.data());
        if (st == FRUGAL_OK) {
            artifact["baseline"] = json{{"Phi", matrix_json(bphi.data(), p.m, p.m)},
                                        {"Psi", matrix_json(bpsi.data(), p.m, p.n)},
                                        {"L", matrix_json(bl.data(), p.m, p.n)},
                                        {"beta", matrix_json(bbeta.data(), p.n, p.n)},
                                        {"report", report_json(brep)}};
        } else {
            // The projected classical controller need not stabilize plants
            // with fewer actuators than states; record why it is absent.
            artifact["baseline"] = json{{"error", frugal_last_error()}};
        }
    }

    write_atomic(out_dir / "solution.json", artifact.dump(2) + "\n");
    return frugal_solution_converged(sol) ? 0 : 2;
}

// ---- sweep ----

std::vector<double> parse_grid(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array");
    std::vector<double> values;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(where + ": non-numeric entry");
        values.push_back(v.get<double>());
    }
    return values;
}

int cmd_sweep(const json& config, const fs::path& out_dir,
              std::optional<std::uint64_t> seed_override, int jobs) {
    Problem p = load_problem(config, seed_override);
    if (p.n != 1 || p.m != 1) throw ConfigError("sweep: the task must be scalar (n = m = 1)");
    const json& sweep = require(config, "sweep", "config");
    auto cs = parse_grid(require(sweep, "c_s", "sweep"), "sweep.c_s");
    auto cb = parse_grid(require(sweep, "c_b", "sweep"), "sweep.c_b");

    Sweep table;
    api(frugal_phase_sweep(p.world, p.Ca.data(), cs.data(), static_cast<int>(cs.size()),
                           cb.data(), static_cast<int>(cb.size()), &p.options, jobs,
                           table.out()),
        "phase sweep");

    std::string csv = "# schema: frugal-sweep-v1\n";
    csv += "c_s,c_b,status,regime,xi_norm,bits,state_var,l_norm,state_cost,action_cost,"
           "total_loss\n";
    bool all_clean = true;
    const int cells = frugal_sweep_size(table);
    for (int i = 0; i < cells; ++i) {
        frugal_sweep_cell cell{};
        api(frugal_sweep_get_cell(table, i, &cell), "sweep cell");
        if (!cell.ok) {
            all_clean = false;
            csv += csv_number(cell.c_s) + "," + csv_number(cell.c_b) + ",error,,,,,,,,\n";
            continue;
        }
        if (!cell.converged) all_clean = false;
        csv += csv_number(cell.c_s) + "," + csv_number(cell.c_b) + "," +
               (cell.converged ? "ok" : "unconverged") + "," +
               (cell.lossy ? "lossy" : "lossless") + "," + csv_number(cell.xi_norm) + "," +
               csv_number(cell.bits) + "," + csv_number(cell.state_var) + "," +
               csv_number(cell.l_norm) + "," + csv_number(cell.state_cost) + "," +
               csv_number(cell.action_cost) + "," + csv_number(cell.total_loss) + "\n";
    }
    write_atomic(out_dir / "sweep.csv", csv);

    // Boundary: smallest lossy C_b per C_s row.
    std::string boundary = "# schema: frugal-boundary-v1\nc_s,c_b_threshold\n";
    for (std::size_t i = 0; i < cs.size(); ++i) {
        double threshold = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t j = 0; j < cb.size(); ++j) {
            frugal_sweep_cell cell{};
            api(frugal_sweep_get_cell(table, static_cast<int>(i * cb.size() + j), &cell),
                "sweep cell");
            if (cell.ok && cell.lossy) {
                threshold = cell.c_b;
                break;
            }
        }
        boundary += csv_number(cs[i]) + "," + csv_number(threshold) + "\n";
    }
    write_atomic(out_dir / "boundary.csv", boundary);
    return all_clean ? 0 : 2;
}

// ---- family ----

// Ellipse traced by a matrix acting on the unit sphere of its domain: the
// image is {U sqrt(lambda) (cos t, sin t)} with U, lambda from the
// eigendecomposition of M M^T (closed form, 2x2 at most here).
void append_ellipse(std::string& csv, int member, const char* which, const double* data,
                    int rows, int cols) {
    double g00 = 0, g01 = 0, g11 = 0;
    for (int k = 0; k < cols; ++k) {
        g00 += data[k] * data[k];
        if (rows > 1) {
            g01 += data[k] * data[cols + k];
            g11 += data[cols + k] * data[cols + k];
        }
    }
    double l0 = g00, l1 = 0.0, u00 = 1.0, u10 = 0.0, u01 = 0.0, u11 = 1.0;
    if (rows > 1) {
        const double tr = g00 + g11;
        const double det = g00 * g11 - g01 * g01;
        const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
        l0 = tr / 2.0 + disc;
        l1 = tr / 2.0 - disc;
        if (std::abs(g01) > 1e-300) {
            const double norm0 = std::hypot(l0 - g11, g01);
            u00 = (l0 - g11) / norm0;
            u10 = g01 / norm0;
        } else if (g11 > g00) {
            u00 = 0.0;
            u10 = 1.0;
        }
        u01 = -u10;
        u11 = u00;
    }
    const double a0 = std::sqrt(std::max(0.0, l0));
    const double a1 = std::sqrt(std::max(0.0, l1));
    for (int s = 0; s < 64; ++s) {
        const double t = 2.0 * M_PI * s / 64.0;
        const double x = u00 * a0 * std::cos(t) + u01 * a1 * std::sin(t);
        const double y = rows > 1 ? u10 * a0 * std::cos(t) + u11 * a1 * std::sin(t) : 0.0;
        csv += std::to_string(member) + std::string(",") + which + "," + std::to_string(s) +
               "," + csv_number(x) + "," + csv_number(y) + "\n";
    }
}

int cmd_family(const json& config, const fs::path& out_dir,
               std::optional<std::uint64_t> seed_override) {
    Problem p = load_problem(config, seed_override);
    const json family_cfg = config.value("family", json::object());
    const int count = family_cfg.value("count", 32);
    const std::uint64_t theta_seed = family_cfg.value("theta_seed", 0ull);

    Solution seed;
    json seed_meta;
    if (family_cfg.contains("seed_file")) {
        const std::string path = family_cfg["seed_file"].get<std::string>();
        json artifact = load_config(path);
        const json& strat = require(artifact, "strategy", path);
        auto phi = parse_matrix(require(strat, "Phi", path), p.m, p.m, path + ":Phi");
        auto psi = parse_matrix(require(strat, "Psi", path), p.m, p.n, path + ":Psi");
        const bool converged =
            require(require(artifact, "convergence", path), "converged", path).get<bool>();
        api(frugal_solution_from_strategy(p.world, p.Cs.data(), p.Ca.data(), p.cb, phi.data(),
                                          psi.data(), converged ? 1 : 0, seed.out()),
            "family seed");
        seed_meta["source"] = path;
    } else {
        api(frugal_solve(p.world, p.Cs.data(), p.Ca.data(), p.cb, &p.options, seed.out()),
            "family seed solve");
        seed_meta["source"] = "solve";
    }
    seed_meta["converged"] = frugal_solution_converged(seed) != 0;

    Family family;
    {
        frugal_status st =
            frugal_family_enumerate(p.world, seed, count, theta_seed, family.out());
        if (st != FRUGAL_OK) {
            std::string msg = std::string("family enumeration: ") + frugal_last_error();
            if (!frugal_solution_converged(seed)) throw NotConvergedExit(msg);
            throw RunError(msg);
        }
    }

    json artifact;
    artifact["schema"] = "frugal-family-v1";
    artifact["world"] = p.world_meta;
    artifact["weights"] = weights_json(p);
    artifact["seed"] = seed_meta;

    std::string ellipses = "# schema: frugal-ellipse-v1\nmember,matrix,sample,x,y\n";
    json members = json::array();
    const int size = frugal_family_size(family);
    for (int i = 0; i < size; ++i) {
        std::vector<double> theta(p.m * p.m), phi(p.m * p.m), psi(p.m * p.n);
        int stable = 0;
        double sigma_rel = 0;
        api(frugal_family_member(family, i, theta.data(), phi.data(), psi.data(), &stable,
                                 &sigma_rel),
            "family member");
        json member = describe_strategy(p, phi, psi);
        member["Theta"] = matrix_json(theta.data(), p.m, p.m);
        member["stable"] = stable != 0;
        member["sigma_rel_err"] = sigma_rel;
        members.push_back(std::move(member));

        append_ellipse(ellipses, i, "Phi", phi.data(), p.m, p.m);
        append_ellipse(ellipses, i, "Psi", psi.data(), p.m, p.n);
    }
    artifact["members"] = std::move(members);

    write_atomic(out_dir / "family.json", artifact.dump(2) + "\n");
    write_atomic(out_dir / "ellipses.csv", ellipses);
    return 0;
}

// ---- simulate ----

struct TrialResult {
    long steps = 0;
    bool diverged = false;
    bool success = true;
    std::vector<double> states, observations, actions;
};

int cmd_simulate(const json& config, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed_override, int jobs) {
    Problem p = load_problem(config, seed_override);
    const json& sim = require(config, "simulate", "config");
    const int trials = sim.value("trials", 16);
    const long steps = sim.value("steps", 2000l);
    const long burn_in = sim.value("burn_in", 200l);
    const std::uint64_t base_seed = sim.value("seed", 1234ull);
    if (trials < 1) throw ConfigError("simulate.trials: must be >= 1");
    if (burn_in < 0 || burn_in >= steps) {
        throw ConfigError("simulate.burn_in: must be in [0, steps)");
    }

    // strategy source
    std::vector<double> phi(p.m * p.m), psi(p.m * p.n);
    json source_meta;
    const json& source = require(sim, "source", "simulate");
    if (source.is_string() && source.get<std::string>() == "solve") {
        Solution sol;
        api(frugal_solve(p.world, p.Cs.data(), p.Ca.data(), p.cb, &p.options, sol.out()),
            "simulate solve");
        api(frugal_solution_strategy(sol, phi.data(), psi.data()), "simulate strategy");
        source_meta = json{{"type", "solve"},
                           {"converged", frugal_solution_converged(sol) != 0}};
    } else if (source.is_object() && source.contains("strategy")) {
        const json& strat = source["strategy"];
        phi = parse_matrix(require(strat, "Phi", "simulate.source.strategy"), p.m, p.m,
                           "simulate.source.strategy.Phi");
        psi = parse_matrix(require(strat, "Psi", "simulate.source.strategy"), p.m, p.n,
                           "simulate.source.strategy.Psi");
        source_meta = json{{"type", "explicit"}};
    } else if (source.is_object() && source.contains("family_member")) {
        const int index = source["family_member"].get<int>();
        const int count = source.value("family_count", 32);
        const std::uint64_t theta_seed = source.value("theta_seed", 0ull);
        Solution sol;
        api(frugal_solve(p.world, p.Cs.data(), p.Ca.data(), p.cb, &p.options, sol.out()),
            "simulate solve");
        Family family;
        api(frugal_family_enumerate(p.world, sol, count, theta_seed, family.out()),
            "simulate family");
        if (index < 0 || index >= frugal_family_size(family)) {
            throw ConfigError("simulate.source.family_member: index out of range");
        }
        api(frugal_family_member(family, index, nullptr, phi.data(), psi.data(), nullptr,
                                 nullptr),
            "simulate member");
        source_meta = json{{"type", "family_member"}, {"index", index}};
    } else {
        throw ConfigError("simulate.source: expected \"solve\", {strategy}, or {family_member}");
    }

    const bool nonlinear = p.has_plant && sim.value("nonlinear", true);
    std::vector<double> initial(p.n, 0.0);
    if (sim.contains("initial_state")) {
        const json& init = sim["initial_state"];
        if (!init.is_array() || static_cast<int>(init.size()) != p.n) {
            throw ConfigError("simulate.initial_state: expected " + std::to_string(p.n) +
                              " entries");
        }
        for (int i = 0; i < p.n; ++i) initial[i] = init[i].get<double>();
    }

    // success window, optional; judged on the true state
    struct SuccessSpec {
        bool enabled = false;
        std::vector<int> indices;
        double bound = 0.0;
        double start_s = 0.0, end_s = std::numeric_limits<double>::infinity();
    } success;
    if (sim.contains("success")) {
        const json& sj = sim["success"];
        success.enabled = true;
        for (const auto& v : require(sj, "indices", "simulate.success")) {
            const int idx = v.get<int>();
            if (idx < 0 || idx >= p.n) throw ConfigError("simulate.success.indices: out of range");
            success.indices.push_back(idx);
        }
        success.bound = require(sj, "bound", "simulate.success").get<double>();
        success.start_s = sj.value("window_start_s", 0.0);
        success.end_s = sj.value("window_end_s", std::numeric_limits<double>::infinity());
    }

    // trials, optionally in parallel; results land in preassigned slots
    std::vector<TrialResult> results(trials);
    auto run_trial = [&](int t) {
        TrialResult& r = results[t];
        RolloutHandle roll;
        frugal_status st;
        if (nonlinear) {
            st = frugal_rollout_nonlinear(p.plant, phi.data(), psi.data(), steps, p.dt,
                                          initial.data(), base_seed + t, roll.out());
        } else {
            st = frugal_rollout_linear(p.world, phi.data(), psi.data(), steps, base_seed + t,
                                       initial.data(), roll.out());
        }
        api(st, "rollout trial " + std::to_string(t));
        r.steps = frugal_rollout_steps(roll);
        r.diverged = frugal_rollout_diverged(roll) != 0;
        r.states.resize(r.steps * p.n);
        r.observations.resize(r.steps * p.n);
        r.actions.resize(r.steps * p.m);
        api(frugal_rollout_data(roll, r.states.data(), r.observations.data(), r.actions.data()),
            "rollout data");
        if (success.enabled) {
            r.success = !r.diverged;
            const double dt = nonlinear ? p.dt : 1.0;
            for (long k = 0; k < r.steps && r.success; ++k) {
                const double t_s = k * dt;
                if (t_s < success.start_s || t_s > success.end_s) continue;
                double acc = 0.0;
                for (int idx : success.indices) {
                    const double v = r.states[k * p.n + idx];
                    acc += v * v;
                }
                if (std::sqrt(acc) >= success.bound) r.success = false;
            }
        } else {
            r.success = !r.diverged;
        }
    };
    {
        const int workers = std::max(1, std::min(jobs, trials));
        if (workers == 1) {
            for (int t = 0; t < trials; ++t) run_trial(t);
        } else {
            std::vector<std::thread> pool;
            const int chunk = (trials + workers - 1) / workers;
            for (int w = 0; w < workers; ++w) {
                const int begin = w * chunk;
                const int end = std::min(trials, begin + chunk);
                if (begin < end) {
                    pool.emplace_back([&, begin, end] {
                        for (int t = begin; t < end; ++t) run_trial(t);
                    });
                }
            }
            for (auto& th : pool) th.join();
        }
    }

    // per-trial rollout CSVs
    const long files = std::min<long>(trials, sim.value("rollout_files", long(trials)));
    for (long t = 0; t < files; ++t) {
        const TrialResult& r = results[t];
        std::string csv = "# schema: frugal-rollout-v1\nt";
        for (int i = 0; i < p.n; ++i) csv += ",s" + std::to_string(i);
        for (int i = 0; i < p.n; ++i) csv += ",o" + std::to_string(i);
        for (int i = 0; i < p.m; ++i) csv += ",a" + std::to_string(i);
        csv += "\n";
        const double dt = nonlinear ? p.dt : 1.0;
        for (long k = 0; k < r.steps; ++k) {
            csv += csv_number(k * dt);
            for (int i = 0; i < p.n; ++i) csv += "," + csv_number(r.states[k * p.n + i]);
            for (int i = 0; i < p.n; ++i) csv += "," + csv_number(r.observations[k * p.n + i]);
            for (int i = 0; i < p.m; ++i) csv += "," + csv_number(r.actions[k * p.m + i]);
            csv += "\n";
        }
        char name[32];
        std::snprintf(name, sizeof name, "rollout_%03ld.csv", t);
        write_atomic(out_dir / name, csv);
    }

    json artifact;
    artifact["schema"] = "frugal-costs-v1";
    artifact["world"] = p.world_meta;
    artifact["weights"] = weights_json(p);
    artifact["source"] = source_meta;
    artifact["strategy"] = json{{"Phi", matrix_json(phi.data(), p.m, p.m)},
                                {"Psi", matrix_json(psi.data(), p.m, p.n)}};
    artifact["nonlinear"] = nonlinear;

    json trial_list = json::array();
    int successes = 0, diverged = 0;
    for (int t = 0; t < trials; ++t) {
        trial_list.push_back(json{{"seed", base_seed + t},
                                  {"steps", results[t].steps},
                                  {"diverged", results[t].diverged},
                                  {"success", results[t].success}});
        if (results[t].success) ++successes;
        if (results[t].diverged) ++diverged;
    }
    artifact["trials"] = std::move(trial_list);
    artifact["success_rate"] = trials > 0 ? double(successes) / trials : 0.0;
    artifact["diverged_trials"] = diverged;

    // Empirical cost sample on the linear model, with the analytic report
    // and the gap in units of standard errors. Cost estimation needs a
    // longer equilibrated window than a transient study, so its horizon is
    // configurable separately.
    if (trials >= 2) {
        const long cost_steps = sim.value("cost_steps", steps);
        const long cost_burn_in = sim.value("cost_burn_in", burn_in);
        if (cost_burn_in < 0 || cost_burn_in >= cost_steps) {
            throw ConfigError("simulate.cost_burn_in: must be in [0, cost_steps)");
        }
        frugal_cost_sample sample{};
        api(frugal_empirical_costs(p.world, p.Cs.data(), p.Ca.data(), p.cb, phi.data(),
                                   psi.data(), trials, cost_steps, cost_burn_in, base_seed,
                                   &sample),
            "empirical costs");
        artifact["empirical_costs"] = json{
            {"state", json{{"mean", sample.state_mean}, {"se", sample.state_se}}},
            {"action", json{{"mean", sample.action_mean}, {"se", sample.action_se}}},
            {"information_bits", json{{"mean", sample.bits_mean}, {"se", sample.bits_se}}},
            {"total", json{{"mean", sample.total_mean}, {"se", sample.total_se}}},
            {"trials", sample.trials}};
        frugal_report rep{};
        frugal_status st = frugal_evaluate(p.world, p.Cs.data(), p.Ca.data(), p.cb, phi.data(),
                                           psi.data(), &rep, nullptr);
        if (st == FRUGAL_OK) {
            artifact["analytic_report"] = report_json(rep);
            auto gap = [](double mean, double se, double truth) {
                return se > 0 ? std::abs(mean - truth) / se : 0.0;
            };
            artifact["delta_se"] =
                json{{"state", gap(sample.state_mean, sample.state_se, rep.state_cost)},
                     {"action", gap(sample.action_mean, sample.action_se, rep.action_cost)},
                     {"information_bits",
                      gap(sample.bits_mean, sample.bits_se, rep.information_bits)},
                     {"total", gap(sample.total_mean, sample.total_se, rep.total_loss)}};
        }
    }

    if (sim.contains("sensitivity")) {
        if (!p.has_plant) {
            throw ConfigError(
                "simulate.sensitivity: needs a physical plant; a matrix world has no "
                "physical parameters to perturb");
        }
        const json& sj = sim["sensitivity"];
        std::vector<std::string> names;
        for (const auto& v : require(sj, "parameters", "simulate.sensitivity")) {
            names.push_back(v.get<std::string>());
        }
        const double rel_step = sj.value("rel_step", 1e-3);
        std::vector<const char*> cnames;
        for (const auto& s : names) cnames.push_back(s.c_str());
        std::vector<double> scores(names.size(), 0.0);
        api(frugal_sensitivity(p.plant, p.dt, p.Cs.data(), p.Ca.data(), p.cb, phi.data(),
                               psi.data(), cnames.data(), static_cast<int>(names.size()),
                               rel_step, scores.data()),
            "sensitivity");
        json table = json::object();
        double norm = 0.0;
        for (std::size_t i = 0; i < names.size(); ++i) {
            table[names[i]] = std::isfinite(scores[i]) ? json(scores[i]) : json("unstable");
            if (std::isfinite(scores[i])) norm += scores[i] * scores[i];
        }
        artifact["sensitivity"] =
            json{{"rel_step", rel_step}, {"scores", table}, {"norm", std::sqrt(norm)}};
    }

    write_atomic(out_dir / "costs.json", artifact.dump(2) + "\n");
    return diverged > 0 ? 2 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"frugal control: joint inference/control optimization with priced information"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed_override;
    int jobs = 1;
    std::uint64_t seed_value = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON problem configuration")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed_value, "override the optimizer seed")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    };

    CLI::App* solve = app.add_subcommand("solve", "optimize one strategy and describe it");
    add_common(solve);
    CLI::App* sweep = app.add_subcommand("sweep", "phase diagram over (C_s, C_b)");
    add_common(sweep);
    CLI::App* family = app.add_subcommand("family", "enumerate the solution family of a seed");
    add_common(family);
    CLI::App* simulate = app.add_subcommand("simulate", "roll out a strategy and measure costs");
    add_common(simulate);

    CLI11_PARSE(app, argc, argv);

    try {
        json config = load_config(config_path);
        if (seed_given) seed_override = seed_value;
        const fs::path out(out_dir);
        if (solve->parsed()) return cmd_solve(config, out, seed_override);
        if (sweep->parsed()) return cmd_sweep(config, out, seed_override, jobs);
        if (family->parsed()) return cmd_family(config, out, seed_override);
        if (simulate->parsed()) return cmd_simulate(config, out, seed_override, jobs);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const NotConvergedExit& e) {
        std::fprintf(stderr, "not converged: %s\n", e.what());
        return 2;
    } catch (const RunError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
    return 0;
}
