#include "core/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "core/family.hpp"

namespace frugal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMomentum = 0.9;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct Flat {
    // Strategy parameters as one vector: Phi row-major, then Psi row-major.
    static Vector pack(const Strategy& s) {
        Vector v(s.Phi.size() + s.Psi.size());
        v.head(s.Phi.size()) = s.Phi.reshaped<Eigen::RowMajor>().transpose();
        v.tail(s.Psi.size()) = s.Psi.reshaped<Eigen::RowMajor>().transpose();
        return v;
    }
    static Strategy unpack(const Vector& v, Eigen::Index n, Eigen::Index m) {
        Strategy s;
        s.Phi = v.head(m * m).reshaped<Eigen::RowMajor>(m, m);
        s.Psi = v.segment(m * m, m * n).reshaped<Eigen::RowMajor>(m, n);
        return s;
    }
};

class Objective {
public:
    Objective(const WorldModel& world, const CostWeights& weights, double margin)
        : world_(world), weights_(weights), margin_(margin) {}

    bool feasible(const Strategy& s) const {
        AugmentedSystem sys = build_augmented(world_, s);
        return linalg::spectral_radius(sys.M) <= 1.0 - margin_;
    }

    // Loss, or +inf when the strategy violates the stability margin or the
    // covariance degenerates.
    double loss(const Strategy& s) const {
        if (!s.Phi.allFinite() || !s.Psi.allFinite()) return kInf;
        if (!feasible(s)) return kInf;
        try {
            return steady_state(world_, weights_, s).total_loss;
        } catch (const Error&) {
            return kInf;
        }
    }

    Vector gradient(const Strategy& s) const {
        LossGradient g = loss_gradient(world_, weights_, s);
        Strategy as_strategy{g.dPhi, g.dPsi};
        return Flat::pack(as_strategy);
    }

    const WorldModel& world() const { return world_; }

private:
    const WorldModel& world_;
    const CostWeights& weights_;
    double margin_;
};

struct DescentOutcome {
    Vector theta;
    double loss = kInf;
    double grad_norm = kInf;
    bool grad_converged = false;
    bool at_deaf_point = false;
};

// Central finite differences of the analytic gradient, symmetrized. Returns
// false when the probes cannot stay inside the stable set.
bool fd_hessian(const Objective& obj, const Vector& theta, Eigen::Index n, Eigen::Index m,
                Matrix& hess) {
    const Eigen::Index p = theta.size();
    hess.resize(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        double h = 1e-5 * (1.0 + std::abs(theta(i)));
        Vector gp, gm;
        bool ok = false;
        for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
            try {
                Vector tp = theta, tm = theta;
                tp(i) += h;
                tm(i) -= h;
                gp = obj.gradient(Flat::unpack(tp, n, m));
                gm = obj.gradient(Flat::unpack(tm, n, m));
                ok = true;
            } catch (const Error&) {
                h /= 4.0; // probe stepped outside the stable set
            }
        }
        if (!ok) return false;
        hess.row(i) = ((gp - gm) / (2.0 * h)).transpose();
    }
    hess = ((hess + hess.transpose()) / 2.0).eval();
    return true;
}

// Curvature-aware polish once first-order progress stalls: saddle-free
// Newton steps using |eigenvalue| damping, with a Levenberg ladder as the
// fallback. Flat family directions (zero curvature, zero gradient) are
// projected out by the pseudo-inverse cutoff.
void newton_polish(const Objective& obj, const OptimizerConfig& cfg, Eigen::Index n,
                   Eigen::Index m, Vector& theta, double& loss, double& gnorm,
                   bool& grad_converged) {
    for (int it = 0; it < 60; ++it) {
        Vector grad;
        try {
            grad = obj.gradient(Flat::unpack(theta, n, m));
        } catch (const Error&) {
            return;
        }
        gnorm = grad.norm();
        if (gnorm < cfg.grad_tol) {
            grad_converged = true;
            return;
        }
        Matrix hess;
        if (!fd_hessian(obj, theta, n, m, hess)) return;

        Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
        const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
        if (!(scale > 0.0) || !std::isfinite(scale)) return;
        Vector inv = Vector::Zero(theta.size());
        for (Eigen::Index i = 0; i < inv.size(); ++i) {
            const double lam = std::abs(es.eigenvalues()(i));
            if (lam > 1e-10 * scale) inv(i) = 1.0 / lam;
        }
        Vector newton = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * grad;

        bool accepted = false;
        Vector candidate_step = newton;
        for (int damp = 0; damp < 12 && !accepted; ++damp) {
            Vector trial = theta - candidate_step;
            const double trial_loss = obj.loss(Flat::unpack(trial, n, m));
            if (trial_loss <= loss + 1e-14 * (1.0 + std::abs(loss))) {
                theta = trial;
                loss = trial_loss;
                accepted = true;
            } else {
                candidate_step /= 4.0;
            }
        }
        if (!accepted) return;
    }
}

// Heavy-ball descent with a monotone safeguard: a momentum step is taken
// when it keeps the iterate feasible and does not increase the loss;
// otherwise the velocity is reset and an Armijo-backtracked gradient step
// is used. The step size adapts upward on smooth progress, and a Newton
// polish finishes the run when first-order steps stop paying.
DescentOutcome descend(const Objective& obj, Vector theta, const OptimizerConfig& cfg,
                       Eigen::Index n, Eigen::Index m) {
    DescentOutcome out;
    double lr = cfg.learning_rate;
    const double lr_min = cfg.learning_rate * 1e-8;
    const double lr_max = cfg.learning_rate * 1e6;
    Vector velocity = Vector::Zero(theta.size());

    double loss = obj.loss(Flat::unpack(theta, n, m));
    double window_loss = loss;
    bool done = false;
    for (long it = 0; it < cfg.max_iters && !done; ++it) {
        Vector grad;
        try {
            grad = obj.gradient(Flat::unpack(theta, n, m));
        } catch (const Error&) {
            break;
        }
        const double gnorm = grad.norm();
        out.grad_norm = gnorm;
        if (gnorm < cfg.grad_tol) {
            out.grad_converged = true;
            done = true;
            break;
        }

        // Hand over to the polish when a whole window of iterations moved
        // the loss by nearly nothing.
        if (it % 128 == 127) {
            if (window_loss - loss <= 1e-13 * (1.0 + std::abs(loss))) break;
            window_loss = loss;
        }

        velocity = kMomentum * velocity - lr * grad;
        Vector trial = theta + velocity;
        double trial_loss = obj.loss(Flat::unpack(trial, n, m));
        if (trial_loss <= loss + 1e-12 * (1.0 + std::abs(loss))) {
            theta = trial;
            loss = trial_loss;
            lr = std::min(lr * 1.05, lr_max);
            continue;
        }

        velocity.setZero();
        double step = lr;
        bool accepted = false;
        for (int k = 0; k < 64 && step >= lr_min; ++k) {
            trial = theta - step * grad;
            trial_loss = obj.loss(Flat::unpack(trial, n, m));
            if (trial_loss <= loss - 1e-4 * step * gnorm * gnorm) {
                theta = trial;
                loss = trial_loss;
                lr = step;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted) break; // no first-order descent left at this scale
    }

    if (!out.grad_converged) {
        newton_polish(obj, cfg, n, m, theta, loss, out.grad_norm, out.grad_converged);
    }

    // The silent strategy is an isolated point of the loss: mutual
    // information is invariant to the action scale, so it does not vanish
    // along Psi -> 0 yet equals zero exactly at Psi = 0. Descent can only
    // approach it, so probe it directly.
    Vector deaf = Vector::Zero(theta.size());
    const double deaf_loss = obj.loss(Flat::unpack(deaf, n, m));
    if (deaf_loss + 1e-12 * (1.0 + std::abs(deaf_loss)) < loss) {
        theta = deaf;
        loss = deaf_loss;
        out.grad_norm = 0.0;
        out.grad_converged = true;
        out.at_deaf_point = true;
    }

    out.theta = theta;
    out.loss = loss;
    return out;
}

double hessian_min_eigenvalue(const Objective& obj, const Vector& theta,
                              Eigen::Index n, Eigen::Index m) {
    Matrix hess;
    if (!fd_hessian(obj, theta, n, m, hess)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
    return es.eigenvalues().minCoeff();
}

} // namespace

void OptimizerConfig::check() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    if (max_iters <= 0) throw InvalidArgument("max_iters must be positive");
    if (!(grad_tol > 0.0)) throw InvalidArgument("grad_tol must be positive");
    if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
    if (!(stability_margin > 0.0 && stability_margin < 1.0)) {
        throw InvalidArgument("stability_margin must lie in (0, 1)");
    }
}

SolveResult solve(const WorldModel& world, const CostWeights& weights,
                  const OptimizerConfig& cfg) {
    world.check_shapes();
    weights.check(world);
    cfg.check();

    const Eigen::Index n = world.state_dim();
    const Eigen::Index m = world.action_dim();
    Objective obj(world, weights, cfg.stability_margin);

    std::vector<double> restart_losses(cfg.restarts, kInf);
    std::vector<DescentOutcome> outcomes(cfg.restarts);
    bool any_start = false;

    // Small random gains start stable loops on benign plants, but an
    // unstable plant needs active feedback from the first iterate. Since
    // observations carry the full state, the static LQR gain used as pure
    // output feedback (Phi = 0, Psi = L) is a stabilizing member of the
    // class whenever (D, E) is stabilizable; it anchors half of the draws.
    Matrix lqr_gain;
    bool have_lqr = false;
    try {
        Matrix x = linalg::solve_dare(world.D, world.E, weights.C_s, weights.C_a);
        lqr_gain = -(world.E.transpose() * x * world.E + weights.C_a)
                        .ldlt()
                        .solve(world.E.transpose() * x * world.D);
        Strategy probe{Matrix::Zero(m, m), lqr_gain};
        have_lqr = std::isfinite(obj.loss(probe));
    } catch (const Error&) {
        have_lqr = false;
    }

    for (int r = 0; r < cfg.restarts; ++r) {
        std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(r))));
        std::uniform_real_distribution<double> unif(-0.5, 0.5);
        std::normal_distribution<double> gauss(0.0, 0.1 / std::sqrt(static_cast<double>(n)));

        Strategy init;
        bool found = false;
        for (int draw = 0; draw < 100 && !found; ++draw) {
            const double c = unif(rng);
            init.Phi = c * Matrix::Identity(m, m);
            init.Psi =
                Matrix::NullaryExpr(m, n, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
            if (have_lqr && draw % 2 == 1) init.Psi += lqr_gain;
            found = std::isfinite(obj.loss(init));
        }
        if (!found) continue;
        any_start = true;

        outcomes[r] = descend(obj, Flat::pack(init), cfg, n, m);
        restart_losses[r] = outcomes[r].loss;
    }

    if (!any_start) {
        throw NoStableInitialization("no restart found a stable starting strategy");
    }

    int best = -1;
    for (int r = 0; r < cfg.restarts; ++r) {
        if (best < 0 || restart_losses[r] < restart_losses[best] - 1e-9) best = r;
    }

    SolveResult result;
    result.strategy = Flat::unpack(outcomes[best].theta, n, m);
    result.report = steady_state(world, weights, result.strategy);
    result.grad_norm = outcomes[best].grad_norm;
    result.restart_losses = restart_losses;
    result.best_restart = best;
    if (outcomes[best].at_deaf_point) {
        // Curvature probes around the silent strategy would step across the
        // information discontinuity; the point is accepted on loss alone.
        result.hessian_min_eig = 0.0;
        result.converged = true;
    } else {
        result.hessian_min_eig = hessian_min_eigenvalue(obj, outcomes[best].theta, n, m);
        result.converged = outcomes[best].grad_converged &&
                           std::isfinite(result.hessian_min_eig) &&
                           result.hessian_min_eig >= -1e-6;
    }
    return result;
}

KalmanSteadyState kalman_steady_state(const Matrix& D, const Matrix& Q, const Matrix& R) {
    const Eigen::Index n = D.rows();
    KalmanSteadyState k;
    // The filter Riccati equation is the control one on the dual pair
    // (D^T, I) with weights (Q, R).
    k.prior_cov = linalg::solve_dare(D.transpose(), Matrix::Identity(n, n), Q, R);
    k.gain = ((k.prior_cov + R).transpose().ldlt().solve(k.prior_cov.transpose())).transpose();
    k.posterior_cov = (Matrix::Identity(n, n) - k.gain) * k.prior_cov;
    return k;
}

LqgBaseline classical_lqg_baseline(const WorldModel& world, const CostWeights& weights) {
    world.check_shapes();
    weights.check(world);
    const Eigen::Index n = world.state_dim();

    Matrix x = linalg::solve_dare(world.D, world.E, weights.C_s, weights.C_a);
    Matrix btxb = world.E.transpose() * x * world.E + weights.C_a;

    LqgBaseline base;
    base.L = -btxb.ldlt().solve(world.E.transpose() * x * world.D);

    KalmanSteadyState kal = kalman_steady_state(world.D, world.Q, world.R);
    base.beta = kal.gain;
    base.prior_cov = kal.prior_cov;
    base.posterior_cov = kal.posterior_cov;
    base.Gamma = (Matrix::Identity(n, n) - base.beta) * (world.D + world.E * base.L);

    FilterForm f;
    f.Gamma = base.Gamma;
    f.beta = base.beta;
    f.L = base.L;
    f.K = linalg::pinv(base.L);
    base.strategy = strategy_from_filter(f);
    base.report = steady_state(world, weights, base.strategy);
    return base;
}

Matrix landscape(const WorldModel& world, const CostWeights& weights,
                 const std::vector<double>& phi_values,
                 const std::vector<double>& psi_values) {
    if (world.state_dim() != 1 || world.action_dim() != 1) {
        throw DimensionMismatch("landscape is defined for scalar tasks only");
    }
    Matrix losses(phi_values.size(), psi_values.size());
    for (std::size_t i = 0; i < phi_values.size(); ++i) {
        for (std::size_t j = 0; j < psi_values.size(); ++j) {
            Strategy s;
            s.Phi = Matrix::Constant(1, 1, phi_values[i]);
            s.Psi = Matrix::Constant(1, 1, psi_values[j]);
            double value = kInf;
            try {
                value = steady_state(world, weights, s).total_loss;
            } catch (const Error&) {
                value = kInf;
            }
            losses(i, j) = value;
        }
    }
    return losses;
}

std::vector<std::pair<int, int>> grid_local_minima(const Matrix& losses) {
    std::vector<std::pair<int, int>> minima;
    for (int i = 0; i < losses.rows(); ++i) {
        for (int j = 0; j < losses.cols(); ++j) {
            const double v = losses(i, j);
            if (!std::isfinite(v)) continue;
            bool strict_min = true;
            for (int di = -1; di <= 1 && strict_min; ++di) {
                for (int dj = -1; dj <= 1 && strict_min; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= losses.rows() || jj >= losses.cols()) continue;
                    if (!(v < losses(ii, jj))) strict_min = false;
                }
            }
            if (strict_min) minima.emplace_back(i, j);
        }
    }
    return minima;
}

namespace {

SweepCell sweep_one(const WorldModel& world, const CostWeights& base,
                    const OptimizerConfig& cfg, double cs, double cb) {
    SweepCell cell;
    cell.c_s = cs;
    cell.c_b = cb;
    try {
        CostWeights weights = base;
        weights.C_s = Matrix::Constant(1, 1, cs);
        weights.C_b = cb;

        SolveResult sol = solve(world, weights, cfg);
        cell.converged = sol.converged;
        QuadraticFormData q = quadratic_form_data(world, sol.report.Sigma);
        cell.regime = classify_regime(q);
        cell.xi_norm = q.xi.norm();
        FilterForm f = filter_from_strategy(sol.strategy, sol.report.Sigma);
        cell.l_norm = f.L.norm();
        cell.state_var = sol.report.Sigma_s(0, 0);
        cell.bits = sol.report.information_bits;
        cell.state_cost = sol.report.state_cost;
        cell.action_cost = sol.report.action_cost;
        cell.total_loss = sol.report.total_loss;
        cell.ok = true;
    } catch (const Error& e) {
        cell.ok = false;
        cell.error = e.what();
    }
    return cell;
}

} // namespace

std::vector<SweepCell> phase_sweep(const WorldModel& world, const CostWeights& base,
                                   const std::vector<double>& cs_values,
                                   const std::vector<double>& cb_values,
                                   const OptimizerConfig& cfg, int jobs) {
    if (world.state_dim() != 1 || world.action_dim() != 1) {
        throw DimensionMismatch("phase_sweep is defined for scalar tasks only");
    }
    const std::size_t total = cs_values.size() * cb_values.size();
    std::vector<SweepCell> cells(total);

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const double cs = cs_values[k / cb_values.size()];
            const double cb = cb_values[k % cb_values.size()];
            cells[k] = sweep_one(world, base, cfg, cs, cb);
        }
    };

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
    if (workers == 1) {
        run_range(0, total);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (total + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(total, begin + chunk);
            if (begin < end) pool.emplace_back(run_range, begin, end);
        }
        for (auto& t : pool) t.join();
    }
    return cells;
}

} // namespace frugal
