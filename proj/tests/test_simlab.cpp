#include <doctest.h>

#include "core/optimizer.hpp"
#include "core/simlab.hpp"
#include "support.hpp"

using namespace frugal;

namespace {

// Independent analytic Jacobians at the target state, derived by hand from
// the equations of motion.
void cartpole_jacobians(const NonlinearPlant& p, Matrix& j_s, Matrix& j_a) {
    const double mc = p.param("cart_mass"), mp = p.param("pole_mass");
    const double l = p.param("pole_half_length"), g = p.param("gravity");
    const double total = mc + mp;
    const double denom = l * (4.0 / 3.0 - mp / total);

    j_s = Matrix::Zero(4, 4);
    j_s(0, 1) = 1.0;
    j_s(2, 3) = 1.0;
    j_s(3, 2) = g / denom;
    j_s(1, 2) = -(mp * l / total) * (g / denom);

    j_a = Matrix::Zero(4, 1);
    j_a(3, 0) = -(1.0 / total) / denom;
    j_a(1, 0) = 1.0 / total + (mp * l / (total * total)) / denom;
}

void drone_jacobians(const NonlinearPlant& p, Matrix& j_s, Matrix& j_a) {
    const double mass = p.param("mass"), arm = p.param("arm_length");
    const double inertia = p.param("inertia"), g = p.param("gravity");
    j_s = Matrix::Zero(6, 6);
    j_s(0, 3) = j_s(1, 4) = j_s(2, 5) = 1.0;
    j_s(3, 2) = -g;
    j_a = Matrix::Zero(6, 2);
    j_a(4, 0) = j_a(4, 1) = 1.0 / mass;
    j_a(5, 0) = arm / inertia;
    j_a(5, 1) = -arm / inertia;
}

double cartpole_energy(const NonlinearPlant& p, const Vector& s) {
    const double mc = p.param("cart_mass"), mp = p.param("pole_mass");
    const double l = p.param("pole_half_length"), g = p.param("gravity");
    const double xd = s(1), gamma = s(2), gd = s(3);
    const double kinetic = 0.5 * (mc + mp) * xd * xd + mp * l * xd * gd * std::cos(gamma) +
                           (2.0 / 3.0) * mp * l * l * gd * gd;
    const double potential = mp * g * l * std::cos(gamma);
    return kinetic + potential;
}

} // namespace

TEST_SUITE_BEGIN("simlab");

TEST_CASE("linearization matches the hand-derived Jacobians") {
    const double dt = 0.02;
    {
        NonlinearPlant plant = make_cartpole();
        WorldModel w = linearize(plant, dt);
        Matrix j_s, j_a;
        cartpole_jacobians(plant, j_s, j_a);
        CHECK((w.D - (Matrix::Identity(4, 4) + dt * j_s)).cwiseAbs().maxCoeff() < 1e-5);
        CHECK((w.E - dt * j_a).cwiseAbs().maxCoeff() < 1e-5);
        // gravity makes the upright pole unstable
        CHECK(linalg::spectral_radius(w.D) > 1.0);
    }
    {
        NonlinearPlant plant = make_planar_drone();
        WorldModel w = linearize(plant, dt);
        Matrix j_s, j_a;
        drone_jacobians(plant, j_s, j_a);
        CHECK((w.D - (Matrix::Identity(6, 6) + dt * j_s)).cwiseAbs().maxCoeff() < 1e-5);
        CHECK((w.E - dt * j_a).cwiseAbs().maxCoeff() < 1e-5);
        // horizontal motion couples to tilt through -g dt
        CHECK(w.D(3, 2) == doctest::Approx(-plant.param("gravity") * dt).epsilon(1e-6));
    }
}

TEST_CASE("linearize rejects a non-equilibrium target") {
    NonlinearPlant plant = make_cartpole();
    plant.target(2) = 0.3; // tilted pole is not an equilibrium
    CHECK_THROWS_AS(linearize(plant, 0.02), NotEquilibrium);
}

TEST_CASE("observation noise puts ten times the variance on velocities") {
    WorldModel w = linearize(make_cartpole(), 0.02);
    CHECK(w.R(1, 1) == doctest::Approx(10.0 * w.R(0, 0)));
    CHECK(w.R(3, 3) == doctest::Approx(10.0 * w.R(2, 2)));
    WorldModel wd = linearize(make_planar_drone(), 0.02);
    for (int i : {3, 4, 5}) CHECK(wd.R(i, i) == doctest::Approx(10.0 * wd.R(0, 0)));
}

TEST_CASE("pendulum energy is conserved by the integrator") {
    NonlinearPlant plant = make_cartpole();
    Vector s(4);
    s << 0.0, 0.2, 0.5, -0.3;
    const double e0 = cartpole_energy(plant, s);
    const Vector zero_force = Vector::Zero(1);
    double max_drift = 0.0;
    for (int t = 0; t < 1000; ++t) { // 10 s at dt = 0.01
        s = rk4_step(plant, s, zero_force, 0.01);
        max_drift = std::max(max_drift, std::abs(cartpole_energy(plant, s) - e0));
    }
    CHECK(max_drift < 1e-6 * std::abs(e0));
}

TEST_CASE("noise-free linear rollout from the origin stays at zero") {
    WorldModel w;
    w.D = Matrix::Constant(1, 1, 0.5);
    w.E = Matrix::Constant(1, 1, 1.0);
    w.Q = Matrix::Zero(1, 1);
    w.R = Matrix::Zero(1, 1);
    Rollout roll = rollout_linear(w, test::scalar_strategy(0.3, 0.4), 100, 5);
    CHECK(roll.states.cwiseAbs().maxCoeff() == 0.0);
    CHECK(roll.observations.cwiseAbs().maxCoeff() == 0.0);
    CHECK(roll.actions.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical seeds give bit-identical rollouts") {
    WorldModel w = test::scalar_world(0.9, 1.0, 0.5, 1.0);
    Strategy s = test::scalar_strategy(0.2, -0.4);
    Rollout a = rollout_linear(w, s, 500, 77);
    Rollout b = rollout_linear(w, s, 500, 77);
    CHECK((a.states - b.states).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.observations - b.observations).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.actions - b.actions).cwiseAbs().maxCoeff() == 0.0);

    NonlinearPlant plant = make_cartpole();
    Vector init = Vector::Zero(4);
    init(2) = 0.1;
    Strategy lqr{Matrix::Zero(1, 1), Matrix::Zero(1, 4)};
    lqr.Psi << 1.0, 2.0, 40.0, 8.0; // any fixed stabilizing-ish gain
    Rollout c = rollout_nonlinear(plant, lqr, 200, 0.02, init, 99);
    Rollout d = rollout_nonlinear(plant, lqr, 200, 0.02, init, 99);
    CHECK((c.states - d.states).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("empirical covariance of the closed loop matches the analytic one") {
    WorldModel world = test::scalar_world(1.1, 1.0, 0.25, 2.0);
    CostWeights weights = test::scalar_weights(1.0, 0.1, 1.0);
    Strategy s = test::scalar_strategy(0.1, -0.4);
    EquilibriumReport rep = steady_state(world, weights, s);

    Rollout roll = rollout_linear(world, s, 1000000, 3);
    Matrix z(roll.states.rows() - 1000, 2);
    z.col(0) = roll.states.col(0).tail(z.rows());
    z.col(1) = roll.actions.col(0).tail(z.rows());
    auto est = test::batch_covariance(z, 100);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(est.mean(i, j) - rep.Sigma(i, j)) < 3.0 * est.se(i, j));
}

TEST_CASE("empirical costs agree with the analytic report at 3 SE") {
    WorldModel world = test::scalar_world(1.1, 1.0, 0.25, 2.0);
    CostWeights weights = test::scalar_weights(1.0, 0.1, 2.0);
    Strategy s = test::scalar_strategy(0.1, -0.4);
    EquilibriumReport rep = steady_state(world, weights, s);
    CostSample sample = empirical_costs(world, weights, s, 16, 20000, 1000, 9);
    CHECK(std::abs(sample.state_mean - rep.state_cost) < 3.0 * sample.state_se);
    CHECK(std::abs(sample.action_mean - rep.action_cost) < 3.0 * sample.action_se);
    CHECK(std::abs(sample.bits_mean - rep.information_bits) < 3.0 * sample.bits_se);
    CHECK(std::abs(sample.total_mean - rep.total_loss) < 3.0 * sample.total_se);
}

TEST_CASE("zero strategy on a stable world costs no action, ever") {
    WorldModel world = test::scalar_world(0.7, 1.0, 1.0, 1.0);
    CostWeights weights = test::scalar_weights(1.0, 1.0, 0.0);
    CostSample sample =
        empirical_costs(world, weights, test::scalar_strategy(0.0, 0.0), 4, 2000, 100, 1);
    CHECK(sample.action_mean == 0.0);
    CHECK(sample.action_se == 0.0);
}

TEST_CASE("nonlinear rollout: noise-free start at the target stays put") {
    NonlinearPlant plant = make_planar_drone();
    plant.set_param("process_noise", 0.0);
    plant.set_param("obs_noise_position", 0.0);
    plant.set_param("obs_noise_velocity", 0.0);
    Strategy null{Matrix::Zero(2, 2), Matrix::Zero(2, 6)};
    Rollout roll = rollout_nonlinear(plant, null, 200, 0.02, plant.target, 1);
    CHECK(roll.states.cwiseAbs().maxCoeff() < 1e-12);
    CHECK_FALSE(roll.diverged);
}

TEST_CASE("a destabilizing strategy is flagged as diverged") {
    NonlinearPlant plant = make_cartpole();
    Strategy bad{Matrix::Zero(1, 1), Matrix::Zero(1, 4)};
    bad.Psi << 0.0, 0.0, -50.0, 0.0; // push the pole over
    Vector init = Vector::Zero(4);
    init(2) = 0.1;
    Rollout roll = rollout_nonlinear(plant, bad, 2000, 0.02, init, 4);
    CHECK(roll.diverged);
    CHECK(roll.diverged_at >= 0);
    CHECK(roll.states.rows() == roll.actions.rows());
    CHECK(roll.states.rows() == roll.observations.rows());
    CHECK(roll.states.rows() < 2000);
}

TEST_CASE("sensitivity: finite-difference steps agree and misuse is rejected") {
    NonlinearPlant plant = make_planar_drone();
    WorldModel w = linearize(plant, 0.02);
    CostWeights weights;
    weights.C_s = Matrix::Identity(6, 6);
    weights.C_a = 0.01 * Matrix::Identity(2, 2);
    weights.C_b = 0.0;
    OptimizerConfig cfg;
    cfg.restarts = 2;
    cfg.max_iters = 20000;
    cfg.grad_tol = 1e-6;
    SolveResult sol = solve(w, weights, cfg);

    auto coarse = sensitivity(plant, 0.02, weights, sol.strategy, {"mass", "arm_length"}, 1e-3);
    auto fine = sensitivity(plant, 0.02, weights, sol.strategy, {"mass", "arm_length"}, 1e-4);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        CHECK(std::abs(coarse[i] - fine[i]) < 0.05 * std::abs(fine[i]));
    }

    CHECK_THROWS_AS(sensitivity(plant, 0.02, weights, sol.strategy, {"mass"}, 0.0),
                    InvalidArgument);
    CHECK_THROWS_AS(sensitivity(plant, 0.02, weights, sol.strategy, {"bogus"}, 1e-3),
                    InvalidArgument);
}

TEST_SUITE_END();
