#include <doctest.h>

#include "core/equilibrium.hpp"
#include "core/optimizer.hpp"
#include "support.hpp"

using namespace frugal;

TEST_SUITE_BEGIN("model");

TEST_CASE("strategy_from_filter: memoryless filter") {
    FilterForm f;
    f.Gamma = Matrix::Zero(3, 3);
    f.beta = Matrix::Identity(3, 3);
    f.L = test::random_matrix(2, 3, 5);
    f.K = linalg::pinv(f.L);
    Strategy s = strategy_from_filter(f);
    CHECK(s.Phi.norm() == doctest::Approx(0.0));
    CHECK((s.Psi - f.L).norm() == doctest::Approx(0.0));
}

TEST_CASE("strategy_from_filter: scalars commute") {
    FilterForm f;
    f.Gamma = Matrix::Constant(1, 1, 0.4);
    f.beta = Matrix::Constant(1, 1, 0.3);
    f.L = Matrix::Constant(1, 1, -2.0);
    Strategy s = strategy_from_filter(f);
    CHECK(s.Phi(0, 0) == doctest::Approx(0.4));
    CHECK(s.Psi(0, 0) == doctest::Approx(-0.6));
}

TEST_CASE("filter round trip preserves the Phi-consistent memory factor") {
    // Full-row-rank readouts: filter -> strategy -> Phi = L Gamma L^+ holds
    // with the projected memory factor.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        FilterForm f;
        f.Gamma = 0.5 * test::random_stable_matrix(3, 0.8, seed);
        f.beta = 0.3 * test::random_matrix(3, 3, 10 + seed);
        f.L = test::random_matrix(3, 3, 20 + seed); // square, generically invertible
        Strategy s = strategy_from_filter(f);
        Matrix recovered = linalg::pinv(f.L) * s.Phi * f.L;
        CHECK((recovered - f.Gamma).norm() < 1e-8 * (1.0 + f.Gamma.norm()));
    }
}

TEST_CASE("filter_from_strategy: perfect scalar readout") {
    // Sigma with Sigma_sa = Sigma_a makes the readout K = 1.
    Matrix sigma(2, 2);
    sigma << 2.0, 0.5, 0.5, 0.5;
    Strategy s = test::scalar_strategy(0.3, -0.7);
    FilterForm f = filter_from_strategy(s, sigma);
    CHECK(f.K(0, 0) == doctest::Approx(1.0));
    CHECK(f.Gamma(0, 0) == doctest::Approx(0.3));
    CHECK(f.beta(0, 0) == doctest::Approx(-0.7));
    CHECK(f.L(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("filter_from_strategy: singular action covariance is rejected") {
    Matrix sigma = Matrix::Zero(2, 2);
    sigma(0, 0) = 1.0;
    CHECK_THROWS_AS(filter_from_strategy(test::scalar_strategy(0.1, 0.1), sigma),
                    SingularActionCovariance);
}

TEST_CASE("round trip on solved instances with invertible readout") {
    // m = n worlds give square K; strategy -> filter -> strategy is identity.
    WorldModel world = WorldModel::isotropic(test::random_stable_matrix(2, 0.9, 3),
                                             Matrix::Identity(2, 2), 1.0, 1.0);
    CostWeights weights;
    weights.C_s = Matrix::Identity(2, 2);
    weights.C_a = 0.5 * Matrix::Identity(2, 2);
    weights.C_b = 0.0;

    OptimizerConfig cfg;
    cfg.restarts = 3;
    cfg.max_iters = 4000;
    cfg.grad_tol = 1e-6;
    SolveResult sol = solve(world, weights, cfg);

    FilterForm f = filter_from_strategy(sol.strategy, sol.report.Sigma);
    Strategy back = strategy_from_filter(f);
    CHECK((back.Phi - sol.strategy.Phi).norm() < 1e-8 * (1.0 + sol.strategy.Phi.norm()));
    CHECK((back.Psi - sol.strategy.Psi).norm() < 1e-8 * (1.0 + sol.strategy.Psi.norm()));
}

TEST_CASE("rescaling beta by T and L by T^-1 leaves the strategy unchanged") {
    FilterForm f;
    f.Gamma = test::random_stable_matrix(2, 0.7, 31);
    f.beta = test::random_matrix(2, 2, 32);
    f.L = test::random_matrix(2, 2, 33);

    Matrix t = test::random_matrix(2, 2, 34) + 3.0 * Matrix::Identity(2, 2);
    FilterForm g;
    g.beta = t * f.beta;                  // observation scaling absorbed ...
    g.Gamma = t * f.Gamma * t.inverse();  // ... consistently in the estimate basis
    g.L = f.L * t.inverse();              // ... and neutralized by the gain

    Strategy a = strategy_from_filter(f);
    Strategy b = strategy_from_filter(g);
    CHECK((a.Phi - b.Phi).norm() < 1e-8 * (1.0 + a.Phi.norm()));
    CHECK((a.Psi - b.Psi).norm() < 1e-8 * (1.0 + a.Psi.norm()));
}

TEST_CASE("world validation") {
    CHECK_NOTHROW(test::scalar_world(1.2, 1.0, 1.0, 1.0).check_stabilizable());
    WorldModel bad = test::scalar_world(1.2, 0.0, 1.0, 1.0); // no actuation on unstable state
    CHECK_THROWS_AS(bad.check_stabilizable(), NoStabilizingSolution);

    WorldModel w = test::scalar_world(0.5, 1.0, 1.0, 1.0);
    w.Q = -w.Q;
    CHECK_THROWS_AS(w.check_shapes(), InvalidArgument);
}

TEST_SUITE_END();
