#include <doctest.h>

#include <random>

#include "core/linalg.hpp"
#include "support.hpp"

using namespace frugal;
using test::random_matrix;
using test::random_spd_matrix;
using test::random_stable_matrix;

TEST_SUITE_BEGIN("linalg");

TEST_CASE("dlyap: zero dynamics leave only the injected noise") {
    Matrix sigma = linalg::solve_dlyap(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
    CHECK((sigma - Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0));
}

TEST_CASE("dlyap: scalar geometric series") {
    Matrix sigma = linalg::solve_dlyap(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.75));
    CHECK(sigma(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dlyap: residual invariant on random stable systems") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed % 4);
        Matrix m = random_stable_matrix(n, 0.3 + 0.08 * seed, 100 + seed);
        Matrix upsilon = random_spd_matrix(n, 200 + seed);
        Matrix sigma = linalg::solve_dlyap(m, upsilon);
        const double residual = (sigma - m * sigma * m.transpose() - upsilon).norm();
        CHECK(residual < 1e-9 * (1.0 + upsilon.norm()));
        CHECK((sigma - sigma.transpose()).norm() == 0.0); // symmetrized exactly
    }
}

TEST_CASE("dlyap: matches the truncated Neumann series") {
    Matrix m = random_stable_matrix(3, 0.6, 7);
    Matrix upsilon = random_spd_matrix(3, 8);
    Matrix sigma = linalg::solve_dlyap(m, upsilon);

    // Sum M^k Upsilon (M^k)^T until rho^k < 1e-12.
    Matrix series = Matrix::Zero(3, 3);
    Matrix mk = Matrix::Identity(3, 3);
    const double rho = linalg::spectral_radius(m);
    for (int k = 0; std::pow(rho, k) >= 1e-12; ++k) {
        series += mk * upsilon * mk.transpose();
        mk = (mk * m).eval();
    }
    CHECK((sigma - series).norm() < 1e-9 * (1.0 + upsilon.norm()));
}

TEST_CASE("dlyap: Monte Carlo covariance of a simulated recursion") {
    const Eigen::Index n = 4;
    Matrix m = random_stable_matrix(n, 0.85, 42);
    Matrix upsilon = Matrix::Identity(n, n);
    Matrix sigma = linalg::solve_dlyap(m, upsilon);

    const long steps = 1000000;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix samples(steps, n);
    Vector z = Vector::Zero(n);
    for (long t = 0; t < steps; ++t) {
        Vector w(n);
        for (Eigen::Index i = 0; i < n; ++i) w(i) = gauss(rng);
        z = m * z + w;
        samples.row(t) = z.transpose();
    }
    auto est = test::batch_covariance(samples, 100);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            CHECK(std::abs(est.mean(i, j) - sigma(i, j)) < 3.0 * est.se(i, j));
        }
    }
}

TEST_CASE("dlyap: rejects unstable and mismatched inputs") {
    CHECK_THROWS_AS(linalg::solve_dlyap(Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
                    UnstableSystem);
    CHECK_THROWS_AS(linalg::solve_dlyap(Matrix::Zero(2, 2), Matrix::Identity(3, 3)),
                    DimensionMismatch);
    Matrix skew(2, 2);
    skew << 0.0, 1.0, -1.0, 0.0;
    CHECK_THROWS_AS(linalg::solve_dlyap(Matrix::Zero(2, 2), skew), NotSymmetric);
}

TEST_CASE("dare: one-step problem") {
    Matrix x = linalg::solve_dare(Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                  Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    CHECK((x - Matrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("dare: scalar closed form") {
    // b^2 x^2 + (w_c (1 - a^2) - w_s b^2) x - w_s w_c = 0, positive root.
    const double a = 1.2, b = 1.0, ws = 1.0, wc = 0.1;
    const double lin = wc * (1.0 - a * a) - ws * b * b;
    const double root = (-lin + std::sqrt(lin * lin + 4.0 * b * b * ws * wc)) / (2.0 * b * b);

    Matrix x = linalg::solve_dare(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
                                  Matrix::Constant(1, 1, ws), Matrix::Constant(1, 1, wc));
    CHECK(x(0, 0) == doctest::Approx(root).epsilon(1e-9));
}

TEST_CASE("dare: fixed point reproduces itself") {
    Matrix a = random_stable_matrix(3, 1.1, 17); // mildly unstable is fine when controllable
    Matrix b = random_matrix(3, 2, 18);
    Matrix ws = random_spd_matrix(3, 19);
    Matrix wc = random_spd_matrix(2, 20);
    Matrix x = linalg::solve_dare(a, b, ws, wc);

    Matrix gain = (b.transpose() * x * b + wc).ldlt().solve(b.transpose() * x * a);
    Matrix again = a.transpose() * x * a - a.transpose() * x * b * gain + ws;
    CHECK((x - again).norm() < 1e-8);
}

TEST_CASE("spectral radius basics") {
    CHECK(linalg::spectral_radius(Matrix::Identity(3, 3)) == doctest::Approx(1.0));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 0.3;
    d(1, 1) = -0.8;
    CHECK(linalg::spectral_radius(d) == doctest::Approx(0.8));
    const double angle = 0.73;
    Matrix rot(2, 2);
    rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    CHECK(linalg::spectral_radius(rot) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(linalg::spectral_radius(Matrix::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("pinv: inverse, row vector, defining identities") {
    Matrix inv2(2, 2);
    inv2 << 2.0, 1.0, 1.0, 3.0;
    CHECK((linalg::pinv(inv2) - inv2.inverse()).norm() < 1e-12);

    Matrix row(1, 2);
    row << 1.0, 0.0;
    Matrix col = linalg::pinv(row);
    CHECK(col(0, 0) == doctest::Approx(1.0));
    CHECK(col(1, 0) == doctest::Approx(0.0));

    Matrix m = random_matrix(2, 4, 33);
    Matrix p = linalg::pinv(m);
    CHECK((m * p * m - m).norm() < 1e-9);
    CHECK((p * m * p - p).norm() < 1e-9);
    CHECK(((m * p) - (m * p).transpose()).norm() < 1e-9);
    CHECK(((p * m) - (p * m).transpose()).norm() < 1e-9);
    CHECK((linalg::pinv(p) - m).norm() < 1e-8);
}

TEST_CASE("sym_eig: diagonal, identity, reconstruction, 2x2 closed form") {
    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 2.0;
    diag(1, 1) = 1.0;
    auto eig = linalg::sym_eig(diag);
    CHECK(eig.eigenvalues(0) == doctest::Approx(2.0));
    CHECK(eig.eigenvalues(1) == doctest::Approx(1.0));
    CHECK(std::abs(eig.eigenvectors(0, 0)) == doctest::Approx(1.0));

    auto eye = linalg::sym_eig(Matrix::Identity(3, 3));
    CHECK((eye.eigenvalues.array() == 1.0).all());

    Matrix s = random_spd_matrix(4, 55) - 2.0 * Matrix::Identity(4, 4);
    auto e4 = linalg::sym_eig(s);
    CHECK((e4.reconstruct() - s).norm() < 1e-10 * s.norm());
    CHECK((e4.eigenvectors.transpose() * e4.eigenvectors - Matrix::Identity(4, 4)).norm() < 1e-10);

    // 2x2 closed form: eigenvalues are roots of l^2 - tr l + det.
    Matrix t(2, 2);
    t << 1.3, -0.4, -0.4, 0.7;
    const double tr = t.trace(), det = t.determinant();
    const double disc = std::sqrt(tr * tr / 4.0 - det);
    auto e2 = linalg::sym_eig(t);
    CHECK(e2.eigenvalues(0) == doctest::Approx(tr / 2.0 + disc).epsilon(1e-12));
    CHECK(e2.eigenvalues(1) == doctest::Approx(tr / 2.0 - disc).epsilon(1e-12));

    Matrix notsym(2, 2);
    notsym << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(linalg::sym_eig(notsym), NotSymmetric);
}

TEST_CASE("positive definiteness") {
    CHECK(linalg::is_positive_definite(Matrix::Identity(2, 2), 1e-12));
    Matrix semi = Matrix::Zero(2, 2);
    semi(0, 0) = 1.0;
    CHECK_FALSE(linalg::is_positive_definite(semi, 1e-12));
    Matrix indef = Matrix::Zero(2, 2);
    indef(0, 0) = 1.0;
    indef(1, 1) = -1.0;
    CHECK_FALSE(linalg::is_positive_definite(indef, 1e-12));
}

TEST_SUITE_END();
