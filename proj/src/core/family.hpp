#pragma once

#include "core/optimizer.hpp"

namespace frugal {

/// Data of the quadratic form every equally-optimal controller base
/// dynamics must satisfy at a fixed equilibrium covariance:
///   Phi F2 Phi^T + Phi F1 + F1^T Phi^T = F0.
/// xi = F0 + F1^T F2^-1 F1 is the completed-square residual; it vanishes
/// exactly when the solution is unique (lossless inference) and its rank
/// measures the orthogonal freedom left by lossy inference.
struct QuadraticFormData {
    Matrix F0; // m x m, symmetric
    Matrix F1; // m x m
    Matrix F2; // m x m, symmetric PD
    Matrix xi; // m x m, symmetric PSD
    // Smallest eigenvalue of R - Sigma_s. Nonnegative in the regimes the
    // construction was derived for; reported as a diagnostic because F2 can
    // remain positive definite well past that boundary.
    double r_slack_min_eig = 0.0;
};

/// One equally-optimal strategy, tagged with the orthogonal transform that
/// produced it. Validation results are carried along so that invalid draws
/// are reported rather than dropped.
struct FamilyMember {
    Matrix Theta;       // m x m orthogonal
    Strategy strategy;
    bool stable = false;
    double sigma_rel_err = 0.0; // |dlyap(member) - seed Sigma|_F / |seed Sigma|_F
};

/// Builds {F0, F1, F2, xi} from the equilibrium covariance. With
/// A = Sigma_sa^T Sigma_s^-1 and B = (Sigma_sa^T D^T + Sigma_a E^T) Sigma_s^-1
/// (both m x n), eliminating Psi = A - Phi B from the ellipsoidal constraint
/// and grouping by powers of Phi gives
///   F2 = Sigma_a + B (R - Sigma_s) B^T
///   F1 = -B (Sigma_sa + (R - Sigma_s) A^T)
///   F0 = Sigma_a - A Sigma_sa - Sigma_sa^T A^T - A (R - Sigma_s) A^T.
///
/// Throws ConstraintViolated when F2 fails to be positive definite and
/// SingularStateCovariance when Sigma_s cannot be inverted.
QuadraticFormData quadratic_form_data(const WorldModel& world, const Matrix& sigma);

/// Residual of the ellipsoidal constraint
///   Sigma_a - Phi Sigma_a Phi^T - Psi Sigma_sa - Sigma_sa^T Psi^T
///           - Psi (R - Sigma_s) Psi^T
/// in Frobenius norm; every family member drives this to zero.
double ellipsoid_residual(const WorldModel& world, const Matrix& sigma, const Strategy& s);

/// lossless iff |xi|_F < tol. The default tolerance scales with F0.
Regime classify_regime(const QuadraticFormData& q, double tol);
Regime classify_regime(const QuadraticFormData& q); // tol = 1e-6 (1 + |F0|_F)

/// Family member for a given orthogonal Theta:
///   Phi_Theta = U_xi Lambda_xi^(1/2) Theta Lambda_F2^(-1/2) U_F2^T - F1^T F2^-1
///   Psi_Theta = A - Phi_Theta B.
/// Eigenvalues of xi in [-1e-8, 0] are clamped to zero before the square
/// root; null directions of xi contribute no freedom. The member is
/// validated against the seed covariance (stability + Sigma match) and the
/// outcome stored on the returned value.
///
/// Throws NotOrthogonal for a non-orthogonal Theta and NegativeEigenvalue
/// when xi has an eigenvalue below -1e-8.
FamilyMember member(const WorldModel& world, const Matrix& sigma,
                    const QuadraticFormData& q, const Matrix& theta);

/// The orthogonal transform that reproduces a given strategy from the
/// quadratic-form data (identity on rank-deficient directions of xi).
Matrix theta_of(const Strategy& s, const QuadraticFormData& q);

/// Recovers the family from a converged solve. For m = 1 this is the pair
/// {+1, -1} collapsed to one member in the lossless regime; for m = 2,
/// `count` members alternating rotations at uniformly spaced angles with
/// their reflections; for m > 2, seeded Haar-like random orthogonal draws.
///
/// Throws SeedNotConverged when the seed solve did not converge.
std::vector<FamilyMember> enumerate_family(const WorldModel& world, const SolveResult& seed,
                                           int count, std::uint64_t theta_seed = 0);

} // namespace frugal
