#pragma once

#include <Eigen/Dense>

#include "core/errors.hpp"

namespace frugal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense numerical primitives shared by the whole library. Dimensions here
/// are tiny (state <= 6, action <= 2), so the solvers favor exactness and
/// testability over asymptotic speed.
namespace linalg {

/// Default tolerances. Each solver accepts an override where it matters.
struct Tolerances {
    double symmetry = 1e-10;       // |S - S^T| allowed when symmetry is required
    double stability = 1e-9;       // spectral-radius slack below 1
    double dare_convergence = 1e-10;
    long dare_max_iters = 100000;
    double pinv_rank = 1e-12;      // singular values below pinv_rank * sigma_max drop
};

const Tolerances& default_tolerances();

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending,
/// eigenvector columns orthonormal. Satisfies U diag(lambda) U^T = S.
struct SymmetricEigen {
    Vector eigenvalues;
    Matrix eigenvectors;

    Matrix reconstruct() const {
        return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
    }
};

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Matrix& m);

/// Solves the discrete-time Lyapunov equation
///   Sigma = M Sigma M^T + Upsilon
/// by vectorizing through the Kronecker identity and solving the dense
/// (n^2 x n^2) linear system. Requires spectral_radius(M) < 1 and a
/// symmetric Upsilon; the result is symmetrized exactly before returning.
///
/// Throws UnstableSystem when the spectral radius is >= 1 - tol.stability,
/// NotSymmetric when Upsilon is not symmetric, DimensionMismatch on shape
/// errors.
Matrix solve_dlyap(const Matrix& m, const Matrix& upsilon,
                   const Tolerances& tol = default_tolerances());

/// Solves the discrete algebraic Riccati equation
///   X = A^T X A - A^T X B (B^T X B + W_ctrl)^-1 B^T X A + W_state
/// by fixed-point iteration from X = W_state. Converges for stabilizable
/// (A, B) with W_state >= 0, W_ctrl > 0.
///
/// Throws NoStabilizingSolution if the iteration diverges and
/// MaxIterationsExceeded if it stalls past the iteration cap.
Matrix solve_dare(const Matrix& a, const Matrix& b, const Matrix& w_state,
                  const Matrix& w_ctrl, const Tolerances& tol = default_tolerances());

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// tol.pinv_rank * sigma_max are treated as zero.
Matrix pinv(const Matrix& m, const Tolerances& tol = default_tolerances());

/// Symmetric eigendecomposition; throws NotSymmetric if the input is not
/// symmetric within tol.symmetry (relative to the matrix scale).
SymmetricEigen sym_eig(const Matrix& s, const Tolerances& tol = default_tolerances());

/// True iff the smallest eigenvalue of the symmetric matrix s exceeds tol.
bool is_positive_definite(const Matrix& s, double tol,
                          const Tolerances& tols = default_tolerances());

/// max |S - S^T| relative to (1 + max|S|); used by the symmetry checks.
double asymmetry(const Matrix& s);

} // namespace linalg
} // namespace frugal
