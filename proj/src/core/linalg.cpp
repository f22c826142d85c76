#include "core/linalg.hpp"

#include <cmath>
#include <string>

namespace frugal {
namespace linalg {

namespace {

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch(std::string(what) + " must be square, got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (m.rows() == 0) {
        throw DimensionMismatch(std::string(what) + " must be non-empty");
    }
}

} // namespace

const Tolerances& default_tolerances() {
    static const Tolerances tols{};
    return tols;
}

double asymmetry(const Matrix& s) {
    if (s.rows() != s.cols()) return 1.0;
    return (s - s.transpose()).cwiseAbs().maxCoeff() / (1.0 + s.cwiseAbs().maxCoeff());
}

double spectral_radius(const Matrix& m) {
    require_square(m, "spectral_radius input");
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix solve_dlyap(const Matrix& m, const Matrix& upsilon, const Tolerances& tol) {
    require_square(m, "dlyap transition");
    require_square(upsilon, "dlyap noise covariance");
    if (m.rows() != upsilon.rows()) {
        throw DimensionMismatch("dlyap operands disagree: " + std::to_string(m.rows()) +
                                " vs " + std::to_string(upsilon.rows()));
    }
    if (asymmetry(upsilon) > tol.symmetry) {
        throw NotSymmetric("dlyap noise covariance");
    }
    const double rho = spectral_radius(m);
    if (rho >= 1.0 - tol.stability) {
        throw UnstableSystem("dlyap requires spectral radius < 1, got " + std::to_string(rho));
    }

    // vec(Sigma) = (I - M (x) M)^-1 vec(Upsilon). Eigen's reshaped() is
    // column-major, which matches the Kronecker vec convention.
    const Eigen::Index n = m.rows();
    Matrix kron(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            kron.block(i * n, j * n, n, n) = m(i, j) * m;

    Matrix system = Matrix::Identity(n * n, n * n) - kron;
    Vector rhs = upsilon.reshaped();
    Vector x = system.partialPivLu().solve(rhs);

    Matrix sigma = x.reshaped(n, n);
    sigma = ((sigma + sigma.transpose()) / 2.0).eval();
    return sigma;
}

Matrix solve_dare(const Matrix& a, const Matrix& b, const Matrix& w_state,
                  const Matrix& w_ctrl, const Tolerances& tol) {
    require_square(a, "dare dynamics");
    require_square(w_state, "dare state weight");
    require_square(w_ctrl, "dare control weight");
    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.cols();
    if (b.rows() != n || w_state.rows() != n || w_ctrl.rows() != m) {
        throw DimensionMismatch("dare operand shapes are inconsistent");
    }

    Matrix x = w_state;
    for (long it = 0; it < tol.dare_max_iters; ++it) {
        Matrix btxb = b.transpose() * x * b + w_ctrl;
        Matrix gain = btxb.ldlt().solve(b.transpose() * x * a);
        Matrix x_next = a.transpose() * x * a - a.transpose() * x * b * gain + w_state;
        x_next = ((x_next + x_next.transpose()) / 2.0).eval();

        const double delta = (x_next - x).cwiseAbs().maxCoeff();
        const double scale = 1.0 + x_next.cwiseAbs().maxCoeff();
        if (!std::isfinite(delta) || scale > 1e130) {
            throw NoStabilizingSolution("dare iteration diverged");
        }
        x = x_next;
        if (delta < tol.dare_convergence * scale) {
            return x;
        }
    }
    throw MaxIterationsExceeded("dare did not converge in " +
                                std::to_string(tol.dare_max_iters) + " iterations");
}

Matrix pinv(const Matrix& m, const Tolerances& tol) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0) return Matrix::Zero(m.cols(), m.rows());
    const double cutoff = tol.pinv_rank * sv(0);
    Vector inv = Vector::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

SymmetricEigen sym_eig(const Matrix& s, const Tolerances& tol) {
    require_square(s, "sym_eig input");
    if (asymmetry(s) > tol.symmetry) {
        throw NotSymmetric("sym_eig input");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(((s + s.transpose()) / 2.0).eval());
    if (es.info() != Eigen::Success) {
        throw UnstableSystem("symmetric eigendecomposition failed");
    }

    // Eigen sorts ascending; flip to descending.
    const Eigen::Index n = s.rows();
    SymmetricEigen out;
    out.eigenvalues = Vector(n);
    out.eigenvectors = Matrix(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.eigenvalues(i) = es.eigenvalues()(n - 1 - i);
        out.eigenvectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return out;
}

bool is_positive_definite(const Matrix& s, double tol, const Tolerances& tols) {
    return sym_eig(s, tols).eigenvalues.minCoeff() > tol;
}

} // namespace linalg
} // namespace frugal
