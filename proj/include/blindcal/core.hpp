#pragma once

// Dense complex linear-algebra vocabulary shared by every module: the
// Hermitian Toeplitz operator, its adjoint-style companion, diagonal
// sandwich products and a sorted Hermitian eigendecomposition.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>

#include <Eigen/Dense>

#include "blindcal/error.hpp"

namespace blindcal {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// First column of a Hermitian Toeplitz matrix. `f[0]` is the (real) diagonal
/// value, `f[k]` the value on the k-th sub-diagonal.
struct ToeplitzSpec {
    CVector f;

    ToeplitzSpec() = default;
    explicit ToeplitzSpec(CVector values) : f(std::move(values)) {}

    Eigen::Index size() const noexcept { return f.size(); }
    const Complex& operator[](Eigen::Index k) const { return f[k]; }
    Complex& operator[](Eigen::Index k) { return f[k]; }

    /// Builds a spec from the first column of a Hermitian Toeplitz matrix,
    /// rejecting a diagonal value with a non-negligible imaginary part.
    static ToeplitzSpec from_first_column(const CMatrix& m) {
        CVector col = m.col(0);
        if (std::abs(col[0].imag()) > 1e-12 * std::abs(col[0]))
            throw Error(ErrorCode::NotHermitian, "Toeplitz diagonal value is not real");
        col[0] = Complex(col[0].real(), 0.0);
        return ToeplitzSpec(std::move(col));
    }
};

inline double hermitian_defect(const CMatrix& m) {
    return (m - m.adjoint()).norm();
}

/// ‖M − M*‖_F ≤ tol·‖M‖_F (a zero matrix is Hermitian).
inline bool is_hermitian(const CMatrix& m, double tol = 1e-10) {
    if (m.rows() != m.cols())
        return false;
    return hermitian_defect(m) <= tol * m.norm();
}

/// Returns (M + M*)/2 with an exactly real diagonal.
inline CMatrix hermitian_part(const CMatrix& m) {
    CMatrix h = 0.5 * (m + m.adjoint());
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        h(i, i) = Complex(h(i, i).real(), 0.0);
    return h;
}

/// T(f): entry (m, n) is f[m−n] on and below the diagonal, conj(f[n−m]) above.
inline CMatrix toeplitz(const ToeplitzSpec& spec) {
    const Eigen::Index n = spec.size();
    CMatrix t(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        for (Eigen::Index row = 0; row < n; ++row) {
            t(row, col) = row >= col ? spec[row - col] : std::conj(spec[col - row]);
        }
    }
    return t;
}

/// T^a(X): entry k sums the k-th super-diagonal of X and the conjugated k-th
/// sub-diagonal of X. Entry 0 equals 2·Re(trace X).
inline CVector toeplitz_adjoint(const CMatrix& x) {
    if (x.rows() != x.cols())
        throw Error(ErrorCode::DimensionMismatch, "toeplitz_adjoint needs a square matrix");
    const Eigen::Index n = x.rows();
    CVector out = CVector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index i = 0; i + k < n; ++i)
            acc += x(i, i + k) + std::conj(x(i + k, i));
        out[k] = acc;
    }
    out[0] = Complex(out[0].real(), 0.0);
    return out;
}

/// diag(g)·M·diag(conj h).
inline CMatrix sandwich(const CVector& g, const CMatrix& m, const CVector& h) {
    if (m.rows() != g.size() || m.cols() != h.size())
        throw Error(ErrorCode::DimensionMismatch, "sandwich dimensions disagree");
    return g.asDiagonal() * m * h.conjugate().asDiagonal();
}

struct Eigendecomposition {
    RVector values;  ///< descending
    CMatrix vectors; ///< column j pairs with values[j]
};

/// Eigenvalues in descending order with a unitary eigenvector matrix.
/// Throws NotHermitian if ‖M − M*‖_F > 1e-10·‖M‖_F.
inline Eigendecomposition hermitian_eig(const CMatrix& m) {
    if (m.rows() != m.cols())
        throw Error(ErrorCode::DimensionMismatch, "hermitian_eig needs a square matrix");
    if (!is_hermitian(m))
        throw Error(ErrorCode::NotHermitian, "input defect " + std::to_string(hermitian_defect(m)));
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(m));
    Eigendecomposition out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

/// Largest singular value (spectral norm).
inline double spectral_norm(const CMatrix& m) {
    if (m.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()[0];
}

/// Spectral norm of a Hermitian matrix via its eigenvalues.
inline double hermitian_spectral_norm(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
    const RVector& ev = solver.eigenvalues();
    return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

/// Principal value of the argument in (−π, π].
inline double principal_angle(Complex z) {
    double a = std::arg(z);
    if (a <= -std::numbers::pi)
        a += kTwoPi;
    return a;
}

/// Reduces x to the torus [0, 1).
inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0)
        r = 0.0;
    return r;
}

} // namespace blindcal
