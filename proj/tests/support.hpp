#pragma once

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "blindcal/blindcal.hpp"

namespace testing_support {

using namespace blindcal;

inline CVector random_cvector(Rng& rng, Eigen::Index n, double scale = 1.0) {
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = Complex(rng.normal(scale), rng.normal(scale));
    return v;
}

inline CMatrix random_cmatrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = Complex(rng.normal(scale), rng.normal(scale));
    return m;
}

inline CMatrix random_hermitian(Rng& rng, Eigen::Index n) {
    const CMatrix m = random_cmatrix(rng, n, n);
    return 0.5 * (m + m.adjoint());
}

inline CMatrix random_unitary(Rng& rng, Eigen::Index n) {
    Eigen::HouseholderQR<CMatrix> qr(random_cmatrix(rng, n, n));
    return qr.householderQ() * CMatrix::Identity(n, n);
}

/// f with a real first entry, as the Toeplitz core requires.
inline CVector random_f(Rng& rng, Eigen::Index n) {
    CVector f = random_cvector(rng, n);
    f[0] = Complex(std::abs(f[0].real()) + 1.0, 0.0);
    return f;
}

/// Random instance with s equispaced frequencies at the given spacing (units of 1/N).
inline ProblemInstance random_instance(std::uint64_t seed, int N, int s, double sep = 2.0, double sigma = 0.0) {
    InstanceFamily fam;
    fam.N = N;
    fam.s = s;
    fam.separation = sep;
    fam.sigma = sigma;
    return make_instance(fam, seed);
}

/// Independent triple-loop matrix product.
inline CMatrix loop_product(const CMatrix& a, const CMatrix& b) {
    CMatrix out = CMatrix::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            Complex acc = 0.0;
            for (Eigen::Index k = 0; k < a.cols(); ++k)
                acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

inline double rel_fro(const CMatrix& a, const CMatrix& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Least-squares slope of log10(y) against log10(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log10(x[i]);
        my += std::log10(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log10(x[i]) - mx;
        sxy += dx * (std::log10(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

} // namespace testing_support
