#pragma once

// Covariance formation and noise-floor removal.

#include "blindcal/core.hpp"

namespace blindcal {

struct DenoisedCovariance {
    CMatrix r_hat;        ///< estimate of the noiseless covariance
    double sigma_hat = 0; ///< estimated noise level
    long l_used = 0;      ///< snapshots behind the estimate, 0 for an exact covariance
    bool clamped = false; ///< a diagonal entry was raised to the positivity floor
};

/// (1/L)·Σ_t y(t)y(t)* over the columns of `snapshots`.
inline CMatrix empirical_covariance(const CMatrix& snapshots) {
    if (snapshots.cols() < 1)
        throw Error(ErrorCode::InvalidConfig, "empirical covariance needs L >= 1");
    CMatrix cov = CMatrix::Zero(snapshots.rows(), snapshots.rows());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(snapshots, 1.0 / static_cast<double>(snapshots.cols()));
    CMatrix full = cov.selfadjointView<Eigen::Lower>();
    for (Eigen::Index i = 0; i < full.rows(); ++i)
        full(i, i) = Complex(full(i, i).real(), 0.0);
    return full;
}

/// sqrt of the mean of the N−s smallest eigenvalues.
inline double estimate_noise_level(const CMatrix& cov, int s) {
    const Eigen::Index n = cov.rows();
    if (s < 0 || s >= n)
        throw Error(ErrorCode::SparsityTooLarge, "s = " + std::to_string(s) + " with N = " + std::to_string(n));
    const RVector ev = hermitian_eig(cov).values;
    const double tail = ev.tail(n - s).sum() / static_cast<double>(n - s);
    return std::sqrt(std::max(tail, 0.0));
}

/// cov − σ̂²I. Diagonal entries below 1e-12·trace/N are raised to that floor
/// so that amplitude extraction can take square roots.
inline DenoisedCovariance denoise(const CMatrix& cov, int s, long l_used = 0) {
    DenoisedCovariance out;
    out.sigma_hat = estimate_noise_level(cov, s);
    out.l_used = l_used;
    out.r_hat = hermitian_part(cov);
    out.r_hat.diagonal().array() -= out.sigma_hat * out.sigma_hat;

    const double n = static_cast<double>(cov.rows());
    const double floor = 1e-12 * std::max(out.r_hat.diagonal().real().sum() / n, 1e-300);
    for (Eigen::Index i = 0; i < out.r_hat.rows(); ++i) {
        if (out.r_hat(i, i).real() < floor) {
            out.r_hat(i, i) = Complex(floor, 0.0);
            out.clamped = true;
        }
    }
    return out;
}

} // namespace blindcal
