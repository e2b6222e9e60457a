#pragma once

// Partial algebraic calibration: amplitudes from the covariance diagonal,
// phases from ratios along the first sub-diagonal, then the calibrated
// Toeplitz-structured matrix F̂ = Ĝ⁻¹·R̂·Ĝ⁻*.

#include <string>

#include "blindcal/model.hpp"
#include "blindcal/spectra.hpp"

namespace blindcal {

/// Second-difference phase system Φβ = b. Interior rows are (1, −2, 1);
/// rows 0 and N−1 carry a single 1/N² that pins the phase ramp.
struct PhaseSystem {
    RMatrix phi;
    RVector b_hat;
};

struct AlgebraicOutput {
    CalibrationVector g_hat;
    CMatrix f_matrix; ///< F̂, Hermitian
    PhaseSystem phase_system;
    DenoisedCovariance denoised;
};

/// α̂_n = sqrt(r̂_nn).
inline RVector estimate_amplitudes(const DenoisedCovariance& cov) {
    const CMatrix& r = cov.r_hat;
    RVector alpha(r.rows());
    for (Eigen::Index n = 0; n < r.rows(); ++n) {
        const double d = r(n, n).real();
        if (!(d > 0.0))
            throw Error(ErrorCode::NonPositiveDiagonal, "diagonal entry " + std::to_string(n) + " is not positive");
        alpha[n] = std::sqrt(d);
    }
    return alpha;
}

/// The N×N matrix Φ alone (independent of data).
inline RMatrix phase_matrix(Eigen::Index n) {
    RMatrix phi = RMatrix::Zero(n, n);
    const double corner = 1.0 / static_cast<double>(n * n);
    phi(0, 0) = corner;
    phi(n - 1, n - 1) = corner;
    for (Eigen::Index r = 1; r + 1 < n; ++r) {
        phi(r, r - 1) = 1.0;
        phi(r, r) = -2.0;
        phi(r, r + 1) = 1.0;
    }
    return phi;
}

/// b̂_n = angle(r̂[n+1][n] / r̂[n][n−1]) for n = 1..N−2, zero at both ends.
/// Throws VanishingSubdiagonal when |r̂[n][n−1]| < 1e-12·‖r̂‖_F.
inline PhaseSystem build_phase_system(const CMatrix& r_hat) {
    const Eigen::Index n = r_hat.rows();
    if (n < 3)
        throw Error(ErrorCode::DimensionMismatch, "phase system needs N >= 3");
    const double floor = 1e-12 * r_hat.norm();
    for (Eigen::Index i = 1; i < n; ++i) {
        const double mag = std::abs(r_hat(i, i - 1));
        if (!(mag >= floor) || mag == 0.0)
            throw Error(ErrorCode::VanishingSubdiagonal,
                        "|r[" + std::to_string(i) + "][" + std::to_string(i - 1) + "]| = " + std::to_string(mag));
    }
    PhaseSystem sys;
    sys.phi = phase_matrix(n);
    sys.b_hat = RVector::Zero(n);
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        sys.b_hat[i] = principal_angle(r_hat(i + 1, i) / r_hat(i, i - 1));
    return sys;
}

inline RVector solve_phase_system(const PhaseSystem& sys) {
    Eigen::PartialPivLU<RMatrix> lu(sys.phi);
    RVector beta = lu.solve(sys.b_hat);
    const double residual = (sys.phi * beta - sys.b_hat).lpNorm<Eigen::Infinity>();
    if (!beta.allFinite() || residual > 1e-9 * (1.0 + sys.b_hat.lpNorm<Eigen::Infinity>()))
        throw Error(ErrorCode::SingularSystem, "phase system residual " + std::to_string(residual));
    return beta;
}

/// ‖Φ⁻¹‖_∞ for the N×N phase matrix.
inline double phase_matrix_inverse_inf_norm(Eigen::Index n) {
    const RMatrix inv = phase_matrix(n).inverse();
    return inv.cwiseAbs().rowwise().sum().maxCoeff();
}

/// diag(g)⁻¹·R·diag(conj g)⁻¹, symmetrised.
inline CMatrix calibrate_covariance(const CMatrix& r_hat, const CVector& g) {
    const CVector inv = g.cwiseInverse();
    return hermitian_part(sandwich(inv, r_hat, inv));
}

inline AlgebraicOutput run_partial_algebraic(const DenoisedCovariance& denoised) {
    AlgebraicOutput out;
    out.denoised = denoised;
    const RVector alpha = estimate_amplitudes(denoised);
    out.phase_system = build_phase_system(denoised.r_hat);
    const RVector beta = solve_phase_system(out.phase_system);
    out.g_hat.g.resize(alpha.size());
    for (Eigen::Index n = 0; n < alpha.size(); ++n)
        out.g_hat.g[n] = std::polar(alpha[n], beta[n]);
    out.f_matrix = calibrate_covariance(denoised.r_hat, out.g_hat.g);
    return out;
}

/// Steps from a raw (noisy) covariance: noise removal, then calibration.
inline AlgebraicOutput run_partial_algebraic(const CMatrix& covariance, int s, long l_used = 0) {
    if (covariance.rows() < s + 1)
        throw Error(ErrorCode::SparsityTooLarge, "need N >= s + 1");
    return run_partial_algebraic(denoise(covariance, s, l_used));
}

inline AlgebraicOutput run_partial_algebraic_snapshots(const CMatrix& snapshots, int s) {
    return run_partial_algebraic(empirical_covariance(snapshots), s, static_cast<long>(snapshots.cols()));
}

/// Mean of each sub-diagonal of a matrix: out[k] = mean_n M[n+k][n].
inline ToeplitzSpec average_subdiagonals(const CMatrix& m) {
    const Eigen::Index n = m.rows();
    CVector f(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index i = 0; i + k < n; ++i)
            acc += m(i + k, i);
        f[k] = acc / static_cast<double>(n - k);
    }
    f[0] = Complex(f[0].real(), 0.0);
    return ToeplitzSpec(std::move(f));
}

} // namespace blindcal
