#pragma once

// Computable error bounds and identifiability checks.

#include <optional>
#include <vector>

#include "blindcal/model.hpp"

namespace blindcal {

struct BoundInputs {
    double alpha_max = 0.0;
    double gamma_max = 0.0;
    double sigma_max_A = 0.0; ///< largest singular value of the steering matrix
    double sigma = 0.0;
    double L = 1.0;
    int N = 0;
    int s = 0;
    double max_x_norm = 0.0; ///< max_t ‖x(t)‖ over the snapshots used
    double max_e_norm = 0.0; ///< max_t ‖e(t)‖ over the snapshots used
};

/// Expected-error bound on ‖R^y − R̂^y‖ (spectral norm) for the denoised
/// empirical covariance; natural logarithms throughout.
inline double delta_ry_bound(const BoundInputs& in) {
    const double s = in.s;
    const double n = in.N;
    const double sqrt_l = std::sqrt(in.L);
    const double a = in.alpha_max, sa = in.sigma_max_A, gm = in.gamma_max;
    const double x = in.max_x_norm, e = in.max_e_norm, sig = in.sigma;

    const double log4s = std::log(4.0 * s);
    const double logns = std::log(n + s);
    const double log2n = std::log(2.0 * n);

    const double source = 2.0 * a * a * sa * sa *
                          (gm * x * std::sqrt(2.0 * log4s) / sqrt_l + (gm * gm + x * x) * log4s / (3.0 * in.L));
    const double cross =
        4.0 * a * sa * (sig * gm * std::sqrt(2.0 * n * logns) / sqrt_l + x * e * logns / (3.0 * in.L));
    const double noise = 2.0 * (sig * e * std::sqrt(2.0 * log2n) / sqrt_l + (sig * sig + e * e) * log2n / (3.0 * in.L));
    return source + cross + noise;
}

/// Extra quantities for the gain and spectrum error bounds.
struct GainBoundInputs {
    double alpha_min = 0.0;
    double g_norm = 0.0;
    double f0 = 0.0;
    double f1_abs = 0.0;
};

/// Multiplier turning ΔR^y into the gain-error bound (up to the trivial ambiguity).
inline double gain_error_factor(const BoundInputs& in, const GainBoundInputs& gb) {
    const double n = in.N;
    const double g2 = gb.g_norm * gb.g_norm;
    return 3.0 * (g2 + n * in.alpha_max * in.alpha_max) / (2.0 * gb.alpha_min * g2 * gb.f0) +
           144.0 * n * n * std::pow(in.alpha_max, 5) / (std::pow(gb.alpha_min, 6) * gb.f1_abs);
}

inline double delta_g_bound(const BoundInputs& in, const GainBoundInputs& gb) {
    return gain_error_factor(in, gb) * delta_ry_bound(in);
}

inline double delta_f_bound(const BoundInputs& in, const GainBoundInputs& gb) {
    const double am = gb.alpha_min;
    const double factor = 9.0 / (am * am) + 12.0 * in.alpha_max * in.alpha_max * in.gamma_max * in.gamma_max *
                                                in.sigma_max_A * in.sigma_max_A / (am * am * am) *
                                                gain_error_factor(in, gb);
    return factor * delta_ry_bound(in);
}

/// 2‖E‖/λ_s(F) when 2‖E‖ < λ_s(F); std::nullopt when the hypothesis fails.
inline std::optional<double> music_perturbation_bound(double e_norm, double lambda_s) {
    if (!(lambda_s > 0.0) || !(2.0 * e_norm < lambda_s))
        return std::nullopt;
    return 2.0 * e_norm / lambda_s;
}

/// Bound on the sup-norm change of the noise-space correlation after
/// calibration, 2ΔF/λ_s(F).
inline std::optional<double> delta_correlation_bound(const BoundInputs& in, const GainBoundInputs& gb, double lambda_s) {
    if (!(lambda_s > 0.0))
        return std::nullopt;
    return 2.0 * delta_f_bound(in, gb) / lambda_s;
}

/// Inputs derived from a ground-truth instance and the observed maxima.
inline BoundInputs bound_inputs(const ProblemInstance& inst, double L, double max_x_norm, double max_e_norm) {
    BoundInputs in;
    in.alpha_max = inst.cal.amplitudes().maxCoeff();
    in.gamma_max = inst.freq.gammas.maxCoeff();
    Eigen::JacobiSVD<CMatrix> svd(steering_matrix(inst.freq, inst.N));
    in.sigma_max_A = svd.singularValues()[0];
    in.sigma = inst.sigma;
    in.L = L;
    in.N = inst.N;
    in.s = static_cast<int>(inst.freq.size());
    in.max_x_norm = max_x_norm;
    in.max_e_norm = max_e_norm;
    return in;
}

/// Φ_k, (N−k−1)×N: row l encodes β_{l+k+1} − β_{l+k} − β_{l+1} + β_l.
inline RMatrix build_phi_k(int k, int N) {
    if (k < 1 || k > N - 2)
        throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + " outside 1..N-2 for N = " + std::to_string(N));
    RMatrix phi = RMatrix::Zero(N - k - 1, N);
    for (int l = 0; l < N - k - 1; ++l) {
        phi(l, l + k + 1) += 1.0;
        phi(l, l + k) -= 1.0;
        phi(l, l + 1) -= 1.0;
        phi(l, l) += 1.0;
    }
    return phi;
}

struct RankCondition {
    std::vector<int> lambda; ///< k ∈ 1..N−2 with |f_k| > zero_tol·|f₀|
    int rank = 0;
    bool satisfied = false;
};

/// Identifiability check: stack Φ_k over the nonvanishing lags and test
/// rank = N − 2.
inline RankCondition rank_condition(const ToeplitzSpec& f, double zero_tol = 1e-10) {
    const int n = static_cast<int>(f.size());
    RankCondition out;
    const double ref = std::abs(f[0]);
    for (int k = 1; k <= n - 2; ++k)
        if (std::abs(f[k]) > zero_tol * ref)
            out.lambda.push_back(k);
    if (out.lambda.empty())
        return out;
    int rows = 0;
    for (int k : out.lambda)
        rows += n - k - 1;
    RMatrix stacked(rows, n);
    int at = 0;
    for (int k : out.lambda) {
        stacked.middleRows(at, n - k - 1) = build_phi_k(k, n);
        at += n - k - 1;
    }
    Eigen::JacobiSVD<RMatrix> svd(stacked);
    const RVector sv = svd.singularValues();
    const double cutoff = 1e-10 * sv[0];
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff)
            ++out.rank;
    out.satisfied = out.rank == n - 2;
    return out;
}

} // namespace blindcal
