#pragma once

// End-to-end calibration with either method, sharing the algebraic stage.

#include "blindcal/diagnostics.hpp"
#include "blindcal/optim.hpp"

namespace blindcal {

enum class Method { Algebraic, Optim };

constexpr std::string_view to_string(Method m) noexcept {
    return m == Method::Algebraic ? "algebraic" : "optim";
}

struct CalibrationResult {
    Method method = Method::Algebraic;
    CalibrationVector g_hat;
    ToeplitzSpec f_hat; ///< f̂ from the sub-diagonal means of F̂, or the optimiser output
    PeakSet peaks;
    CMatrix music_input; ///< matrix handed to MUSIC: F̂ or T(f̂)
    double sigma_hat = 0.0;
    double n0_hat = 0.0; ///< optimiser only
    bool clamped = false;
    RankCondition rank;

    // Optimiser only.
    std::vector<TraceRow> trace;
    Termination termination = Termination::GradientTolerance;
    int iterations = 0;
    double final_objective = 0.0; ///< L̃ at the returned point
    double rho = 0.0;
};

/// Algebraic gains followed by MUSIC on F̂.
inline CalibrationResult calibrate_algebraic(const AlgebraicOutput& alg, int s, const MusicOptions& music_opts = {}) {
    CalibrationResult res;
    res.method = Method::Algebraic;
    res.g_hat = alg.g_hat;
    res.f_hat = average_subdiagonals(alg.f_matrix);
    res.music_input = alg.f_matrix;
    res.peaks = music(res.music_input, s, music_opts);
    res.sigma_hat = alg.denoised.sigma_hat;
    res.clamped = alg.denoised.clamped;
    res.rank = rank_condition(res.f_hat);
    return res;
}

/// Optimisation approach seeded from an algebraic solution; MUSIC is applied
/// to T(f̂) at the end.
inline CalibrationResult run_optimizer(const AlgebraicOutput& alg, int s, const OptimConfig& config = {}) {
    const CMatrix& r_hat = alg.denoised.r_hat;
    CalibrationResult res;
    res.method = Method::Optim;
    res.n0_hat = estimate_n0(r_hat);
    const OptimState init = initialize(alg, res.n0_hat);
    DescentResult run = descend(init, r_hat, res.n0_hat, config);
    res.g_hat.g = run.state.g;
    res.f_hat = ToeplitzSpec(run.state.f);
    res.f_hat[0] = Complex(res.f_hat[0].real(), 0.0);
    res.music_input = toeplitz(res.f_hat);
    res.peaks = music(res.music_input, s, config.music);
    res.sigma_hat = alg.denoised.sigma_hat;
    res.clamped = alg.denoised.clamped;
    res.rank = rank_condition(res.f_hat);
    res.trace = std::move(run.trace);
    res.termination = run.termination;
    res.iterations = run.state.iterate_index;
    res.final_objective = run.state.objective_value;
    res.rho = run.rho;
    return res;
}

inline CalibrationResult run_optimizer(const CMatrix& covariance, int s, const OptimConfig& config = {},
                                       long l_used = 0) {
    return run_optimizer(run_partial_algebraic(covariance, s, l_used), s, config);
}

inline CalibrationResult calibrate_algebraic(const CMatrix& covariance, int s, const MusicOptions& music_opts = {},
                                             long l_used = 0) {
    return calibrate_algebraic(run_partial_algebraic(covariance, s, l_used), s, music_opts);
}

} // namespace blindcal
