#pragma once

// Ground-truth problem instances and synthetic snapshot generation for a
// uniform linear array with unknown per-sensor complex gains.

#include <cstdint>
#include <random>
#include <string>

#include "blindcal/core.hpp"

namespace blindcal {

/// SplitMix64 finaliser; used to derive decorrelated seeds for sub-streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// 64-bit seeded generator. Streams are derived, never shared between trials.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    /// Generator for an independent sub-stream keyed by `salt`; depends only
    /// on the construction seed, not on how many draws were made.
    Rng split(std::uint64_t salt) const { return Rng(splitmix64(seed_ ^ splitmix64(salt ^ 0xA5A5A5A5A5A5A5A5ULL))); }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double stddev) { return std::normal_distribution<double>(0.0, stddev)(engine_); }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Spike locations on the unit torus and their root powers γ_j.
struct FrequencySet {
    RVector omegas;
    RVector gammas;

    Eigen::Index size() const noexcept { return omegas.size(); }

    /// Throws InvalidConfig when a location is off the torus, two locations
    /// coincide, or a root power is not positive.
    void validate() const;
};

/// Per-sensor complex gains g_n = α_n e^{iβ_n}.
struct CalibrationVector {
    CVector g;

    Eigen::Index size() const noexcept { return g.size(); }
    RVector amplitudes() const { return g.cwiseAbs(); }
    RVector phases() const {
        RVector b(g.size());
        for (Eigen::Index n = 0; n < g.size(); ++n)
            b[n] = std::arg(g[n]);
        return b;
    }
};

struct ProblemInstance {
    FrequencySet freq;
    CalibrationVector cal;
    int N = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Parameters of the randomised instance family: `separation` is the exact
/// spacing between consecutive frequencies in units of 1/N.
struct InstanceFamily {
    int N = 64;
    int s = 20;
    double separation = 2.0;
    double dr_gamma = 2.0;
    double dr_g = 2.0;
    double sigma = 0.5;
};

inline double torus_distance(double a, double b) {
    const double d = std::abs(a - b);
    const double r = d - std::floor(d);
    return std::min(r, 1.0 - r);
}

inline void FrequencySet::validate() const {
    if (omegas.size() != gammas.size())
        throw Error(ErrorCode::InvalidConfig, "omegas and gammas differ in length");
    for (Eigen::Index j = 0; j < omegas.size(); ++j) {
        if (!(omegas[j] >= 0.0 && omegas[j] < 1.0))
            throw Error(ErrorCode::InvalidConfig, "omega " + std::to_string(j) + " outside [0,1)");
        if (!(gammas[j] > 0.0))
            throw Error(ErrorCode::InvalidConfig, "gamma " + std::to_string(j) + " not positive");
        for (Eigen::Index k = 0; k < j; ++k)
            if (torus_distance(omegas[j], omegas[k]) == 0.0)
                throw Error(ErrorCode::InvalidConfig, "duplicate frequency");
    }
}

inline void ProblemInstance::validate() const {
    freq.validate();
    if (N < 2)
        throw Error(ErrorCode::InvalidConfig, "N must be at least 2");
    if (cal.size() != N)
        throw Error(ErrorCode::InvalidConfig, "gain vector length differs from N");
    if (N < freq.size() + 1)
        throw Error(ErrorCode::InvalidConfig, "need N >= s + 1");
    if (!(sigma >= 0.0))
        throw Error(ErrorCode::InvalidConfig, "sigma must be nonnegative");
    for (Eigen::Index n = 0; n < cal.size(); ++n)
        if (std::abs(cal.g[n]) == 0.0)
            throw Error(ErrorCode::InvalidConfig, "gain " + std::to_string(n) + " vanishes");
}

/// A[n][j] = exp(2πi·n·ω_j)/√N; unit-norm columns.
inline CMatrix steering_matrix(const RVector& omegas, int N) {
    CMatrix a(N, omegas.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    for (Eigen::Index j = 0; j < omegas.size(); ++j)
        for (int n = 0; n < N; ++n)
            a(n, j) = std::polar(scale, kTwoPi * static_cast<double>(n) * omegas[j]);
    return a;
}

inline CMatrix steering_matrix(const FrequencySet& freq, int N) {
    return steering_matrix(freq.omegas, N);
}

/// f_n = (1/N)·Σ_j γ_j²·exp(2πi·n·ω_j).
inline ToeplitzSpec ground_truth_f(const FrequencySet& freq, int N) {
    CVector f = CVector::Zero(N);
    for (int n = 0; n < N; ++n) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index j = 0; j < freq.size(); ++j)
            acc += std::polar(freq.gammas[j] * freq.gammas[j], kTwoPi * static_cast<double>(n) * freq.omegas[j]);
        f[n] = acc / static_cast<double>(N);
    }
    f[0] = Complex(f[0].real(), 0.0);
    return ToeplitzSpec(std::move(f));
}

/// Noiseless covariance R^y = diag(g)·T(f)·diag(conj g).
inline CMatrix exact_covariance(const ProblemInstance& inst) {
    return hermitian_part(sandwich(inst.cal.g, toeplitz(ground_truth_f(inst.freq, inst.N)), inst.cal.g));
}

/// Covariance of the noisy measurements, R^y + σ²I.
inline CMatrix exact_noisy_covariance(const ProblemInstance& inst) {
    CMatrix r = exact_covariance(inst);
    r.diagonal().array() += inst.sigma * inst.sigma;
    return r;
}

/// L snapshots y(t) = diag(g)·A·x(t) + e(t) as the columns of an N×L matrix.
/// Sources have modulus γ_j and uniform phase; the noise is circular complex
/// Gaussian with E e e* = σ²I.
inline CMatrix sample_snapshots(const ProblemInstance& inst, int L, Rng& rng) {
    if (L < 1)
        throw Error(ErrorCode::InvalidConfig, "need at least one snapshot");
    const Eigen::Index s = inst.freq.size();
    CMatrix x(s, L);
    for (int t = 0; t < L; ++t)
        for (Eigen::Index j = 0; j < s; ++j)
            x(j, t) = std::polar(inst.freq.gammas[j], rng.uniform(0.0, kTwoPi));
    CMatrix ga = inst.cal.g.asDiagonal() * steering_matrix(inst.freq, inst.N);
    CMatrix y = ga * x;
    if (inst.sigma > 0.0) {
        const double sd = inst.sigma / std::sqrt(2.0);
        for (int t = 0; t < L; ++t)
            for (int n = 0; n < inst.N; ++n)
                y(n, t) += Complex(rng.normal(sd), rng.normal(sd));
    }
    return y;
}

/// Draws an instance from the family: consecutive frequencies exactly
/// `separation/N` apart from a uniform random offset, γ_j ∈ [1, DR_γ],
/// |g_n| ∈ [1, DR_g] and phases uniform on [0, 2π).
inline ProblemInstance make_instance(const InstanceFamily& family, std::uint64_t seed) {
    if (family.N < 2 || family.s < 0 || family.N < family.s + 1)
        throw Error(ErrorCode::InvalidConfig, "need N >= s + 1 and N >= 2");
    if (!(family.separation > 0.0) || family.separation * family.s > family.N)
        throw Error(ErrorCode::InvalidConfig, "separation * s must not exceed N");
    if (!(family.dr_gamma >= 1.0) || !(family.dr_g >= 1.0))
        throw Error(ErrorCode::InvalidConfig, "dynamic ranges must be >= 1");

    Rng rng(seed);
    ProblemInstance inst;
    inst.N = family.N;
    inst.sigma = family.sigma;
    inst.seed = seed;
    inst.freq.omegas.resize(family.s);
    inst.freq.gammas.resize(family.s);
    const double offset = rng.uniform(0.0, 1.0);
    for (int j = 0; j < family.s; ++j) {
        inst.freq.omegas[j] = wrap_unit(offset + j * family.separation / family.N);
        inst.freq.gammas[j] = rng.uniform(1.0, family.dr_gamma);
    }
    inst.cal.g.resize(family.N);
    for (int n = 0; n < family.N; ++n) {
        const double amp = rng.uniform(1.0, family.dr_g);
        inst.cal.g[n] = std::polar(amp, rng.uniform(0.0, kTwoPi));
    }
    inst.validate();
    return inst;
}

} // namespace blindcal
