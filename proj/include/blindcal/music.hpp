#pragma once

// MUSIC on the continuous torus. The imaging function is
// J(ω) = ‖φ(ω)‖ / ‖V₂*φ(ω)‖ with φ(ω)_n = e^{2πinω} and V₂ an orthonormal
// basis of the noise subspace; R(ω) = 1/J(ω) is the noise-space correlation.

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "blindcal/core.hpp"

namespace blindcal {

struct NoiseSubspace {
    CMatrix basis;             ///< N×(N−s), orthonormal columns
    RVector signal_eigenvalues; ///< s largest eigenvalues, descending
};

struct PeakSet {
    RVector omegas;      ///< ascending, in [0,1)
    RVector peak_values; ///< J at each returned location
    int grid_size = 0;
    bool refined = false;
    bool degraded = false; ///< fewer than s local maxima were found
    int found = 0;         ///< number of strict local maxima on the grid
};

struct MusicOptions {
    int grid_size = 0;         ///< 0 selects max(4096, 16N)
    double refine_tol = 1e-10; ///< golden-section tolerance in ω units
};

inline int default_grid_size(Eigen::Index n) {
    return std::max<int>(4096, static_cast<int>(16 * n));
}

inline NoiseSubspace noise_subspace(const CMatrix& f, int s) {
    const Eigen::Index n = f.rows();
    if (s < 0 || s >= n)
        throw Error(ErrorCode::SparsityTooLarge, "s = " + std::to_string(s) + " with N = " + std::to_string(n));
    const Eigendecomposition eig = hermitian_eig(f);
    NoiseSubspace sub;
    sub.basis = eig.vectors.rightCols(n - s);
    sub.signal_eigenvalues = eig.values.head(s);
    return sub;
}

/// φ(ω) with the phase reduced mod 1 before scaling by 2π.
inline CVector array_manifold(double omega, Eigen::Index n) {
    CVector phi(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double turns = static_cast<double>(k) * omega;
        phi[k] = std::polar(1.0, kTwoPi * (turns - std::floor(turns)));
    }
    return phi;
}

/// ‖V₂*φ(ω)‖, the denominator of J.
inline double noise_distance(const NoiseSubspace& sub, double omega) {
    return (sub.basis.adjoint() * array_manifold(omega, sub.basis.rows())).norm();
}

/// ‖V₂*φ(ω)‖ over many ω at once.
inline RVector noise_distances(const NoiseSubspace& sub, const RVector& omegas) {
    const Eigen::Index n = sub.basis.rows();
    constexpr Eigen::Index kChunk = 512;
    RVector out(omegas.size());
    CMatrix block(n, kChunk);
    for (Eigen::Index start = 0; start < omegas.size(); start += kChunk) {
        const Eigen::Index len = std::min(kChunk, omegas.size() - start);
        for (Eigen::Index c = 0; c < len; ++c)
            block.col(c) = array_manifold(omegas[start + c], n);
        const CMatrix proj = sub.basis.adjoint() * block.leftCols(len);
        out.segment(start, len) = proj.colwise().norm().transpose();
    }
    return out;
}

inline bool is_exact_root(const NoiseSubspace& sub, double distance) {
    return distance < 1e-14 * std::sqrt(static_cast<double>(sub.basis.rows()));
}

/// J(ω) ≥ 1; +∞ at an exact root.
inline double imaging_function(const NoiseSubspace& sub, double omega) {
    const double d = noise_distance(sub, omega);
    if (is_exact_root(sub, d))
        return std::numeric_limits<double>::infinity();
    return std::sqrt(static_cast<double>(sub.basis.rows())) / d;
}

/// R(ω) = 1/J(ω) ∈ [0, 1]; 0 at an exact root.
inline double noise_correlation(const NoiseSubspace& sub, double omega) {
    const double d = noise_distance(sub, omega);
    if (is_exact_root(sub, d))
        return 0.0;
    return std::min(1.0, d / std::sqrt(static_cast<double>(sub.basis.rows())));
}

namespace detail {

/// Golden-section minimisation of `fn` on [lo, hi]; returns the best point seen.
template <class Fn>
std::pair<double, double> golden_section_min(Fn&& fn, double lo, double hi, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = fn(c), fd = fn(d);
    double best_x = fc <= fd ? c : d;
    double best_f = std::min(fc, fd);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fn(c);
            if (fc < best_f) { best_f = fc; best_x = c; }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fn(d);
            if (fd < best_f) { best_f = fd; best_x = d; }
        }
    }
    return {best_x, best_f};
}

} // namespace detail

/// The s largest strict local maxima of J on a uniform wrap-around grid,
/// each refined by golden-section search within ±1 grid cell. Ties are
/// broken by larger J, then smaller ω. If fewer than s maxima exist the
/// set is padded with the largest remaining grid values and `degraded` set.
inline PeakSet find_peaks(const NoiseSubspace& sub, int s, const MusicOptions& options = {}) {
    const Eigen::Index n = sub.basis.rows();
    const int grid = options.grid_size > 0 ? options.grid_size : default_grid_size(n);
    if (grid < 8 * n)
        throw Error(ErrorCode::InvalidConfig, "grid_size must be at least 8N");

    RVector omegas(grid);
    for (int i = 0; i < grid; ++i)
        omegas[i] = static_cast<double>(i) / grid;
    const RVector dist = noise_distances(sub, omegas);

    // Maximising J is minimising the noise distance.
    std::vector<int> maxima;
    for (int i = 0; i < grid; ++i) {
        const double left = dist[(i + grid - 1) % grid];
        const double right = dist[(i + 1) % grid];
        if (dist[i] < left && dist[i] < right)
            maxima.push_back(i);
    }
    auto better = [&](int a, int b) {
        if (dist[a] != dist[b])
            return dist[a] < dist[b];
        return a < b;
    };
    std::sort(maxima.begin(), maxima.end(), better);

    PeakSet peaks;
    peaks.grid_size = grid;
    peaks.found = static_cast<int>(maxima.size());
    std::vector<int> chosen(maxima.begin(), maxima.begin() + std::min<std::size_t>(s, maxima.size()));
    if (static_cast<int>(chosen.size()) < s) {
        peaks.degraded = true;
        std::vector<int> rest(grid);
        std::iota(rest.begin(), rest.end(), 0);
        std::sort(rest.begin(), rest.end(), better);
        for (int idx : rest) {
            if (static_cast<int>(chosen.size()) >= s)
                break;
            if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end())
                chosen.push_back(idx);
        }
    }

    const double cell = 1.0 / grid;
    std::vector<std::pair<double, double>> located;
    for (int idx : chosen) {
        double w = omegas[idx];
        double d = dist[idx];
        if (options.refine_tol > 0.0) {
            auto fn = [&](double x) { return noise_distance(sub, x); };
            auto [x, fx] = detail::golden_section_min(fn, w - cell, w + cell, options.refine_tol);
            if (fx <= d) {
                w = x;
                d = fx;
            }
        }
        const double j = is_exact_root(sub, d) ? std::numeric_limits<double>::infinity()
                                               : std::sqrt(static_cast<double>(n)) / d;
        located.emplace_back(wrap_unit(w), j);
    }
    peaks.refined = options.refine_tol > 0.0;
    std::sort(located.begin(), located.end());
    peaks.omegas.resize(static_cast<Eigen::Index>(located.size()));
    peaks.peak_values.resize(static_cast<Eigen::Index>(located.size()));
    for (std::size_t i = 0; i < located.size(); ++i) {
        peaks.omegas[static_cast<Eigen::Index>(i)] = located[i].first;
        peaks.peak_values[static_cast<Eigen::Index>(i)] = located[i].second;
    }
    return peaks;
}

/// Noise subspace of F followed by peak extraction.
inline PeakSet music(const CMatrix& f, int s, const MusicOptions& options = {}) {
    return find_peaks(noise_subspace(f, s), s, options);
}

} // namespace blindcal
