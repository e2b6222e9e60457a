#pragma once

// Evaluation modulo the trivial ambiguity (scale, global phase, and a linear
// phase ramp that translates every frequency).

#include <limits>
#include <queue>
#include <vector>

#include "blindcal/model.hpp"

namespace blindcal {

struct AlignmentResult {
    double c2_star = 0.0;  ///< radians; recovered frequencies are shifted by c2/2π
    Complex c_star{1.0, 0.0};
    double supp_error = 0.0;
    RVector cal_error_per_sensor;
    double cal_error_mean = 0.0;
};

inline double wrap_distance(double a, double b) {
    return torus_distance(a, b);
}

/// Symmetric Hausdorff distance on the torus between `truth` and `est + shift`.
inline double hausdorff_shifted(const RVector& truth, const RVector& est, double shift) {
    double forward = 0.0;
    for (Eigen::Index k = 0; k < est.size(); ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < truth.size(); ++j)
            best = std::min(best, wrap_distance(est[k] + shift, truth[j]));
        forward = std::max(forward, best);
    }
    double backward = 0.0;
    for (Eigen::Index j = 0; j < truth.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < est.size(); ++k)
            best = std::min(best, wrap_distance(est[k] + shift, truth[j]));
        backward = std::max(backward, best);
    }
    return std::max(forward, backward);
}

struct SupportAlignment {
    double supp_error = 0.0;
    double c2_star = 0.0; ///< in [0, 2π)
};

/// Minimises the Hausdorff distance over translations of `est`.
///
/// The objective is 1-Lipschitz in the shift, so after seeding with every
/// pairwise alignment ω_j − ω̂_k a Piyavskii branch-and-bound over the circle
/// closes the gap between the incumbent and the cone lower bounds to `tol`.
inline SupportAlignment supp_error(const RVector& truth, const RVector& est, double tol = 1e-13) {
    if (truth.size() == 0 || est.size() == 0)
        throw Error(ErrorCode::InvalidConfig, "support sets must be nonempty");

    std::vector<double> seeds;
    seeds.reserve(static_cast<std::size_t>(truth.size() * est.size()) + 64);
    for (Eigen::Index j = 0; j < truth.size(); ++j)
        for (Eigen::Index k = 0; k < est.size(); ++k)
            seeds.push_back(wrap_unit(truth[j] - est[k]));
    for (int i = 0; i < 64; ++i)
        seeds.push_back(i / 64.0);
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

    auto objective = [&](double t) { return hausdorff_shifted(truth, est, t); };
    auto nearer_zero = [](double a, double b) { return wrap_distance(a, 0.0) < wrap_distance(b, 0.0); };

    std::vector<double> values(seeds.size());
    double best_t = seeds.front();
    double best_f = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        values[i] = objective(seeds[i]);
        if (values[i] < best_f || (values[i] == best_f && nearer_zero(seeds[i], best_t))) {
            best_f = values[i];
            best_t = seeds[i];
        }
    }

    struct Interval {
        double a, b, fa, fb, bound;
        bool operator>(const Interval& o) const { return bound > o.bound; }
    };
    auto make = [](double a, double b, double fa, double fb) {
        return Interval{a, b, fa, fb, 0.5 * (fa + fb - (b - a))};
    };
    std::priority_queue<Interval, std::vector<Interval>, std::greater<>> queue;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const std::size_t next = (i + 1) % seeds.size();
        const double b = next == 0 ? seeds[0] + 1.0 : seeds[next];
        queue.push(make(seeds[i], b, values[i], values[next]));
    }

    for (int iter = 0; iter < 1000000 && !queue.empty(); ++iter) {
        const Interval top = queue.top();
        if (top.bound >= best_f - tol)
            break;
        queue.pop();
        double x = 0.5 * (top.a + top.b) + 0.5 * (top.fa - top.fb);
        x = std::clamp(x, top.a, top.b);
        if (x - top.a < 1e-16 || top.b - x < 1e-16)
            continue;
        const double fx = objective(x);
        if (fx < best_f || (fx == best_f && nearer_zero(x, best_t))) {
            best_f = fx;
            best_t = wrap_unit(x);
        }
        queue.push(make(top.a, x, top.fa, fx));
        queue.push(make(x, top.b, fx, top.fb));
    }
    return SupportAlignment{best_f, kTwoPi * wrap_unit(best_t)};
}

inline SupportAlignment supp_error(const FrequencySet& truth, const RVector& est) {
    return supp_error(truth.omegas, est);
}

/// Relative gain error after removing the ramp e^{inc2} and the optimal
/// complex scale C* (closed-form least squares).
inline AlignmentResult cal_error(const CVector& g_true, const CVector& g_hat, double c2_star) {
    if (g_true.size() != g_hat.size())
        throw Error(ErrorCode::DimensionMismatch, "gain vectors differ in length");
    AlignmentResult out;
    out.c2_star = c2_star;
    const Eigen::Index n = g_true.size();
    CVector aligned(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(g_true[k]) == 0.0)
            throw Error(ErrorCode::ZeroTrueGain, "true gain " + std::to_string(k) + " is zero");
        aligned[k] = g_hat[k] * std::polar(1.0, -c2_star * static_cast<double>(k));
    }
    out.c_star = g_true.dot(aligned) / g_true.squaredNorm(); // Eigen's dot conjugates the left operand
    out.cal_error_per_sensor.resize(n);
    for (Eigen::Index k = 0; k < n; ++k)
        out.cal_error_per_sensor[k] = std::abs(aligned[k] - out.c_star * g_true[k]) / std::abs(g_true[k]);
    out.cal_error_mean = out.cal_error_per_sensor.mean();
    return out;
}

/// Support alignment followed by calibration error at the optimal translation.
inline AlignmentResult evaluate(const ProblemInstance& truth, const CVector& g_hat, const RVector& omegas_hat) {
    const SupportAlignment supp = supp_error(truth.freq.omegas, omegas_hat);
    AlignmentResult out = cal_error(truth.cal.g, g_hat, supp.c2_star);
    out.supp_error = supp.supp_error;
    return out;
}

/// Support recovered when the aligned Hausdorff distance is at most 0.2/N.
inline bool success_indicator(double supp_error, int N) {
    return supp_error <= 0.2 / static_cast<double>(N);
}

} // namespace blindcal
