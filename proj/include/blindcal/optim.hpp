#pragma once

// Joint gain/spectrum refinement by Wirtinger gradient descent on
//   L̃(g, f) = ‖diag(g)·T(f)·diag(conj g) − R̂‖_F² + G(g, f)
// where the penalty G keeps iterates inside
//   {‖g‖² ≤ 2√n̂₀, ‖f‖ ≤ 2√n̂₀},  n̂₀ ≈ ‖g‖²·‖f‖.

#include <functional>
#include <optional>
#include <vector>

#include "blindcal/algebraic.hpp"
#include "blindcal/music.hpp"

namespace blindcal {

enum class Termination { GradientTolerance, StepUnderflow, MaxIterations };

constexpr std::string_view to_string(Termination t) noexcept {
    switch (t) {
    case Termination::GradientTolerance: return "gradient_tolerance";
    case Termination::StepUnderflow: return "step_underflow";
    case Termination::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

enum class StepRule { Backtracking, Fixed };

/// (√2 − 1)⁻², the factor in the penalty-weight rule.
inline const double kPenaltyFactor = 1.0 / ((std::sqrt(2.0) - 1.0) * (std::sqrt(2.0) - 1.0));

struct OptimConfig {
    double rho = 0.0;      ///< 0 selects 3(√2−1)⁻²·n̂₀
    double theta = 0.5;    ///< backtracking shrink factor
    double c = 0.5;        ///< sufficient-decrease constant
    double eta_min = 1e-4; ///< smallest trial step before giving up
    int max_iters = 5000;
    double grad_tol = 0.0; ///< 0 selects 1e-9·max(1, L̃ at the initial point)
    StepRule step_rule = StepRule::Backtracking;
    double fixed_eta = 0.0; ///< StepRule::Fixed; 0 selects 1/C_Lip with zero residual
    bool record_trace = true;
    MusicOptions music;

    void validate() const {
        if (!(theta > 0.0 && theta < 1.0))
            throw Error(ErrorCode::InvalidConfig, "theta must lie in (0,1)");
        if (!(c > 0.0 && c < 1.0))
            throw Error(ErrorCode::InvalidConfig, "c must lie in (0,1)");
        if (!(eta_min > 0.0))
            throw Error(ErrorCode::InvalidConfig, "eta_min must be positive");
        if (max_iters < 0)
            throw Error(ErrorCode::InvalidConfig, "max_iters must be nonnegative");
    }
};

struct OptimState {
    CVector g;
    CVector f;
    int iterate_index = 0;
    double objective_value = 0.0;
    double gradient_norm = 0.0;
};

struct Gradient {
    CVector g;
    CVector f;

    double squared_norm() const { return g.squaredNorm() + f.squaredNorm(); }
    double norm() const { return std::sqrt(squared_norm()); }
};

struct TraceRow {
    int iter = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    double eta = 0.0;
    double g_norm_sq = 0.0;
    double f_norm = 0.0;
    double imag_f0 = 0.0;
};

// ---------------------------------------------------------------------------
// n̂₀ and the penalty

/// n̂₀ = (Σ r̂_nn)·sqrt(1 + Σ_k (1/(N−k))·Σ_n |r̂_{n+k,n}|²/(r̂_{n+k,n+k}·r̂_nn)).
/// Equals ‖g‖²·‖f‖ for an exact covariance.
inline double estimate_n0(const CMatrix& r) {
    const Eigen::Index n = r.rows();
    RVector d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d[i] = r(i, i).real();
        if (!(d[i] > 0.0))
            throw Error(ErrorCode::NonPositiveDiagonal, "diagonal entry " + std::to_string(i) + " is not positive");
    }
    double ratio = 0.0;
    for (Eigen::Index k = 1; k < n; ++k) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i + k < n; ++i)
            acc += std::norm(r(i + k, i)) / (d[i + k] * d[i]);
        ratio += acc / static_cast<double>(n - k);
    }
    return d.sum() * std::sqrt(1.0 + ratio);
}

inline double default_rho(double n0) {
    return 3.0 * kPenaltyFactor * n0;
}

/// The full weight rule, usable only when the covariance error is known.
inline double rho_with_residual(double n0, double residual_frobenius) {
    return kPenaltyFactor * (3.0 * n0 + residual_frobenius);
}

namespace detail {
inline double g0(double z) {
    const double t = std::max(z - 1.0, 0.0);
    return t * t;
}
inline double g0_prime(double z) {
    return 2.0 * std::max(z - 1.0, 0.0);
}
} // namespace detail

/// ρ·[G₀(‖f‖²/(2n̂₀)) + G₀(‖g‖²/√(2n̂₀))] with G₀(z) = max(z−1, 0)².
inline double penalty(const CVector& g, const CVector& f, double n0, double rho) {
    return rho * (detail::g0(f.squaredNorm() / (2.0 * n0)) + detail::g0(g.squaredNorm() / std::sqrt(2.0 * n0)));
}

// ---------------------------------------------------------------------------
// Data-fit term

/// ‖diag(g)·T(f)·diag(conj g) − R̂‖_F² (dense reference evaluation).
inline double objective_dense(const CVector& g, const CVector& f, const CMatrix& r) {
    return (sandwich(g, toeplitz(ToeplitzSpec(f)), g) - r).squaredNorm();
}

/// Same value using only the lower triangle; valid for Hermitian R̂ and real f₀.
inline double objective(const CVector& g, const CVector& f, const CMatrix& r) {
    const Eigen::Index n = g.size();
    double diag = 0.0;
    double off = 0.0;
    for (Eigen::Index col = 0; col < n; ++col) {
        const Complex gc = std::conj(g[col]);
        diag += std::norm(g[col] * f[0] * gc - r(col, col));
        for (Eigen::Index row = col + 1; row < n; ++row)
            off += std::norm(g[row] * f[row - col] * gc - r(row, col));
    }
    return diag + 2.0 * off;
}

/// Wirtinger gradient ∂L/∂conj(z) of the data-fit term, transcribed with
/// dense matrices:
///   ∇_g L = 2·diag[conj(T(f)*·diag(conj g)·E)],
///   ∇_f L = T^a[conj(diag(conj g)·E·diag(g))],  E = diag(g)T(f)diag(conj g) − R̂,
/// except that the f₀ entry is halved: f₀ occupies the diagonal of T(f) once,
/// whereas each f_k (k ≥ 1) appears both below and (conjugated) above it.
inline Gradient data_gradient_dense(const CVector& g, const CVector& f, const CMatrix& r) {
    const CMatrix t = toeplitz(ToeplitzSpec(f));
    const CMatrix e = sandwich(g, t, g) - r;
    Gradient grad;
    const CMatrix inner = t.adjoint() * g.conjugate().asDiagonal() * e;
    grad.g = 2.0 * inner.diagonal().conjugate();
    const CMatrix x = (g.conjugate().asDiagonal() * e * g.asDiagonal()).conjugate();
    grad.f = toeplitz_adjoint(x);
    grad.f[0] *= 0.5;
    return grad;
}

/// O(N²) evaluation of the same gradient from the lower triangle of E.
inline Gradient data_gradient(const CVector& g, const CVector& f, const CMatrix& r) {
    const Eigen::Index n = g.size();
    Gradient grad{CVector::Zero(n), CVector::Zero(n)};
    for (Eigen::Index col = 0; col < n; ++col) {
        const Complex gc = std::conj(g[col]);
        const Complex e_diag = g[col] * f[0] * gc - r(col, col);
        const double e0 = e_diag.real();
        grad.g[col] += 2.0 * f[0] * g[col] * e0;
        grad.f[0] += std::norm(g[col]) * e0;
        for (Eigen::Index row = col + 1; row < n; ++row) {
            const Eigen::Index k = row - col;
            const Complex e = g[row] * f[k] * gc - r(row, col); // E[row][col]; E[col][row] = conj(e)
            // ∇g[col] gets T[row][col]·g[row]·conj(E[row][col]); ∇g[row] gets T[col][row]·g[col]·conj(E[col][row]).
            grad.g[col] += 2.0 * f[k] * g[row] * std::conj(e);
            grad.g[row] += 2.0 * std::conj(f[k]) * g[col] * e;
            grad.f[k] += 2.0 * std::conj(g[row]) * g[col] * e;
        }
    }
    grad.f[0] = Complex(grad.f[0].real(), 0.0);
    return grad;
}

inline Gradient penalty_gradient(const CVector& g, const CVector& f, double n0, double rho) {
    const double root = std::sqrt(2.0 * n0);
    Gradient grad;
    grad.g = (rho / root) * detail::g0_prime(g.squaredNorm() / root) * g;
    grad.f = (rho / (2.0 * n0)) * detail::g0_prime(f.squaredNorm() / (2.0 * n0)) * f;
    return grad;
}

/// L̃ = L + G bound to a covariance estimate and penalty parameters.
struct RegularizedObjective {
    const CMatrix* r = nullptr;
    double n0 = 1.0;
    double rho = 0.0;

    double value(const CVector& g, const CVector& f) const { return objective(g, f, *r) + penalty(g, f, n0, rho); }

    Gradient gradient(const CVector& g, const CVector& f) const {
        Gradient grad = data_gradient(g, f, *r);
        const Gradient pen = penalty_gradient(g, f, n0, rho);
        grad.g += pen.g;
        grad.f += pen.f;
        return grad;
    }
};

inline Gradient gradient(const CVector& g, const CVector& f, const CMatrix& r, double n0, double rho) {
    return RegularizedObjective{&r, n0, rho}.gradient(g, f);
}

// ---------------------------------------------------------------------------
// Initialisation

/// g⁰ = n̂₀^{1/4}·ĝ/‖ĝ‖ and f⁰ = √n̂₀·f̄/‖f̄‖ where f̄_k averages the k-th
/// sub-diagonal of F̂.
inline OptimState initialize(const AlgebraicOutput& alg, double n0) {
    OptimState st;
    st.g = alg.g_hat.g;
    st.f = average_subdiagonals(alg.f_matrix).f;
    const double gn = st.g.norm();
    const double fn = st.f.norm();
    if (!(gn > 0.0) || !(fn > 0.0))
        throw Error(ErrorCode::ZeroInitialVector, "algebraic estimate has a zero vector");
    st.g *= std::pow(n0, 0.25) / gn;
    st.f *= std::sqrt(n0) / fn;
    st.f[0] = Complex(st.f[0].real(), 0.0);
    return st;
}

// ---------------------------------------------------------------------------
// Step-size selection

struct LineSearchResult {
    double eta = 0.0;
    double value = 0.0;
    int evaluations = 0;
    bool accepted = false;
};

/// Backtracking with sufficient decrease. `phi(η)` evaluates the objective at
/// z + η·p. Starting from η = η̄ the step is shrunk (η ← θη) before each test
/// until phi(η) ≤ f(z) − c·η·‖p‖²; gives up once η < eta_min.
template <class Phi>
LineSearchResult backtracking_search(Phi&& phi, double value_at_z, double p_squared_norm, double eta_bar,
                                     double theta, double c, double eta_min) {
    LineSearchResult res;
    double eta = eta_bar;
    for (;;) {
        eta *= theta;
        if (!(eta >= eta_min)) {
            res.eta = eta;
            return res;
        }
        const double v = phi(eta);
        ++res.evaluations;
        if (v <= value_at_z - c * eta * p_squared_norm) {
            res.eta = eta;
            res.value = v;
            res.accepted = true;
            return res;
        }
    }
}

struct StepOutcome {
    double eta = 0.0;
    OptimState state;
    Gradient grad;
};

/// One descent step along p = −∇L̃ with η̄ = L̃(z)/‖∇L̃(z)‖.
/// Throws StepUnderflow (a termination signal) when no step ≥ eta_min is
/// accepted.
inline StepOutcome backtracking_step(const OptimState& state, const Gradient& grad, const OptimConfig& config,
                                     const RegularizedObjective& fn) {
    const double gnorm_sq = grad.squared_norm();
    if (!(gnorm_sq > 0.0))
        throw Error(ErrorCode::InvalidConfig, "backtracking needs a nonzero gradient");
    const double eta_bar = state.objective_value / std::sqrt(gnorm_sq);
    auto phi = [&](double eta) { return fn.value(state.g - eta * grad.g, state.f - eta * grad.f); };
    const LineSearchResult ls =
        backtracking_search(phi, state.objective_value, gnorm_sq, eta_bar, config.theta, config.c, config.eta_min);
    if (!ls.accepted)
        throw Error(ErrorCode::StepUnderflow, "step fell below eta_min");
    StepOutcome out;
    out.eta = ls.eta;
    out.state.g = state.g - ls.eta * grad.g;
    out.state.f = state.f - ls.eta * grad.f;
    out.state.iterate_index = state.iterate_index + 1;
    out.state.objective_value = ls.value;
    out.grad = fn.gradient(out.state.g, out.state.f);
    out.state.gradient_norm = out.grad.norm();
    return out;
}

/// C_Lip = 166·n̂₀·m + 8n̂₀ + 16·m·‖R^y − R̂^y‖_F + 12ρ/min(n̂₀, √n̂₀),
/// m = max(√n̂₀, n̂₀^{1/4}).
inline double lipschitz_bound(double n0, double residual_frobenius, double rho) {
    const double m = std::max(std::sqrt(n0), std::pow(n0, 0.25));
    return 166.0 * n0 * m + 8.0 * n0 + 16.0 * m * residual_frobenius + 12.0 * rho / std::min(n0, std::sqrt(n0));
}

/// Largest step size covered by the convergence guarantee, 2/C_Lip.
inline double max_fixed_step(double c_lip) {
    return 2.0 / c_lip;
}

// ---------------------------------------------------------------------------
// Driver

struct DescentResult {
    OptimState state;
    std::vector<TraceRow> trace;
    Termination termination = Termination::MaxIterations;
    double rho = 0.0;
    double grad_tol = 0.0;
    double min_grad_norm = 0.0;
};

/// Gradient descent from `init` until the gradient tolerance, a step
/// underflow, or the iteration cap.
inline DescentResult descend(const OptimState& init, const CMatrix& r_hat, double n0, const OptimConfig& config) {
    config.validate();
    DescentResult out;
    out.rho = config.rho > 0.0 ? config.rho : default_rho(n0);
    const RegularizedObjective fn{&r_hat, n0, out.rho};

    OptimState st = init;
    st.iterate_index = 0;
    st.objective_value = fn.value(st.g, st.f);
    Gradient grad = fn.gradient(st.g, st.f);
    st.gradient_norm = grad.norm();
    out.grad_tol = config.grad_tol > 0.0 ? config.grad_tol : 1e-9 * std::max(1.0, st.objective_value);
    out.min_grad_norm = st.gradient_norm;

    auto record = [&](double eta) {
        if (!config.record_trace)
            return;
        out.trace.push_back(TraceRow{st.iterate_index, st.objective_value, st.gradient_norm, eta, st.g.squaredNorm(),
                                     st.f.norm(), st.f[0].imag()});
    };
    record(0.0);

    const double fixed_eta = config.fixed_eta > 0.0 ? config.fixed_eta : 1.0 / lipschitz_bound(n0, 0.0, out.rho);
    out.termination = Termination::MaxIterations;
    for (int it = 0; it < config.max_iters; ++it) {
        if (st.gradient_norm <= out.grad_tol) {
            out.termination = Termination::GradientTolerance;
            break;
        }
        double eta = 0.0;
        if (config.step_rule == StepRule::Backtracking) {
            try {
                StepOutcome step = backtracking_step(st, grad, config, fn);
                eta = step.eta;
                st = std::move(step.state);
                grad = std::move(step.grad);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::StepUnderflow)
                    throw;
                out.termination = Termination::StepUnderflow;
                break;
            }
        } else {
            eta = fixed_eta;
            st.g -= eta * grad.g;
            st.f -= eta * grad.f;
            ++st.iterate_index;
            st.objective_value = fn.value(st.g, st.f);
            grad = fn.gradient(st.g, st.f);
            st.gradient_norm = grad.norm();
        }
        out.min_grad_norm = std::min(out.min_grad_norm, st.gradient_norm);
        record(eta);
    }
    if (out.termination == Termination::MaxIterations && st.gradient_norm <= out.grad_tol)
        out.termination = Termination::GradientTolerance;
    out.state = std::move(st);
    return out;
}

} // namespace blindcal
