#include "support.hpp"

using namespace blindcal;
using namespace testing_support;

namespace {

struct Exact {
    ProblemInstance inst;
    CVector g;
    CVector f;
    CMatrix r;
};

Exact exact_problem(std::uint64_t seed, int N, int s) {
    Exact e;
    e.inst = random_instance(seed, N, s);
    e.g = e.inst.cal.g;
    e.f = ground_truth_f(e.inst.freq, N).f;
    e.r = exact_covariance(e.inst);
    return e;
}

/// Directional derivative of L̃ via central differences against 2·Re⟨Δ, ∇⟩.
double fd_relative_error(const RegularizedObjective& fn, const CVector& g, const CVector& f, const CVector& dg,
                         const CVector& df, double h = 1e-5) {
    const double fd = (fn.value(g + h * dg, f + h * df) - fn.value(g - h * dg, f - h * df)) / (2 * h);
    const Gradient grad = fn.gradient(g, f);
    const double analytic = 2.0 * (dg.dot(grad.g) + df.dot(grad.f)).real();
    return std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-8);
}

} // namespace

TEST(N0, IdentityCovariance) {
    EXPECT_NEAR(estimate_n0(CMatrix::Identity(7, 7)), 7.0, 1e-14);
}

TEST(N0, ExactIdentityAndHomogeneity) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto e = exact_problem(seed, 16, 5);
        const double want = e.g.squaredNorm() * e.f.norm();
        const double n0 = estimate_n0(e.r);
        EXPECT_NEAR(n0, want, 1e-10 * want);
        EXPECT_NEAR(estimate_n0(4.0 * e.r), 4.0 * n0, 1e-12 * n0);
    }
}

TEST(Objective, ZeroAtTruthAndAlongAmbiguity) {
    Rng rng(71);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto e = exact_problem(seed, 12, 4);
        EXPECT_LE(objective(e.g, e.f, e.r), 1e-18 * std::max(1.0, e.r.squaredNorm()));
        const double c0 = rng.uniform(0.5, 2), c1 = rng.uniform(0, kTwoPi), c2 = rng.uniform(0, kTwoPi);
        CVector g2(12), f2(12);
        for (int n = 0; n < 12; ++n) {
            g2[n] = c0 * std::polar(1.0, c1 + n * c2) * e.g[n];
            f2[n] = std::polar(1.0 / (c0 * c0), -n * c2) * e.f[n];
        }
        EXPECT_LE(objective(g2, f2, e.r), 1e-18 * std::max(1.0, e.r.squaredNorm()));
    }
}

TEST(Objective, FlatAlongAmbiguityAtRandomPoints) {
    Rng rng(72);
    for (int trial = 0; trial < 10; ++trial) {
        const CVector g = random_cvector(rng, 8);
        const CVector f = random_f(rng, 8);
        const CMatrix r = sandwich(g, toeplitz(ToeplitzSpec(f)), g);
        const CVector gq = random_cvector(rng, 8);
        const CVector fq = random_f(rng, 8);
        const double c0 = rng.uniform(0.5, 2), c1 = rng.uniform(0, kTwoPi), c2 = rng.uniform(0, kTwoPi);
        CVector g2(8), f2(8);
        for (int n = 0; n < 8; ++n) {
            g2[n] = c0 * std::polar(1.0, c1 + n * c2) * gq[n];
            f2[n] = std::polar(1.0 / (c0 * c0), -n * c2) * fq[n];
        }
        // The data term is invariant when R̂ is transformed consistently.
        CVector gr(8), fr(8);
        for (int n = 0; n < 8; ++n) {
            gr[n] = c0 * std::polar(1.0, c1 + n * c2) * g[n];
            fr[n] = std::polar(1.0 / (c0 * c0), -n * c2) * f[n];
        }
        const CMatrix r2 = sandwich(gr, toeplitz(ToeplitzSpec(fr)), gr);
        EXPECT_LE((r2 - r).norm(), 1e-10 * r.norm());
        const double v = objective(gq, fq, r);
        EXPECT_NEAR(objective(g2, f2, r), v, 1e-10 * v);
    }
}

TEST(Objective, ZeroArgumentsGiveDataNorm) {
    Rng rng(73);
    const CMatrix r = random_hermitian(rng, 6);
    EXPECT_NEAR(objective(CVector::Zero(6), CVector::Zero(6), r), r.squaredNorm(), 1e-12);
}

TEST(Objective, FastMatchesDense) {
    Rng rng(74);
    for (int trial = 0; trial < 10; ++trial) {
        const CVector g = random_cvector(rng, 9);
        const CVector f = random_f(rng, 9);
        const CMatrix r = random_hermitian(rng, 9);
        const double dense = objective_dense(g, f, r);
        EXPECT_NEAR(objective(g, f, r), dense, 1e-12 * dense);
        const Gradient a = data_gradient(g, f, r);
        const Gradient b = data_gradient_dense(g, f, r);
        EXPECT_LE((a.g - b.g).norm(), 1e-11 * b.g.norm());
        EXPECT_LE((a.f - b.f).norm(), 1e-11 * b.f.norm());
    }
}

TEST(Penalty, DeadZone) {
    Rng rng(75);
    const double n0 = 3.0;
    for (int trial = 0; trial < 20; ++trial) {
        CVector g = random_cvector(rng, 5);
        CVector f = random_cvector(rng, 5);
        g *= std::sqrt(rng.uniform(0, 1) * std::sqrt(2 * n0)) / g.norm();
        f *= std::sqrt(rng.uniform(0, 1) * 2 * n0) / f.norm();
        EXPECT_EQ(penalty(g, f, n0, 10.0), 0.0);
    }
}

TEST(Penalty, DoubledFNorm) {
    const double n0 = 2.5, rho = 7.0;
    CVector f = CVector::Zero(4);
    f[0] = std::sqrt(4 * n0);
    EXPECT_NEAR(penalty(CVector::Constant(4, 1e-3), f, n0, rho), rho, 1e-12);
}

TEST(Penalty, ScalarOracle) {
    Rng rng(76);
    for (int trial = 0; trial < 20; ++trial) {
        const double n0 = rng.uniform(0.5, 5), rho = rng.uniform(1, 10);
        const CVector g = random_cvector(rng, 6, 2.0);
        const CVector f = random_cvector(rng, 6, 2.0);
        double gs = 0, fs = 0;
        for (int i = 0; i < 6; ++i) {
            gs += std::norm(g[i]);
            fs += std::norm(f[i]);
        }
        const double a = std::max(fs / (2 * n0) - 1, 0.0), b = std::max(gs / std::sqrt(2 * n0) - 1, 0.0);
        EXPECT_NEAR(penalty(g, f, n0, rho), rho * (a * a + b * b), 1e-12 * (1 + rho * (a * a + b * b)));
    }
}

TEST(Gradient, ZeroAtExactMinimiser) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto e = exact_problem(seed, 16, 4);
        const double n0 = estimate_n0(e.r);
        // Put the truth inside the dead zone with the gauge used by the initialiser.
        const double c = std::pow(n0, 0.25) / e.g.norm();
        const CVector g = c * e.g;
        const CVector f = e.f / (c * c);
        const Gradient grad = gradient(g, f, e.r, n0, default_rho(n0));
        EXPECT_EQ(penalty(g, f, n0, default_rho(n0)), 0.0);
        EXPECT_LE(grad.norm(), 1e-10 * std::max(1.0, e.r.norm()));
    }
}

TEST(Gradient, ZeroSpectrum) {
    Rng rng(77);
    const CVector g = random_cvector(rng, 5);
    const CMatrix r = random_hermitian(rng, 5);
    const Gradient grad = data_gradient(g, CVector::Zero(5), r);
    EXPECT_LE(grad.g.norm(), 1e-15);
    CVector want = toeplitz_adjoint((g.conjugate().asDiagonal() * (-r) * g.asDiagonal()).conjugate());
    want[0] *= 0.5;
    EXPECT_LE((grad.f - want).norm(), 1e-12 * want.norm());
}

TEST(Gradient, FiniteDifferenceAtRandomPoints) {
    Rng rng(78);
    int points = 0;
    for (int N : {4, 8}) {
        for (int trial = 0; trial < 50; ++trial) {
            const CVector g = random_cvector(rng, N);
            const CVector f = random_f(rng, N);
            const CMatrix r = random_hermitian(rng, N);
            const double n0 = rng.uniform(0.2, 2.0);
            const RegularizedObjective fn{&r, n0, default_rho(n0)};
            CVector df = random_cvector(rng, N);
            df[0] = Complex(df[0].real(), 0.0);
            EXPECT_LE(fd_relative_error(fn, g, f, random_cvector(rng, N), df), 1e-5) << "N=" << N;
            ++points;
        }
    }
    EXPECT_EQ(points, 100);
}

TEST(Initialize, ExactInputIsOptimal) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto e = exact_problem(seed, 16, 4);
        DenoisedCovariance d;
        d.r_hat = e.r;
        const auto alg = run_partial_algebraic(d);
        const double n0 = estimate_n0(e.r);
        const OptimState st = initialize(alg, n0);
        EXPECT_LE(objective(st.g, st.f, e.r), 1e-16 * std::max(1.0, e.r.squaredNorm()));
        EXPECT_EQ(st.f[0].imag(), 0.0);
        EXPECT_NEAR(st.g.squaredNorm(), std::sqrt(n0), 1e-12 * n0);
        EXPECT_NEAR(st.f.norm(), std::sqrt(n0), 1e-12 * n0);
    }
}

TEST(Initialize, PerDiagonalAveraging) {
    Rng rng(79);
    AlgebraicOutput alg;
    alg.g_hat.g = random_cvector(rng, 6);
    alg.f_matrix = random_hermitian(rng, 6);
    const OptimState st = initialize(alg, 2.0);
    CVector fbar(6);
    for (int k = 0; k < 6; ++k) {
        Complex acc = 0;
        for (int n = k; n < 6; ++n)
            acc += alg.f_matrix(n, n - k);
        fbar[k] = acc / double(6 - k);
    }
    fbar *= std::sqrt(2.0) / fbar.norm();
    EXPECT_LE((st.f - fbar).norm(), 1e-14);
    EXPECT_LE((st.g - std::pow(2.0, 0.25) * alg.g_hat.g / alg.g_hat.g.norm()).norm(), 1e-14);
}

TEST(Initialize, ZeroVectorRejected) {
    AlgebraicOutput alg;
    alg.g_hat.g = CVector::Zero(4);
    alg.f_matrix = CMatrix::Identity(4, 4);
    EXPECT_THROW(initialize(alg, 1.0), Error);
}

TEST(Backtracking, ScalarQuadratic) {
    // L(z) = z² from z = 1: p = −2, η̄ = L/|∇L| = 1/2; the first trial step is
    // θη̄ = 1/4, giving (1 − 2η)² = 1/4 ≤ 1 − 0.5·η·4 = 1/2.
    const double z = 1.0, grad = 2.0;
    auto phi = [&](double eta) { return (z - eta * grad) * (z - eta * grad); };
    const auto res = backtracking_search(phi, 1.0, grad * grad, 1.0 / grad, 0.5, 0.5, 1e-4);
    ASSERT_TRUE(res.accepted);
    EXPECT_DOUBLE_EQ(res.eta, 0.25);
    EXPECT_DOUBLE_EQ(res.value, 0.25);
    EXPECT_EQ(res.evaluations, 1);
}

TEST(Backtracking, ShrinksUntilSufficientDecrease) {
    // Hand trace on (1 − 2η)² with c = 0.5 from η̄ = 8: trials 4, 2 and 1 give
    // 49, 9 and 1 against thresholds −7, −3 and −1; η = 0.5 gives 0 ≤ 0.
    auto phi = [](double eta) { return (1 - 2 * eta) * (1 - 2 * eta); };
    const auto res = backtracking_search(phi, 1.0, 4.0, 8.0, 0.5, 0.5, 1e-4);
    ASSERT_TRUE(res.accepted);
    EXPECT_DOUBLE_EQ(res.eta, 0.5);
    EXPECT_EQ(res.evaluations, 4);
}

TEST(Backtracking, UnderflowReported) {
    auto phi = [](double) { return 10.0; };
    const auto res = backtracking_search(phi, 1.0, 1.0, 1.0, 0.5, 0.5, 1e-4);
    EXPECT_FALSE(res.accepted);
    EXPECT_LT(res.eta, 1e-4);
}

TEST(Backtracking, ZeroGradientRejected) {
    CMatrix r = CMatrix::Identity(3, 3);
    const RegularizedObjective fn{&r, 1.0, 1.0};
    OptimState st;
    st.g = CVector::Ones(3);
    st.f = CVector::Zero(3);
    st.f[0] = 1.0;
    st.objective_value = fn.value(st.g, st.f);
    const Gradient grad{CVector::Zero(3), CVector::Zero(3)};
    EXPECT_THROW(backtracking_step(st, grad, OptimConfig{}, fn), Error);
}

TEST(Descent, ExactInputConverges) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = random_instance(seed, 16, 4);
        const auto res = run_optimizer(exact_covariance(inst), 4);
        EXPECT_LE(res.final_objective, 1e-14);
        const auto m = evaluate(inst, res.g_hat.g, res.peaks.omegas);
        EXPECT_LE(m.cal_error_mean, 1e-7);
        EXPECT_LE(m.supp_error, 1e-6);
    }
}

TEST(Descent, NoisyRunInvariants) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto inst = random_instance(40 + seed, 32, 8, 2.0, 0.5);
        Rng rng(Rng(inst.seed).split(1));
        const CMatrix cov = empirical_covariance(sample_snapshots(inst, 300, rng));
        const auto alg = run_partial_algebraic(cov, 8, 300);
        const double n0 = estimate_n0(alg.denoised.r_hat);
        const auto run = descend(initialize(alg, n0), alg.denoised.r_hat, n0, OptimConfig{});
        ASSERT_GE(run.trace.size(), 2u);
        double min_grad = run.trace.front().grad_norm;
        for (std::size_t i = 0; i < run.trace.size(); ++i) {
            const TraceRow& t = run.trace[i];
            EXPECT_LE(t.g_norm_sq, 2 * std::sqrt(n0) + 1e-9);
            EXPECT_LE(t.f_norm, 2 * std::sqrt(n0) + 1e-9);
            EXPECT_LE(std::abs(t.imag_f0), 1e-10);
            if (i > 0)
                EXPECT_LT(t.objective, run.trace[i - 1].objective);
            min_grad = std::min(min_grad, t.grad_norm);
        }
        EXPECT_DOUBLE_EQ(min_grad, run.min_grad_norm);
        EXPECT_NE(run.termination, Termination::MaxIterations);
    }
}

TEST(Descent, OptimiserNoWorseThanAlgebraicOnAverage) {
    double alg_sum = 0, opt_sum = 0;
    for (int trial = 0; trial < 8; ++trial) {
        const auto inst = random_instance(600 + trial, 32, 8, 2.0, 0.5);
        Rng rng(Rng(inst.seed).split(2));
        const auto alg = run_partial_algebraic(empirical_covariance(sample_snapshots(inst, 500, rng)), 8, 500);
        const auto a = calibrate_algebraic(alg, 8);
        const auto o = run_optimizer(alg, 8);
        alg_sum += evaluate(inst, a.g_hat.g, a.peaks.omegas).cal_error_mean;
        opt_sum += evaluate(inst, o.g_hat.g, o.peaks.omegas).cal_error_mean;
    }
    EXPECT_LE(opt_sum, alg_sum);
}

TEST(Descent, FixedStepIsMonotone) {
    const auto inst = random_instance(77, 16, 4, 2.0, 0.5);
    Rng rng(5);
    const auto alg = run_partial_algebraic(empirical_covariance(sample_snapshots(inst, 400, rng)), 4, 400);
    const double n0 = estimate_n0(alg.denoised.r_hat);
    OptimConfig cfg;
    cfg.step_rule = StepRule::Fixed;
    cfg.max_iters = 200;
    cfg.grad_tol = 1e-300;
    const auto run = descend(initialize(alg, n0), alg.denoised.r_hat, n0, cfg);
    ASSERT_EQ(run.trace.size(), 201u);
    for (std::size_t i = 1; i < run.trace.size(); ++i)
        EXPECT_LE(run.trace[i].objective, run.trace[i - 1].objective);
    EXPECT_NEAR(run.trace[1].eta, 1.0 / lipschitz_bound(n0, 0.0, default_rho(n0)), 1e-18);
}

TEST(Lipschitz, ScalarTranscription) {
    const double rho = 3.0 * kPenaltyFactor;
    EXPECT_NEAR(lipschitz_bound(1.0, 0.0, rho), 166.0 + 8.0 + 12.0 * rho, 1e-10);
    EXPECT_NEAR(kPenaltyFactor, 1.0 / ((std::sqrt(2.0) - 1) * (std::sqrt(2.0) - 1)), 1e-14);
    EXPECT_DOUBLE_EQ(max_fixed_step(4.0), 0.5);
}

TEST(Lipschitz, MonotoneOnGrid) {
    const double n0s[3] = {0.5, 2.0, 9.0};
    const double residuals[3] = {0.0, 1.0, 5.0};
    const double rhos[3] = {1.0, 10.0, 100.0};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                const double base = lipschitz_bound(n0s[a], residuals[b], rhos[c]);
                if (b < 2)
                    EXPECT_LE(base, lipschitz_bound(n0s[a], residuals[b + 1], rhos[c]));
                if (c < 2)
                    EXPECT_LE(base, lipschitz_bound(n0s[a], residuals[b], rhos[c + 1]));
                // With ρ tied to n̂₀ by the default rule the bound grows with n̂₀;
                // at a fixed ρ the last term 12ρ/min(n̂₀, √n̂₀) falls instead.
                if (a < 2)
                    EXPECT_LE(lipschitz_bound(n0s[a], residuals[b], default_rho(n0s[a])),
                              lipschitz_bound(n0s[a + 1], residuals[b], default_rho(n0s[a + 1])));
            }
}

TEST(Config, Validation) {
    OptimConfig cfg;
    cfg.theta = 1.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.c = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_NO_THROW(OptimConfig{}.validate());
    EXPECT_NEAR(default_rho(2.0), 3.0 * kPenaltyFactor * 2.0, 1e-14);
}
