#include "support.hpp"

using namespace blindcal;
using namespace testing_support;

namespace {

RVector one(double w) {
    RVector v(1);
    v << w;
    return v;
}

FrequencySet single(double w, double gamma) {
    FrequencySet fs;
    fs.omegas = one(w);
    fs.gammas = one(gamma);
    return fs;
}

} // namespace

TEST(Steering, ZeroFrequency) {
    const CMatrix a = steering_matrix(one(0.0), 4);
    for (int n = 0; n < 4; ++n)
        EXPECT_NEAR(std::abs(a(n, 0) - Complex(0.5, 0.0)), 0.0, 1e-15);
}

TEST(Steering, HalfFrequencyAlternates) {
    const CMatrix a = steering_matrix(one(0.5), 2);
    EXPECT_NEAR(std::abs(a(0, 0) - Complex(1 / std::sqrt(2.0))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(a(1, 0) - Complex(-1 / std::sqrt(2.0))), 0.0, 1e-15);
}

TEST(Steering, QuarterFrequency) {
    const CMatrix a = steering_matrix(one(0.25), 4);
    const Complex want[4] = {0.5, Complex(0, 0.5), -0.5, Complex(0, -0.5)};
    for (int n = 0; n < 4; ++n)
        EXPECT_NEAR(std::abs(a(n, 0) - want[n]), 0.0, 1e-15);
}

TEST(Steering, UnitColumns) {
    const auto inst = random_instance(3, 32, 10);
    const CMatrix a = steering_matrix(inst.freq, inst.N);
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        EXPECT_NEAR(a.col(j).norm(), 1.0, 1e-12);
}

TEST(GroundTruthF, SingleZeroFrequency) {
    const ToeplitzSpec f = ground_truth_f(single(0.0, 1.0), 4);
    for (int n = 0; n < 4; ++n)
        EXPECT_NEAR(std::abs(f[n] - Complex(0.25)), 0.0, 1e-15);
}

TEST(GroundTruthF, SingleSpikeHasFlatModulus) {
    const ToeplitzSpec f = ground_truth_f(single(0.137, 1.7), 9);
    for (int n = 0; n < 9; ++n)
        EXPECT_NEAR(std::abs(f[n]), 1.7 * 1.7 / 9, 1e-14);
}

TEST(GroundTruthF, ToeplitzEqualsSteeringProduct) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = random_instance(seed, 16, 5);
        const CMatrix a = steering_matrix(inst.freq, inst.N);
        const RVector g2 = inst.freq.gammas.array().square();
        const CMatrix oracle = loop_product(loop_product(a, g2.cast<Complex>().asDiagonal().toDenseMatrix()), a.adjoint());
        EXPECT_LE((toeplitz(ground_truth_f(inst.freq, inst.N)) - oracle).norm(), 1e-12);
    }
}

TEST(ExactCovariance, RankOneUnitGains) {
    ProblemInstance inst;
    inst.N = 4;
    inst.freq = single(0.0, 1.0);
    inst.cal.g = CVector::Ones(4);
    const CMatrix r = exact_covariance(inst);
    EXPECT_LE((r - CMatrix::Constant(4, 4, Complex(0.25))).norm(), 1e-15);
}

TEST(ExactCovariance, DiagonalAndDirectProduct) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = random_instance(seed, 12, 4);
        const CMatrix r = exact_covariance(inst);
        const double f0 = ground_truth_f(inst.freq, inst.N)[0].real();
        for (int n = 0; n < inst.N; ++n)
            EXPECT_NEAR(r(n, n).real(), std::norm(inst.cal.g[n]) * f0, 1e-12);
        const CMatrix ga = loop_product(inst.cal.g.asDiagonal().toDenseMatrix(), steering_matrix(inst.freq, inst.N));
        const RVector g2 = inst.freq.gammas.array().square();
        const CMatrix oracle = loop_product(loop_product(ga, g2.cast<Complex>().asDiagonal().toDenseMatrix()), ga.adjoint());
        EXPECT_LE((r - oracle).norm(), 1e-12);
        const auto eig = hermitian_eig(r);
        EXPECT_GE(eig.values.minCoeff(), -1e-10 * eig.values[0]);
    }
}

TEST(Snapshots, SingleSourceConstantModulus) {
    ProblemInstance inst = random_instance(9, 8, 1);
    inst.sigma = 0.0;
    Rng rng(1);
    const CMatrix y = sample_snapshots(inst, 20, rng);
    const double gamma = inst.freq.gammas[0];
    for (Eigen::Index t = 0; t < y.cols(); ++t)
        for (int n = 0; n < inst.N; ++n)
            EXPECT_NEAR(std::abs(y(n, t)), gamma * std::abs(inst.cal.g[n]) / std::sqrt(8.0), 1e-12);
}

TEST(Snapshots, DeterministicPerSeed) {
    const auto inst = random_instance(4, 16, 5, 2.0, 0.5);
    Rng a(77), b(77);
    EXPECT_EQ(sample_snapshots(inst, 30, a), sample_snapshots(inst, 30, b));
    EXPECT_EQ(make_instance(InstanceFamily{}, 5).cal.g, make_instance(InstanceFamily{}, 5).cal.g);
}

TEST(Snapshots, SplitStreamsDependOnlyOnSeed) {
    Rng a(5);
    Rng b(5);
    a.uniform(0, 1);
    EXPECT_EQ(a.split(3).uniform(0, 1), b.split(3).uniform(0, 1));
    EXPECT_NE(a.split(3).uniform(0, 1), a.split(4).uniform(0, 1));
}

TEST(Snapshots, LawOfLargeNumbers) {
    ProblemInstance inst = random_instance(21, 8, 2, 2.0, 0.0);
    Rng rng(99);
    const CMatrix cov = empirical_covariance(sample_snapshots(inst, 100000, rng));
    const CMatrix r = exact_covariance(inst);
    EXPECT_LE(hermitian_spectral_norm(cov - r) / hermitian_spectral_norm(r), 5e-2);
}

TEST(Snapshots, SourceCovarianceIsDiagonal) {
    // With unit gains and one sensor per source the snapshot covariance of the
    // sources is recovered by projecting onto the steering columns.
    ProblemInstance inst = random_instance(22, 4, 3, 1.0, 0.0);
    inst.cal.g = CVector::Ones(inst.N);
    Rng rng(100);
    const CMatrix y = sample_snapshots(inst, 100000, rng);
    const CMatrix a = steering_matrix(inst.freq, inst.N);
    const CMatrix x = a.completeOrthogonalDecomposition().solve(y);
    const CMatrix rx = empirical_covariance(x);
    const RVector g2 = inst.freq.gammas.array().square();
    const CMatrix want = g2.cast<Complex>().asDiagonal();
    EXPECT_LE(hermitian_spectral_norm(rx - want) / hermitian_spectral_norm(want), 5e-2);
}

TEST(Instances, DefaultFamilySpacing) {
    const auto inst = make_instance(InstanceFamily{}, 2024);
    ASSERT_EQ(inst.freq.size(), 20);
    for (Eigen::Index i = 0; i < 20; ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            EXPECT_GE(torus_distance(inst.freq.omegas[i], inst.freq.omegas[j]), 2.0 / 64 - 1e-12);
    for (Eigen::Index n = 0; n < 64; ++n) {
        EXPECT_GE(std::abs(inst.cal.g[n]), 1.0);
        EXPECT_LE(std::abs(inst.cal.g[n]), 2.0);
    }
    for (Eigen::Index j = 0; j < 20; ++j) {
        EXPECT_GE(inst.freq.gammas[j], 1.0);
        EXPECT_LE(inst.freq.gammas[j], 2.0);
    }
}

TEST(Instances, RejectsOverfullTorus) {
    InstanceFamily fam;
    fam.N = 16;
    fam.s = 9;
    fam.separation = 2.0;
    EXPECT_THROW(make_instance(fam, 1), Error);
}

TEST(Instances, ValidationCatchesBadFields) {
    ProblemInstance inst = random_instance(1, 8, 2);
    inst.cal.g[3] = 0.0;
    EXPECT_THROW(inst.validate(), Error);
    inst = random_instance(1, 8, 2);
    inst.freq.omegas[0] = 1.0;
    EXPECT_THROW(inst.validate(), Error);
}
