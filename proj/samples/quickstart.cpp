// Calibrate a 32-sensor array from 2000 noisy snapshots with both methods.

#include <cstdio>

#include "blindcal/blindcal.hpp"

int main() {
    using namespace blindcal;

    InstanceFamily family;
    family.N = 32;
    family.s = 8;
    family.separation = 2.0;
    family.sigma = 0.3;
    const ProblemInstance inst = make_instance(family, 42);

    Rng rng(7);
    const CMatrix y = sample_snapshots(inst, 2000, rng);
    const AlgebraicOutput alg = run_partial_algebraic(empirical_covariance(y), family.s, 2000);

    const CalibrationResult a = calibrate_algebraic(alg, family.s);
    const CalibrationResult o = run_optimizer(alg, family.s);

    for (const CalibrationResult* r : {&a, &o}) {
        const AlignmentResult m = evaluate(inst, r->g_hat.g, r->peaks.omegas);
        std::printf("%-9s cal_error %.3e  supp_error %.3e  success %d\n", std::string(to_string(r->method)).c_str(),
                    m.cal_error_mean, m.supp_error, success_indicator(m.supp_error, inst.N) ? 1 : 0);
    }
    std::printf("optimiser: %d iterations, %s\n", o.iterations, std::string(to_string(o.termination)).c_str());
}
