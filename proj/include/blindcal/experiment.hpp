#pragma once

// Experiment harness: configuration, single trials, Monte Carlo sweeps with a
// worker pool, per-cell summaries and imaging tables.

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <map>
#include <optional>
#include <thread>
#include <tuple>

#include "blindcal/io.hpp"

namespace blindcal {

/// Snapshot count; 0 stands for the infinite-snapshot (exact covariance) limit.
using SnapshotCount = long;
inline constexpr SnapshotCount kExactSnapshots = 0;

inline std::string snapshots_to_string(SnapshotCount L) {
    return L == kExactSnapshots ? "inf" : std::to_string(L);
}

inline SnapshotCount parse_snapshots(const std::string& text) {
    if (text == "inf")
        return kExactSnapshots;
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (text.empty() || *end != '\0' || errno != 0 || v < 1)
        throw Error(ErrorCode::InvalidConfig, "snapshots must be a positive integer or \"inf\", got '" + text + "'");
    return v;
}

enum class MethodSelection { Algebraic, Optim, Both };

inline MethodSelection parse_method(const std::string& name) {
    if (name == "algebraic")
        return MethodSelection::Algebraic;
    if (name == "optim")
        return MethodSelection::Optim;
    if (name == "both")
        return MethodSelection::Both;
    throw Error(ErrorCode::InvalidConfig, "method must be algebraic, optim or both, got '" + name + "'");
}

inline std::vector<Method> expand(MethodSelection sel) {
    switch (sel) {
    case MethodSelection::Algebraic: return {Method::Algebraic};
    case MethodSelection::Optim: return {Method::Optim};
    default: return {Method::Algebraic, Method::Optim};
    }
}

struct ExperimentConfig {
    int N = 64;
    int s = 20;
    double separation = 2.0; ///< in units of 1/N
    double dr_gamma = 2.0;
    double dr_g = 2.0;
    std::vector<double> sigma_list{0.5};
    std::vector<SnapshotCount> L_list{500};
    int trials = 1;
    std::uint64_t master_seed = 0;
    MethodSelection method = MethodSelection::Both;
    int grid_size = 0; ///< 0 selects max(4096, 16N)
    std::string output_path;
    int max_iters = 5000;
    bool record_runtime = true; ///< false writes runtime_ms = 0 for byte-identical tables

    void validate() const {
        auto bad = [](const std::string& field, const std::string& why) {
            throw Error(ErrorCode::InvalidConfig, field + ": " + why);
        };
        if (N < 3)
            bad("N", "must be at least 3");
        if (s < 1 || s + 1 > N)
            bad("s", "must satisfy 1 <= s <= N - 1");
        if (!(separation > 0.0))
            bad("separation", "must be positive");
        if (separation * s > N)
            bad("separation", "separation * s exceeds N");
        if (!(dr_gamma >= 1.0))
            bad("DR_gamma", "must be >= 1");
        if (!(dr_g >= 1.0))
            bad("DR_g", "must be >= 1");
        if (sigma_list.empty())
            bad("sigma_list", "must be nonempty");
        for (double sg : sigma_list)
            if (!(sg >= 0.0) || !std::isfinite(sg))
                bad("sigma_list", "entries must be finite and nonnegative");
        if (L_list.empty())
            bad("L_list", "must be nonempty");
        for (SnapshotCount L : L_list)
            if (L < 0)
                bad("L_list", "entries must be positive or \"inf\"");
        if (trials < 1)
            bad("trials", "must be at least 1");
        if (grid_size < 0)
            bad("grid_size", "must be nonnegative");
        if (max_iters < 0)
            bad("max_iters", "must be nonnegative");
    }

    InstanceFamily family(double sigma) const { return {N, s, separation, dr_gamma, dr_g, sigma}; }
};

inline ExperimentConfig config_from_json(const io::json& j) {
    if (!j.is_object())
        throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    ExperimentConfig c;
    auto take = [&](const char* name, auto& dst) {
        if (j.contains(name))
            dst = io::detail::field<std::decay_t<decltype(dst)>>(j, name);
    };
    take("N", c.N);
    take("s", c.s);
    take("separation", c.separation);
    take("DR_gamma", c.dr_gamma);
    take("DR_g", c.dr_g);
    take("sigma_list", c.sigma_list);
    if (j.contains("sigma"))
        c.sigma_list = {io::detail::field<double>(j, "sigma")};
    if (j.contains("L_list")) {
        if (!j["L_list"].is_array())
            throw Error(ErrorCode::InvalidConfig, "L_list: must be an array");
        c.L_list.clear();
        for (const auto& v : j["L_list"]) {
            if (v.is_string())
                c.L_list.push_back(parse_snapshots(v.get<std::string>()));
            else if (v.is_number_integer())
                c.L_list.push_back(v.get<long>() >= 1 ? v.get<long>() : -1);
            else
                throw Error(ErrorCode::InvalidConfig, "L_list: entries must be integers or \"inf\"");
        }
    }
    take("trials", c.trials);
    take("master_seed", c.master_seed);
    if (j.contains("method"))
        c.method = parse_method(io::detail::field<std::string>(j, "method"));
    take("grid_size", c.grid_size);
    take("output_path", c.output_path);
    take("max_iters", c.max_iters);
    take("record_runtime", c.record_runtime);
    c.validate();
    return c;
}

inline io::json to_json(const ExperimentConfig& c) {
    io::json L = io::json::array();
    for (SnapshotCount v : c.L_list)
        if (v == kExactSnapshots)
            L.push_back("inf");
        else
            L.push_back(v);
    const char* method = c.method == MethodSelection::Algebraic ? "algebraic"
                         : c.method == MethodSelection::Optim   ? "optim"
                                                                : "both";
    return io::json{{"N", c.N},
                    {"s", c.s},
                    {"separation", c.separation},
                    {"DR_gamma", c.dr_gamma},
                    {"DR_g", c.dr_g},
                    {"sigma_list", c.sigma_list},
                    {"L_list", L},
                    {"trials", c.trials},
                    {"master_seed", c.master_seed},
                    {"method", method},
                    {"grid_size", c.grid_size},
                    {"output_path", c.output_path},
                    {"max_iters", c.max_iters},
                    {"record_runtime", c.record_runtime}};
}

/// Covariance seen by the estimators: the sample covariance of L snapshots
/// drawn from `rng`, or R^y + σ²I in the infinite-snapshot limit.
inline CMatrix observed_covariance(const ProblemInstance& inst, SnapshotCount L, Rng& rng) {
    if (L == kExactSnapshots)
        return exact_noisy_covariance(inst);
    return empirical_covariance(sample_snapshots(inst, static_cast<int>(L), rng));
}

/// Snapshot stream for one (L, σ) cell of a trial; independent of the method.
inline Rng snapshot_rng(std::uint64_t instance_seed, SnapshotCount L, double sigma) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &sigma, sizeof bits);
    return Rng(instance_seed).split(splitmix64(static_cast<std::uint64_t>(L)) ^ bits);
}

struct TrialRecord {
    int trial_index = 0;
    Method method = Method::Algebraic;
    SnapshotCount L = 0;
    double sigma = 0.0;
    double cal_error_mean = -1.0; ///< -1 on failed rows
    double supp_error = -1.0;     ///< -1 on failed rows
    int success = 0;
    double runtime_ms = 0.0;
    int iterations = 0;          ///< 0 for the algebraic method
    double final_objective = 0.0; ///< 0 for the algebraic method
    std::string error_code;      ///< empty when the run completed
};

inline const std::vector<std::string>& trial_csv_header() {
    static const std::vector<std::string> header{"trial_index",  "method",     "L",       "sigma",
                                                 "cal_error_mean", "supp_error", "success", "runtime_ms",
                                                 "iterations",   "final_objective", "error_code"};
    return header;
}

inline std::vector<std::string> csv_cells(const TrialRecord& r) {
    return {std::to_string(r.trial_index),    std::string(to_string(r.method)),
            snapshots_to_string(r.L),         io::format_double(r.sigma),
            io::format_double(r.cal_error_mean), io::format_double(r.supp_error),
            std::to_string(r.success),        io::format_double(r.runtime_ms),
            std::to_string(r.iterations),     io::format_double(r.final_objective),
            r.error_code};
}

inline std::string sweep_csv(const std::vector<TrialRecord>& rows) {
    std::string out = io::csv_row(trial_csv_header());
    for (const TrialRecord& r : rows)
        out += io::csv_row(csv_cells(r));
    return out;
}

/// Runs every requested method on one (trial, L, σ) cell. Both methods see the
/// same instance and the same snapshots.
inline std::vector<TrialRecord> run_trial(const ExperimentConfig& config, int trial_index, SnapshotCount L,
                                          double sigma) {
    using Clock = std::chrono::steady_clock;
    auto ms_since = [](Clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    };

    const std::vector<Method> methods = expand(config.method);
    std::vector<TrialRecord> rows(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
        rows[i].trial_index = trial_index;
        rows[i].method = methods[i];
        rows[i].L = L;
        rows[i].sigma = sigma;
    }
    auto fail_all = [&](const Error& e) {
        for (TrialRecord& r : rows)
            if (r.error_code.empty() && r.cal_error_mean < 0.0)
                r.error_code = std::string(to_string(e.code()));
    };

    std::optional<AlgebraicOutput> alg;
    ProblemInstance inst;
    double alg_ms = 0.0;
    try {
        const std::uint64_t seed = config.master_seed + static_cast<std::uint64_t>(trial_index);
        inst = make_instance(config.family(sigma), seed);
        Rng rng = snapshot_rng(seed, L, sigma);
        const CMatrix cov = observed_covariance(inst, L, rng);
        const auto t0 = Clock::now();
        alg = run_partial_algebraic(cov, config.s, L);
        alg_ms = ms_since(t0);
    } catch (const Error& e) {
        fail_all(e);
        return rows;
    }

    MusicOptions music_opts;
    music_opts.grid_size = config.grid_size;
    for (TrialRecord& row : rows) {
        try {
            const auto t0 = Clock::now();
            CalibrationResult res;
            if (row.method == Method::Algebraic) {
                res = calibrate_algebraic(*alg, config.s, music_opts);
            } else {
                OptimConfig oc;
                oc.max_iters = config.max_iters;
                oc.music = music_opts;
                oc.record_trace = false;
                res = run_optimizer(*alg, config.s, oc);
                row.iterations = res.iterations;
                row.final_objective = res.final_objective;
            }
            const double ms = alg_ms + ms_since(t0);
            const AlignmentResult m = evaluate(inst, res.g_hat.g, res.peaks.omegas);
            row.cal_error_mean = m.cal_error_mean;
            row.supp_error = m.supp_error;
            row.success = success_indicator(m.supp_error, inst.N) ? 1 : 0;
            row.runtime_ms = config.record_runtime ? ms : 0.0;
            if (res.peaks.degraded)
                row.error_code = std::string(to_string(ErrorCode::InsufficientPeaks));
        } catch (const Error& e) {
            row.error_code = std::string(to_string(e.code()));
            row.cal_error_mean = -1.0;
            row.supp_error = -1.0;
        }
    }
    return rows;
}

/// Worker count: BLINDCAL_THREADS if set and positive, else the hardware
/// concurrency, never more than `jobs`.
inline int worker_count(std::size_t jobs) {
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("BLINDCAL_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0)
            n = v;
    }
    return std::max(1, std::min<int>(n, static_cast<int>(jobs)));
}

/// Rows ordered by (L, σ, trial, method) regardless of scheduling.
inline std::vector<TrialRecord> run_sweep(const ExperimentConfig& config, int threads = 0) {
    config.validate();
    struct Job {
        SnapshotCount L;
        double sigma;
        int trial;
    };
    std::vector<Job> jobs;
    for (SnapshotCount L : config.L_list)
        for (double sigma : config.sigma_list)
            for (int t = 0; t < config.trials; ++t)
                jobs.push_back({L, sigma, t});

    std::vector<std::vector<TrialRecord>> slots(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
            slots[i] = run_trial(config, jobs[i].trial, jobs[i].L, jobs[i].sigma);
    };
    const int n = threads > 0 ? std::min<int>(threads, static_cast<int>(jobs.size())) : worker_count(jobs.size());
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n; ++i)
            pool.emplace_back(worker);
        for (std::thread& t : pool)
            t.join();
    }

    std::vector<TrialRecord> rows;
    for (auto& slot : slots)
        for (TrialRecord& r : slot)
            rows.push_back(std::move(r));
    return rows;
}

struct CellSummary {
    Method method = Method::Algebraic;
    SnapshotCount L = 0;
    double sigma = 0.0;
    int trials = 0;
    int failures = 0;
    double mean_cal_error = 0.0;
    double mean_supp_error = 0.0;
    double success_rate = 0.0;
    double mean_runtime_ms = 0.0;
    double mean_iterations = 0.0;
};

/// Per-(method, L, σ) means over completed rows; success rate over all rows.
inline std::vector<CellSummary> summarize(const std::vector<TrialRecord>& rows) {
    std::map<std::tuple<int, SnapshotCount, double>, CellSummary> cells;
    std::vector<std::tuple<int, SnapshotCount, double>> order;
    for (const TrialRecord& r : rows) {
        const auto key = std::make_tuple(static_cast<int>(r.method), r.L, r.sigma);
        auto [it, inserted] = cells.try_emplace(key);
        if (inserted)
            order.push_back(key);
        CellSummary& c = it->second;
        c.method = r.method;
        c.L = r.L;
        c.sigma = r.sigma;
        ++c.trials;
        if (r.cal_error_mean < 0.0) {
            ++c.failures;
            continue;
        }
        c.mean_cal_error += r.cal_error_mean;
        c.mean_supp_error += r.supp_error;
        c.success_rate += r.success;
        c.mean_runtime_ms += r.runtime_ms;
        c.mean_iterations += r.iterations;
    }
    std::vector<CellSummary> out;
    for (const auto& key : order) {
        CellSummary c = cells[key];
        const int done = c.trials - c.failures;
        if (done > 0) {
            c.mean_cal_error /= done;
            c.mean_supp_error /= done;
            c.mean_runtime_ms /= done;
            c.mean_iterations /= done;
        }
        c.success_rate /= c.trials;
        out.push_back(c);
    }
    return out;
}

inline io::json summary_json(const ExperimentConfig& config, const std::vector<CellSummary>& cells) {
    io::json arr = io::json::array();
    for (const CellSummary& c : cells) {
        io::json L = c.L == kExactSnapshots ? io::json("inf") : io::json(c.L);
        arr.push_back({{"method", std::string(to_string(c.method))},
                       {"L", L},
                       {"sigma", c.sigma},
                       {"trials", c.trials},
                       {"failures", c.failures},
                       {"mean_cal_error", c.mean_cal_error},
                       {"mean_supp_error", c.mean_supp_error},
                       {"success_rate", c.success_rate},
                       {"mean_runtime_ms", c.mean_runtime_ms},
                       {"mean_iterations", c.mean_iterations}});
    }
    return io::json{{"format_version", io::kFormatVersion}, {"config", to_json(config)}, {"cells", arr}};
}

/// Runs one method on an instance and returns the result with its alignment.
struct SingleRun {
    CalibrationResult result;
    AlignmentResult metrics;
};

inline SingleRun calibrate_instance(const ProblemInstance& inst, SnapshotCount L, Method method, Rng rng,
                                    const OptimConfig& optim = {}) {
    inst.validate();
    const int s = static_cast<int>(inst.freq.size());
    const CMatrix cov = observed_covariance(inst, L, rng);
    const AlgebraicOutput alg = run_partial_algebraic(cov, s, L);
    SingleRun out;
    out.result = method == Method::Algebraic ? calibrate_algebraic(alg, s, optim.music) : run_optimizer(alg, s, optim);
    out.metrics = evaluate(inst, out.result.g_hat.g, out.result.peaks.omegas);
    return out;
}

struct ImagingRow {
    double omega = 0.0;
    double J = 0.0;
    bool true_marker = false;
};

/// J sampled on the uniform grid after translating the estimate onto the
/// ground truth; `true_marker` flags the grid point nearest each true ω_j.
inline std::vector<ImagingRow> imaging_table(const ProblemInstance& inst, const SingleRun& run, int grid_size) {
    const int s = static_cast<int>(inst.freq.size());
    const NoiseSubspace sub = noise_subspace(run.result.music_input, s);
    const int G = grid_size > 0 ? grid_size : default_grid_size(inst.N);
    const double shift = run.metrics.c2_star / kTwoPi;
    std::vector<ImagingRow> rows(static_cast<std::size_t>(G));
    RVector grid(G);
    for (int i = 0; i < G; ++i) {
        rows[static_cast<std::size_t>(i)].omega = static_cast<double>(i) / G;
        grid[i] = wrap_unit(rows[static_cast<std::size_t>(i)].omega - shift);
    }
    const RVector d = noise_distances(sub, grid);
    const double root_n = std::sqrt(static_cast<double>(inst.N));
    for (int i = 0; i < G; ++i)
        rows[static_cast<std::size_t>(i)].J = is_exact_root(sub, d[i]) ? std::numeric_limits<double>::infinity()
                                                                      : root_n / d[i];
    for (Eigen::Index j = 0; j < inst.freq.size(); ++j) {
        const long idx = std::lround(inst.freq.omegas[j] * G) % G;
        rows[static_cast<std::size_t>(idx)].true_marker = true;
    }
    return rows;
}

inline std::string imaging_csv(const std::vector<ImagingRow>& rows) {
    std::string out = io::csv_row({"omega", "J", "true_marker"});
    for (const ImagingRow& r : rows)
        out += io::csv_row({io::format_double(r.omega), io::format_double(r.J), r.true_marker ? "1" : "0"});
    return out;
}

} // namespace blindcal
