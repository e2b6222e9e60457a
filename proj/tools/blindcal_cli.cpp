// blindcal: instance generation, calibration runs, sweeps and imaging tables.
//
// Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or usage,
// 3 numerical failure.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "blindcal/blindcal.hpp"

namespace {

using blindcal::Error;
using blindcal::ErrorCode;
using blindcal::io::json;

int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::IoError: return 1;
    case ErrorCode::InvalidConfig:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::BadK: return 2;
    default: return 3;
    }
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        blindcal::io::write_text_file(path, text);
}

blindcal::ExperimentConfig load_config(const std::string& path) {
    if (path.empty())
        return {};
    return blindcal::config_from_json(blindcal::io::read_json_file(path));
}

blindcal::Method single_method(const std::string& name) {
    const auto sel = blindcal::parse_method(name);
    if (sel == blindcal::MethodSelection::Both)
        throw Error(ErrorCode::InvalidConfig, "method: this subcommand takes algebraic or optim");
    return sel == blindcal::MethodSelection::Algebraic ? blindcal::Method::Algebraic : blindcal::Method::Optim;
}

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string method;
    int grid_size = 0;
    std::string instance;
    std::string snapshots = "inf";
    std::string trace;
    std::string summary;
    int trial = 0;
    bool deterministic = false;
    int max_iters = 5000;
};

int cmd_simulate(const Options& o) {
    blindcal::ExperimentConfig cfg = load_config(o.config);
    const std::uint64_t seed = o.seed ? *o.seed : cfg.master_seed + static_cast<std::uint64_t>(o.trial);
    const auto inst = blindcal::make_instance(cfg.family(cfg.sigma_list.front()), seed);
    emit(o.out, blindcal::io::to_json(inst).dump(2) + "\n");
    return 0;
}

int cmd_calibrate(const Options& o) {
    const auto inst = blindcal::io::instance_from_json(blindcal::io::read_json_file(o.instance));
    const auto L = blindcal::parse_snapshots(o.snapshots);
    const auto sel = blindcal::parse_method(o.method.empty() ? "both" : o.method);
    const std::uint64_t seed = o.seed ? *o.seed : inst.seed;

    blindcal::OptimConfig optim;
    optim.music.grid_size = o.grid_size;
    optim.max_iters = o.max_iters;
    optim.record_trace = !o.trace.empty();

    json results = json::array();
    for (blindcal::Method m : blindcal::expand(sel)) {
        const auto run = blindcal::calibrate_instance(inst, L, m, blindcal::snapshot_rng(seed, L, inst.sigma), optim);
        results.push_back(blindcal::io::to_json(run.result, &run.metrics, inst.N));
        if (m == blindcal::Method::Optim && !o.trace.empty())
            blindcal::io::write_text_file(o.trace, blindcal::io::trace_csv(run.result.trace));
    }
    json out{{"format_version", blindcal::io::kFormatVersion},
             {"instance_seed", inst.seed},
             {"snapshot_seed", seed},
             {"L", blindcal::snapshots_to_string(L)},
             {"N", inst.N},
             {"s", inst.freq.size()},
             {"results", results}};
    emit(o.out, out.dump(2) + "\n");
    return 0;
}

int cmd_sweep(const Options& o) {
    blindcal::ExperimentConfig cfg = load_config(o.config);
    if (o.seed)
        cfg.master_seed = *o.seed;
    if (!o.method.empty())
        cfg.method = blindcal::parse_method(o.method);
    if (o.grid_size > 0)
        cfg.grid_size = o.grid_size;
    if (o.deterministic)
        cfg.record_runtime = false;
    cfg.validate();

    const auto rows = blindcal::run_sweep(cfg);
    const std::string path = !o.out.empty() ? o.out : cfg.output_path;
    emit(path, blindcal::sweep_csv(rows));
    const auto summary = blindcal::summary_json(cfg, blindcal::summarize(rows));
    if (!o.summary.empty())
        blindcal::io::write_json_file(o.summary, summary);
    else if (!path.empty() && path != "-")
        blindcal::io::write_json_file(path + ".summary.json", summary);
    return 0;
}

int cmd_imaging(const Options& o) {
    const auto inst = blindcal::io::instance_from_json(blindcal::io::read_json_file(o.instance));
    const auto L = blindcal::parse_snapshots(o.snapshots);
    const auto method = single_method(o.method.empty() ? "algebraic" : o.method);
    const std::uint64_t seed = o.seed ? *o.seed : inst.seed;
    blindcal::OptimConfig optim;
    optim.music.grid_size = o.grid_size;
    optim.max_iters = o.max_iters;
    optim.record_trace = false;
    const auto run = blindcal::calibrate_instance(inst, L, method, blindcal::snapshot_rng(seed, L, inst.sigma), optim);
    emit(o.out, blindcal::imaging_csv(blindcal::imaging_table(inst, run, o.grid_size)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind gain/phase calibration and off-grid frequency estimation for uniform arrays"};
    app.require_subcommand(1);
    Options o;

    auto* simulate = app.add_subcommand("simulate", "Draw a random instance and write it as JSON");
    simulate->add_option("--config", o.config, "Experiment config JSON (defaults apply when omitted)");
    simulate->add_option("--seed", o.seed, "Instance seed (default master_seed + trial)");
    simulate->add_option("--trial", o.trial, "Trial index used to derive the seed")->check(CLI::NonNegativeNumber);
    simulate->add_option("--out", o.out, "Output path (stdout when omitted)");

    auto* calibrate = app.add_subcommand("calibrate", "Calibrate an instance from simulated snapshots");
    calibrate->add_option("--instance", o.instance, "Instance JSON")->required();
    calibrate->add_option("--snapshots,-L", o.snapshots, "Snapshot count, or inf for the exact covariance");
    calibrate->add_option("--method", o.method, "algebraic | optim | both (default both)");
    calibrate->add_option("--grid-size", o.grid_size, "MUSIC grid size (0 = max(4096, 16N))");
    calibrate->add_option("--seed", o.seed, "Snapshot seed (default: the instance seed)");
    calibrate->add_option("--max-iters", o.max_iters, "Optimiser iteration cap");
    calibrate->add_option("--trace", o.trace, "Write the optimiser trace CSV here");
    calibrate->add_option("--out", o.out, "Result JSON path (stdout when omitted)");

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over snapshot counts and noise levels");
    sweep->add_option("--config", o.config, "Experiment config JSON")->required();
    sweep->add_option("--seed", o.seed, "Override master_seed");
    sweep->add_option("--method", o.method, "Override method");
    sweep->add_option("--grid-size", o.grid_size, "Override MUSIC grid size");
    sweep->add_option("--out", o.out, "CSV path (default: output_path from the config, else stdout)");
    sweep->add_option("--summary", o.summary, "Summary JSON path (default: <out>.summary.json)");
    sweep->add_flag("--deterministic", o.deterministic, "Write runtime_ms = 0 so tables are byte-identical");

    auto* imaging = app.add_subcommand("imaging", "Tabulate the translated MUSIC imaging function");
    imaging->add_option("--instance", o.instance, "Instance JSON")->required();
    imaging->add_option("--snapshots,-L", o.snapshots, "Snapshot count, or inf for the exact covariance");
    imaging->add_option("--method", o.method, "algebraic | optim (default algebraic)");
    imaging->add_option("--grid-size", o.grid_size, "Grid size (0 = max(4096, 16N))");
    imaging->add_option("--seed", o.seed, "Snapshot seed (default: the instance seed)");
    imaging->add_option("--max-iters", o.max_iters, "Optimiser iteration cap");
    imaging->add_option("--out", o.out, "CSV path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(o);
        if (calibrate->parsed())
            return cmd_calibrate(o);
        if (sweep->parsed())
            return cmd_sweep(o);
        return cmd_imaging(o);
    } catch (const Error& e) {
        std::cerr << "error [" << blindcal::to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
