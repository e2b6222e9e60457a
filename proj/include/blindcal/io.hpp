#pragma once

// JSON and CSV serialisation for instances, results and traces.
//
// Instance schema (format_version 1):
//   { "format_version": 1, "N": int, "sigma": float, "seed": uint64,
//     "omegas": [float], "gammas": [float], "gains": [[re, im], ...] }

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blindcal/metrics.hpp"
#include "blindcal/pipeline.hpp"

namespace blindcal::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline json complex_array(const CVector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back({v[i].real(), v[i].imag()});
    return arr;
}

inline json real_array(const RVector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v[i]);
    return arr;
}

namespace detail {

template <class T>
T field(const json& j, const char* name) {
    if (!j.contains(name))
        throw Error(ErrorCode::InvalidConfig, std::string("missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidConfig, std::string("field '") + name + "' has the wrong type");
    }
}

inline RVector real_vector(const json& j, const char* name) {
    const auto values = field<std::vector<double>>(j, name);
    return Eigen::Map<const RVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline CVector complex_vector(const json& j, const char* name) {
    const auto pairs = field<std::vector<std::vector<double>>>(j, name);
    CVector out(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].size() != 2)
            throw Error(ErrorCode::InvalidConfig, std::string("field '") + name + "' needs [re, im] pairs");
        out[static_cast<Eigen::Index>(i)] = Complex(pairs[i][0], pairs[i][1]);
    }
    return out;
}

} // namespace detail

inline json to_json(const ProblemInstance& inst) {
    json j;
    j["format_version"] = kFormatVersion;
    j["N"] = inst.N;
    j["sigma"] = inst.sigma;
    j["seed"] = inst.seed;
    j["omegas"] = real_array(inst.freq.omegas);
    j["gammas"] = real_array(inst.freq.gammas);
    j["gains"] = complex_array(inst.cal.g);
    return j;
}

inline ProblemInstance instance_from_json(const json& j) {
    const int version = detail::field<int>(j, "format_version");
    if (version != kFormatVersion)
        throw Error(ErrorCode::InvalidConfig, "unsupported format_version " + std::to_string(version));
    ProblemInstance inst;
    inst.N = detail::field<int>(j, "N");
    inst.sigma = detail::field<double>(j, "sigma");
    inst.seed = detail::field<std::uint64_t>(j, "seed");
    inst.freq.omegas = detail::real_vector(j, "omegas");
    inst.freq.gammas = detail::real_vector(j, "gammas");
    inst.cal.g = detail::complex_vector(j, "gains");
    inst.validate();
    return inst;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out << text;
    if (!out)
        throw Error(ErrorCode::IoError, "short write to '" + path + "'");
}

inline json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, "'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

/// Shortest decimal form that round-trips a double, as used in CSV cells.
inline std::string format_double(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

/// RFC-4180 quoting for a single cell.
inline std::string csv_cell(const std::string& text) {
    if (text.find_first_of(",\"\r\n") == std::string::npos)
        return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_row(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            line += ',';
        line += csv_cell(cells[i]);
    }
    return line + "\r\n";
}

/// Optimiser trace as CSV: iter,objective,grad_norm,eta.
inline std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = csv_row({"iter", "objective", "grad_norm", "eta"});
    for (const TraceRow& r : trace)
        out += csv_row({std::to_string(r.iter), format_double(r.objective), format_double(r.grad_norm),
                        format_double(r.eta)});
    return out;
}

inline json to_json(const RankCondition& rc) {
    return json{{"lambda", rc.lambda}, {"rank", rc.rank}, {"satisfied", rc.satisfied}};
}

inline json to_json(const AlignmentResult& a, int N) {
    return json{{"cal_error_mean", a.cal_error_mean},
                {"cal_error_per_sensor", real_array(a.cal_error_per_sensor)},
                {"supp_error", a.supp_error},
                {"success", success_indicator(a.supp_error, N)},
                {"c2_star", a.c2_star},
                {"c_star", {a.c_star.real(), a.c_star.imag()}}};
}

/// One method's result; `metrics` is attached when ground truth is known.
inline json to_json(const CalibrationResult& res, const AlignmentResult* metrics, int N) {
    json j;
    j["method"] = std::string(to_string(res.method));
    j["g_hat"] = complex_array(res.g_hat.g);
    j["omegas_hat"] = real_array(res.peaks.omegas);
    j["peak_values"] = json::array();
    for (Eigen::Index i = 0; i < res.peaks.peak_values.size(); ++i) {
        const double v = res.peaks.peak_values[i];
        if (std::isfinite(v))
            j["peak_values"].push_back(v);
        else
            j["peak_values"].push_back("inf");
    }
    j["peaks_degraded"] = res.peaks.degraded;
    json diag;
    diag["sigma_hat"] = res.sigma_hat;
    diag["clamped"] = res.clamped;
    diag["rank_condition"] = to_json(res.rank);
    if (res.method == Method::Optim) {
        diag["n0_hat"] = res.n0_hat;
        diag["rho"] = res.rho;
    }
    j["diagnostics"] = diag;
    if (res.method == Method::Optim) {
        j["optim"] = json{{"iterations", res.iterations},
                          {"final_objective", res.final_objective},
                          {"termination", std::string(to_string(res.termination))}};
    }
    if (metrics)
        j["metrics"] = to_json(*metrics, N);
    return j;
}

} // namespace blindcal::io
