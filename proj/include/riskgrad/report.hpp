#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskgrad/avar.hpp"
#include "riskgrad/errors.hpp"
#include "riskgrad/payoff.hpp"
#include "riskgrad/riskmeasure.hpp"
#include "riskgrad/version.hpp"

namespace riskgrad {

// Serialization of estimates and run manifests. Reports deliberately carry
// no wall-clock or host information: two runs with the same inputs must
// produce byte-identical report files. Timing lives in the manifest only.

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::ordered_json config_echo_json(const EstimateReport& report,
                                               const PayoffModel& model) {
    const SgldConfig& cfg = report.config_echo;
    nlohmann::ordered_json j;
    j["u"] = cfg.u;
    j["lambda"] = cfg.lambda;
    j["gamma"] = cfg.gamma;
    j["step_h"] = report.schedule.h;
    j["steps_m"] = report.schedule.steps_m;
    j["implied_horizon_t"] = report.schedule.implied_t;
    j["diffusion_time_mh"] = report.schedule.h * static_cast<double>(report.schedule.steps_m);
    j["chains_n"] = cfg.chains_n;
    j["samples_p"] = report.samples_p;
    j["seed"] = cfg.seed;
    j["penalty_mode"] = to_string(cfg.penalty_mode);
    j["payoff"] = to_string(model.kind());
    j["payoff_dim"] = model.sample_dim();
    j["record_stride"] = report.schedule.record_stride;
    return j;
}

inline nlohmann::ordered_json report_json(const EstimateReport& report, const PayoffModel& model) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "avar";
    j["avar"] = report.avar;
    j["var"] = report.var;
    j["portfolio"] = report.portfolio;
    j["per_chain_losses"] = report.per_chain_losses;
    nlohmann::ordered_json path = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.path_steps.size(); ++i) {
        path.push_back({report.path_steps[i], report.path_avar[i]});
    }
    j["path_avar"] = std::move(path);
    j["config_echo"] = config_echo_json(report, model);
    j["assumption_flags"] = report.assumption_flags;
    return j;
}

inline nlohmann::ordered_json evar_report_json(const EvarResult& result, const EvarConfig& cfg,
                                               const EstimateReport& base_echo,
                                               const PayoffModel& model) {
    const auto& atoms = result.winning_measure.atoms;
    double lo = atoms.front(), hi = atoms.front(), mean = 0.0;
    for (double a : atoms) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        mean += a;
    }
    mean /= static_cast<double>(atoms.size());

    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "evar";
    j["evar"] = result.value;
    j["winning_measure"] = {{"count", atoms.size()}, {"min", lo}, {"max", hi}, {"mean", mean}};
    j["candidates_evaluated"] = result.candidates_evaluated;
    j["levels_estimated"] = result.levels_estimated;
    nlohmann::ordered_json e;
    e["u"] = cfg.u;
    e["q_order"] = cfg.q_order;
    e["k_multiplier"] = cfg.k_multiplier;
    e["atoms_j"] = cfg.atoms_j;
    e["partitions"] = cfg.partitions;
    e["delta"] = cfg.resolved_delta();
    e["level_cells"] = cfg.level_cells;
    e["seed"] = cfg.seed;
    e["atom_law"] = cfg.forced_atom ? "forced" : "uniform[0,delta)";
    if (cfg.forced_atom) e["forced_atom"] = *cfg.forced_atom;
    j["evar_config"] = std::move(e);
    j["config_echo"] = config_echo_json(base_echo, model);
    j["assumption_flags"] = base_echo.assumption_flags;
    return j;
}

/// trace.csv: one row per recorded step, columns (step, avar, var, loss_std).
inline std::string trace_csv(const EstimateReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "step,avar,var,loss_std\n";
    for (std::size_t i = 0; i < report.path_steps.size(); ++i) {
        out << report.path_steps[i] << ',' << report.path_avar[i] << ',' << report.path_var[i]
            << ',' << report.path_loss_std[i] << '\n';
    }
    return out.str();
}

/// FNV-1a 64-bit digest, used to fingerprint input files in manifests.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw io_error("failed writing " + path);
}

/// Everything needed to rerun and audit an invocation: the exact command,
/// the fully resolved configuration, input digests and produced files.
/// Re-running the recorded command reproduces the outputs byte-for-byte
/// (wall_clock_ms aside).
struct RunManifest {
    std::string command;
    nlohmann::ordered_json resolved_config;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> input_digests;
    double wall_clock_ms = 0.0;
    std::vector<std::string> outputs;
};

inline nlohmann::ordered_json manifest_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["tool"] = "riskgrad";
    j["tool_version"] = kVersion;
    j["command"] = m.command;
    j["seed"] = m.seed;
    j["resolved_config"] = m.resolved_config;
    nlohmann::ordered_json digests = nlohmann::ordered_json::object();
    for (const auto& [path, digest] : m.input_digests) digests[path] = digest;
    j["input_digests"] = std::move(digests);
    j["wall_clock_ms"] = m.wall_clock_ms;
    j["outputs"] = m.outputs;
    return j;
}

} // namespace riskgrad
