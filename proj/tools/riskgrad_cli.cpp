// riskgrad command line tool
//
//   riskgrad estimate avar ...   ensemble AVaR/VaR/portfolio estimation
//   riskgrad estimate evar ...   entropic value-at-risk via the level search
//   riskgrad bound ...           deviation constant Psi and tail bound
//
// Every estimation run writes report.json, trace.csv, manifest.json and
// optionally trace.svg into --out. Reports are byte-stable: rerunning with
// identical flags and seed reproduces them exactly at any thread count.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "riskgrad/avar.hpp"
#include "riskgrad/ingest.hpp"
#include "riskgrad/report.hpp"
#include "riskgrad/riskmeasure.hpp"
#include "riskgrad/svg.hpp"
#include "riskgrad/version.hpp"

namespace {

using namespace riskgrad;

constexpr std::uint64_t kSampleSeedSalt = 0xDA7A5EEDULL;

struct CommonFlags {
    double level = 0.95;
    double lambda = 1e8;
    double gamma = 1e-8;
    double step_size = 0.0;
    double horizon_t = 0.0;
    std::uint64_t steps_m = 10000;
    std::uint64_t chains_n = 5000;
    std::uint64_t samples_p = 0; // 0 = default P = N (or the full data file)
    std::string payoff = "identity";
    std::string data_path;
    std::vector<std::string> gaussian_specs;
    std::uint64_t seed = 0;
    std::string penalty = "full";
    std::uint64_t record_stride = 0;
    std::string out_dir = ".";
    bool svg = false;
    std::string preset;
};

struct EvarFlags {
    std::size_t atoms_j = 5000;
    std::size_t partitions = 5000;
    double q_order = 1.00001;
    double k_multiplier = 1e18;
    double delta = 0.0;
    double force_atom = -1.0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--level,-u", f.level, "Risk level u in (0,1)")->capture_default_str();
    cmd->add_option("--lambda", f.lambda, "Inverse temperature")->capture_default_str();
    cmd->add_option("--gamma", f.gamma, "Quadratic penalty weight")->capture_default_str();
    cmd->add_option("--step-size", f.step_size, "Chain step size h (default 1e-4)");
    cmd->add_option("--horizon-t", f.horizon_t, "Horizon t; sets h = t/M^2");
    cmd->add_option("--steps,-M", f.steps_m, "Chain steps M")->capture_default_str();
    cmd->add_option("--chains,-N", f.chains_n, "Number of chains N")->capture_default_str();
    cmd->add_option("--samples,-P", f.samples_p, "Sample count P (default: P = N)");
    cmd->add_option("--payoff", f.payoff, "identity|linear|softmax")->capture_default_str();
    cmd->add_option("--data", f.data_path, "CSV price file; increments feed the estimator");
    cmd->add_option("--gaussian", f.gaussian_specs,
                    "Synthetic instrument 'mu=0,sigma=1' (repeatable)");
    cmd->add_option("--seed", f.seed, "Master seed")->capture_default_str();
    cmd->add_option("--penalty", f.penalty, "first|full")->capture_default_str();
    cmd->add_option("--record-stride", f.record_stride, "Trace stride (default M/100)");
    cmd->add_option("--out", f.out_dir, "Output directory")->capture_default_str();
    cmd->add_flag("--svg", f.svg, "Also write trace.svg");
    cmd->add_option("--preset", f.preset, "'desk': shrink N and M 10x for quick runs");
}

void apply_preset(const CLI::App* cmd, CommonFlags& f) {
    if (f.preset.empty()) return;
    if (f.preset != "desk") throw argument_error("unknown preset: " + f.preset);
    if (cmd->count("--chains") == 0) f.chains_n = 500;
    if (cmd->count("--steps") == 0) f.steps_m = 1000;
}

oracles::GaussianSpec parse_gaussian_spec(const std::string& text) {
    oracles::GaussianSpec spec;
    bool saw_mu = false, saw_sigma = false;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw argument_error("bad --gaussian item: " + item);
        const std::string key = item.substr(0, eq);
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw argument_error("bad --gaussian value: " + item);
        }
        if (key == "mu") {
            spec.mu = value;
            saw_mu = true;
        } else if (key == "sigma") {
            spec.sigma = value;
            saw_sigma = true;
        } else {
            throw argument_error("bad --gaussian key: " + key);
        }
    }
    if (!saw_mu || !saw_sigma) throw argument_error("--gaussian needs mu=...,sigma=...");
    return spec;
}

PayoffModel make_payoff(const std::string& name, std::size_t dim) {
    if (name == "identity") {
        if (dim != 1) throw argument_error("identity payoff needs exactly one instrument");
        return PayoffModel::identity();
    }
    if (name == "linear") return PayoffModel::linear_pnl(dim);
    if (name == "softmax") return PayoffModel::softmax_portfolio(dim);
    throw argument_error("unknown payoff: " + name);
}

struct PreparedRun {
    SgldConfig sgld;
    ObjectiveConfig objective;
    PayoffModel model = PayoffModel::identity();
    std::vector<std::pair<std::string, std::string>> input_digests;
};

PreparedRun prepare_run(const CommonFlags& f) {
    if (f.data_path.empty() == f.gaussian_specs.empty()) {
        throw argument_error("exactly one of --data and --gaussian is required");
    }
    if ((f.step_size > 0.0) && (f.horizon_t > 0.0)) {
        throw argument_error("give at most one of --step-size and --horizon-t");
    }

    PreparedRun run;
    std::shared_ptr<const SampleSet> samples;
    std::size_t dim = 0;

    if (!f.data_path.empty()) {
        run.input_digests.emplace_back(f.data_path, fnv1a_hex(read_file(f.data_path)));
        const ingest::PriceTable table = ingest::load_csv(f.data_path);
        SampleSet increments = ingest::to_increments(table);
        if (f.samples_p > 0) {
            if (f.samples_p > increments.rows) {
                throw argument_error("--samples exceeds the " + std::to_string(increments.rows) +
                                     " increments available in " + f.data_path);
            }
            increments.data.resize(f.samples_p * increments.cols);
            increments.rows = f.samples_p;
        }
        dim = increments.cols;
        samples = std::make_shared<SampleSet>(std::move(increments));
    } else {
        std::vector<oracles::GaussianSpec> specs;
        specs.reserve(f.gaussian_specs.size());
        for (const auto& text : f.gaussian_specs) specs.push_back(parse_gaussian_spec(text));
        dim = specs.size();
        const std::size_t p = f.samples_p > 0 ? f.samples_p : f.chains_n;
        samples = ingest::gaussian_sampler(specs, p, mix_seed(f.seed, kSampleSeedSalt));
    }

    run.model = make_payoff(f.payoff, dim);

    PenaltyMode penalty;
    if (f.penalty == "first") {
        penalty = PenaltyMode::FirstCoordinate;
    } else if (f.penalty == "full") {
        penalty = PenaltyMode::FullState;
    } else {
        throw argument_error("unknown penalty mode: " + f.penalty);
    }

    run.objective.u = f.level;
    run.objective.gamma = f.gamma;
    run.objective.penalty_mode = penalty;
    run.objective.samples = samples;
    run.objective.validate(run.model);

    run.sgld.u = f.level;
    run.sgld.lambda = f.lambda;
    run.sgld.gamma = f.gamma;
    if (f.horizon_t > 0.0) {
        run.sgld.horizon_t = f.horizon_t;
    } else {
        run.sgld.step_h = f.step_size > 0.0 ? f.step_size : 1e-4;
    }
    run.sgld.steps_m = f.steps_m;
    run.sgld.chains_n = f.chains_n;
    run.sgld.seed = f.seed;
    run.sgld.penalty_mode = penalty;
    run.sgld.record_stride = f.record_stride;
    resolve_schedule(run.sgld);
    return run;
}

std::string quote_command(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        const std::string arg = argv[i];
        if (arg.find(' ') != std::string::npos) {
            out += '"' + arg + '"';
        } else {
            out += arg;
        }
    }
    return out;
}

void write_outputs(const std::string& out_dir, const RunManifest& manifest_base,
                   const nlohmann::ordered_json& report, const std::string& trace,
                   const std::optional<std::string>& svg) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory " + out_dir);

    RunManifest manifest = manifest_base;
    manifest.outputs = {"report.json", "trace.csv"};
    if (svg) manifest.outputs.push_back("trace.svg");
    manifest.outputs.push_back("manifest.json");

    const fs::path dir(out_dir);
    write_file((dir / "report.json").string(), report.dump(2) + "\n");
    write_file((dir / "trace.csv").string(), trace);
    if (svg) write_file((dir / "trace.svg").string(), *svg);
    write_file((dir / "manifest.json").string(), manifest_json(manifest).dump(2) + "\n");
}

int cmd_avar(const CommonFlags& f, const std::string& command) {
    const auto start = std::chrono::steady_clock::now();
    const PreparedRun run = prepare_run(f);
    const EstimateReport report = estimate_avar(run.sgld, run.model, run.objective);

    const nlohmann::ordered_json report_j = report_json(report, run.model);
    const std::string trace = trace_csv(report);

    std::optional<std::string> svg;
    if (f.svg) {
        SvgSeries avar_series, var_series;
        avar_series.label = "AVaR";
        avar_series.color = "#1f77b4";
        var_series.label = "VaR";
        var_series.color = "#d62728";
        for (std::size_t i = 0; i < report.path_steps.size(); ++i) {
            avar_series.x.push_back(static_cast<double>(report.path_steps[i]));
            avar_series.y.push_back(report.path_avar[i]);
            var_series.x.push_back(static_cast<double>(report.path_steps[i]));
            var_series.y.push_back(report.path_var[i]);
        }
        svg = render_svg_chart({avar_series, var_series}, "Estimate paths");
    }

    RunManifest manifest;
    manifest.command = command;
    manifest.seed = f.seed;
    manifest.resolved_config = config_echo_json(report, run.model);
    manifest.input_digests = run.input_digests;
    manifest.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    write_outputs(f.out_dir, manifest, report_j, trace, svg);

    std::cout << "avar " << report.avar << "  var " << report.var << '\n';
    return 0;
}

int cmd_evar(const CommonFlags& f, const EvarFlags& e, const std::string& command) {
    const auto start = std::chrono::steady_clock::now();
    const PreparedRun run = prepare_run(f);

    EvarConfig cfg;
    cfg.u = f.level;
    cfg.q_order = e.q_order;
    cfg.k_multiplier = e.k_multiplier;
    cfg.atoms_j = e.atoms_j;
    cfg.partitions = e.partitions;
    cfg.delta = e.delta;
    cfg.seed = f.seed;
    if (e.force_atom >= 0.0) cfg.forced_atom = e.force_atom;
    cfg.validate();

    std::vector<double> best_path;
    std::vector<double> objective_path;
    CandidateObserver observer = [&](const DiscreteRiskLevelMeasure&, double objective, bool) {
        objective_path.push_back(objective);
        best_path.push_back(best_path.empty() ? objective
                                              : std::max(best_path.back(), objective));
    };

    const EvarResult result =
        estimate_evar(cfg, run.sgld, run.model, run.objective, RunOptions{}, observer);

    // An echo run is not needed for the report: reuse the resolved schedule.
    EstimateReport echo;
    echo.config_echo = run.sgld;
    echo.schedule = resolve_schedule(run.sgld);
    echo.samples_p = run.objective.samples->rows;
    echo.assumption_flags = run.model.assumption_flags();
    if (echo.schedule.stability_warning) {
        echo.assumption_flags.push_back(
            "warning: step size exceeds the stability bound 1/(2/(1-u)+gamma)");
    }

    const nlohmann::ordered_json report_j = evar_report_json(result, cfg, echo, run.model);

    std::ostringstream trace;
    trace.precision(17);
    trace << "candidate,objective,best\n";
    for (std::size_t i = 0; i < objective_path.size(); ++i) {
        trace << i << ',' << objective_path[i] << ',' << best_path[i] << '\n';
    }

    std::optional<std::string> svg;
    if (f.svg) {
        SvgSeries best_series;
        best_series.label = "best objective";
        for (std::size_t i = 0; i < best_path.size(); ++i) {
            best_series.x.push_back(static_cast<double>(i));
            best_series.y.push_back(best_path[i]);
        }
        svg = render_svg_chart({best_series}, "Search progress");
    }

    RunManifest manifest;
    manifest.command = command;
    manifest.seed = f.seed;
    manifest.resolved_config = report_j["evar_config"];
    manifest.input_digests = run.input_digests;
    manifest.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    write_outputs(f.out_dir, manifest, report_j, trace.str(), svg);

    std::cout << "evar " << result.value << '\n';
    return 0;
}

int cmd_bound(std::uint64_t steps_m, double t, double u, double lambda, double epsilon,
              std::uint64_t chains_n) {
    const double psi = psi_constant(steps_m, t, u, lambda);
    const double bound = deviation_probability_bound(epsilon, chains_n, psi);
    std::cout.precision(10);
    std::cout << "Psi(M=" << steps_m << ", t=" << t << ", u=" << u << ", lambda=" << lambda
              << ") = " << psi << '\n';
    std::cout << "P(|error| >= " << epsilon << ") <= " << bound << "  (N=" << chains_n << ")\n";
    std::cout << "note: " << deviation_bound_caveat() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SGLD estimation of optimized AVaR and law-invariant risk measures"};
    app.set_version_flag("--version", riskgrad::kVersion);
    app.require_subcommand(1);

    CLI::App* estimate = app.add_subcommand("estimate", "Run an estimation");
    estimate->require_subcommand(1);

    CommonFlags avar_flags;
    CLI::App* avar_cmd = estimate->add_subcommand("avar", "Optimized AVaR/VaR/portfolio");
    add_common_flags(avar_cmd, avar_flags);

    CommonFlags evar_flags;
    EvarFlags evar_extra;
    CLI::App* evar_cmd = estimate->add_subcommand("evar", "Entropic value-at-risk");
    add_common_flags(evar_cmd, evar_flags);
    evar_cmd->add_option("--atoms,-J", evar_extra.atoms_j, "Atoms per candidate measure")
        ->capture_default_str();
    evar_cmd->add_option("--partitions", evar_extra.partitions, "Random candidate measures")
        ->capture_default_str();
    evar_cmd->add_option("--q-order", evar_extra.q_order, "Renyi order q > 1")
        ->capture_default_str();
    evar_cmd->add_option("--k", evar_extra.k_multiplier, "Constraint penalty multiplier")
        ->capture_default_str();
    evar_cmd->add_option("--delta", evar_extra.delta, "Level truncation (default u+(1-u)/2)");
    evar_cmd->add_option("--force-atom", evar_extra.force_atom,
                         "Use this atom for every candidate (reduction aid)");

    std::uint64_t bound_m = 100;
    double bound_t = 1.0, bound_u = 0.95, bound_lambda = 1e8, bound_eps = 0.01;
    std::uint64_t bound_n = 5000;
    CLI::App* bound_cmd = app.add_subcommand("bound", "Deviation constant and tail bound");
    bound_cmd->add_option("--steps,-M", bound_m, "Chain steps M")->capture_default_str();
    bound_cmd->add_option("--horizon-t", bound_t, "Horizon t")->capture_default_str();
    bound_cmd->add_option("--level,-u", bound_u, "Risk level")->capture_default_str();
    bound_cmd->add_option("--lambda", bound_lambda, "Inverse temperature")->capture_default_str();
    bound_cmd->add_option("--epsilon", bound_eps, "Deviation size")->capture_default_str();
    bound_cmd->add_option("--chains,-N", bound_n, "Ensemble size N")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = quote_command(argc, argv);
    try {
        if (avar_cmd->parsed()) {
            apply_preset(avar_cmd, avar_flags);
            return cmd_avar(avar_flags, command);
        }
        if (evar_cmd->parsed()) {
            apply_preset(evar_cmd, evar_flags);
            return cmd_evar(evar_flags, evar_extra, command);
        }
        if (bound_cmd->parsed()) {
            return cmd_bound(bound_m, bound_t, bound_u, bound_lambda, bound_eps, bound_n);
        }
    } catch (const riskgrad::divergence_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const riskgrad::parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const riskgrad::io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const riskgrad::argument_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
