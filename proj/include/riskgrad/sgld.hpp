#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riskgrad/errors.hpp"
#include "riskgrad/objective.hpp"
#include "riskgrad/parallel.hpp"
#include "riskgrad/rng.hpp"

namespace riskgrad {

// Discrete Langevin chain
//
//   Z_{k+1} = Z_k - grad l(Z_k) h + sqrt(2/lambda) dW,   dW ~ N(0, h I),
//
// run as N independent chains. Each chain draws from its own splittable
// stream (see rng.hpp), so an ensemble is a pure function of its config and
// of nothing else, in particular not of the thread count.

struct SgldConfig {
    double u = 0.95;
    double lambda = 1e8;
    double gamma = 1e-8;
    /// Exactly one of step_h / horizon_t must be positive. horizon_t sets
    /// step_h = horizon_t / steps_m^2.
    double step_h = 0.0;
    double horizon_t = 0.0;
    std::uint64_t steps_m = 10000;
    std::uint64_t chains_n = 5000;
    std::uint64_t seed = 0;
    PenaltyMode penalty_mode = PenaltyMode::FullState;
    /// Starting point; an empty portfolio means the zero vector.
    ChainState init_state;
    /// Trace recording stride; 0 picks max(1, steps_m / 100).
    std::uint64_t record_stride = 0;
};

/// Schedule resolved from (step_h | horizon_t). implied_t is the horizon for
/// which h = t / M^2, recorded so both parameterizations round-trip.
struct ResolvedSchedule {
    double h = 0.0;
    std::uint64_t steps_m = 0;
    double implied_t = 0.0;
    std::uint64_t record_stride = 1;
    bool stability_warning = false;
};

inline ResolvedSchedule resolve_schedule(const SgldConfig& cfg) {
    if ((cfg.step_h > 0.0) == (cfg.horizon_t > 0.0)) {
        throw argument_error("sgld: exactly one of step_h and horizon_t must be set");
    }
    if (!(cfg.u > 0.0 && cfg.u < 1.0)) throw argument_error("sgld: u must lie in (0,1)");
    if (!(cfg.lambda > 0.0)) throw argument_error("sgld: lambda must be > 0");
    if (!(cfg.gamma > 0.0)) throw argument_error("sgld: gamma must be > 0");
    if (cfg.chains_n == 0) throw argument_error("sgld: chains_n must be >= 1");

    ResolvedSchedule out;
    out.steps_m = cfg.steps_m;
    if (cfg.step_h > 0.0) {
        out.h = cfg.step_h;
    } else {
        if (cfg.steps_m == 0) throw argument_error("sgld: horizon_t requires steps_m >= 1");
        const double m = static_cast<double>(cfg.steps_m);
        out.h = cfg.horizon_t / (m * m);
    }
    out.implied_t = out.h * static_cast<double>(cfg.steps_m) * static_cast<double>(cfg.steps_m);
    out.record_stride = cfg.record_stride > 0
                            ? cfg.record_stride
                            : std::max<std::uint64_t>(1, cfg.steps_m / 100);
    // Stability condition h < 1/(2/(1-u) + gamma); the bound is always below
    // 1, so it subsumes the h < 1 requirement.
    out.stability_warning = out.h >= 1.0 / (2.0 / (1.0 - cfg.u) + cfg.gamma);
    return out;
}

/// States and objective values recorded along one chain, at stride multiples
/// plus the final step.
struct ChainTrace {
    std::vector<std::uint64_t> steps;
    std::vector<ChainState> states;
    std::vector<double> losses;
    std::uint64_t record_stride = 1;
};

namespace detail {

inline void check_consistent(const SgldConfig& cfg, const ObjectiveConfig& obj) {
    if (cfg.u != obj.u || cfg.gamma != obj.gamma || cfg.penalty_mode != obj.penalty_mode) {
        throw argument_error("sgld: chain and objective configs disagree on (u, gamma, penalty)");
    }
}

inline ChainState resolve_init(const SgldConfig& cfg, const PayoffModel& model) {
    ChainState z = cfg.init_state;
    if (z.r.empty() && model.portfolio_dim() > 0) {
        z.r.assign(model.portfolio_dim(), 0.0);
    }
    if (z.r.size() != model.portfolio_dim()) {
        throw argument_error("sgld: init state portfolio dim mismatch");
    }
    if (!z.finite()) throw argument_error("sgld: init state must be finite");
    return z;
}

} // namespace detail

/// One chain update. noise must be a standard-Gaussian vector already scaled
/// by sqrt(h) componentwise (the Brownian increment over one step).
inline ChainState step(const SgldConfig& cfg, const PayoffModel& model,
                       const ObjectiveConfig& obj, const ChainState& z,
                       std::span<const double> noise) {
    detail::check_consistent(cfg, obj);
    const ResolvedSchedule sched = resolve_schedule(cfg);
    if (noise.size() != 1 + model.portfolio_dim()) {
        throw argument_error("sgld: noise has wrong dimension");
    }
    const std::vector<double> g = grad(obj, model, z);
    const double noise_scale = std::sqrt(2.0 / cfg.lambda);
    ChainState next = z;
    next.m = z.m - g[0] * sched.h + noise_scale * noise[0];
    for (std::size_t k = 0; k < z.r.size(); ++k) {
        next.r[k] = z.r[k] - g[k + 1] * sched.h + noise_scale * noise[k + 1];
    }
    if (!next.finite()) throw divergence_error("sgld: step produced a non-finite state");
    return next;
}

/// Optional fresh-minibatch hook: refills the chain-local sample set before
/// every step, drawing from a dedicated per-chain stream. When unset (the
/// default) the run uses the one fixed SampleSet of the objective config.
using MinibatchSampler = std::function<void(SampleSet&, RngStream&)>;

struct RunOptions {
    unsigned threads = 0; // 0 = resolve from RISKGRAD_THREADS / hardware
    MinibatchSampler fresh_minibatch;
};

/// Runs chains_n independent chains from the common initial state and
/// records each trace. Results are invariant to the degree of parallelism.
inline std::vector<ChainTrace> run_ensemble(const SgldConfig& cfg, const PayoffModel& model,
                                            const ObjectiveConfig& obj,
                                            const RunOptions& options = {}) {
    detail::check_consistent(cfg, obj);
    obj.validate(model);
    const ResolvedSchedule sched = resolve_schedule(cfg);
    const ChainState init = detail::resolve_init(cfg, model);
    const std::size_t dim = 1 + model.portfolio_dim();
    const double sqrt_h = std::sqrt(sched.h);
    const double noise_scale = std::sqrt(2.0 / cfg.lambda);

    // Shared fast evaluator for the fixed-sample path.
    const ObjectiveEvaluator shared_eval(obj, model);

    std::vector<ChainTrace> traces(cfg.chains_n);
    const unsigned threads = options.threads > 0 ? options.threads : resolve_thread_count();

    parallel_for(cfg.chains_n, threads, [&](std::size_t chain) {
        RngStream noise_rng(cfg.seed, chain);

        // Chain-local objective when minibatching; otherwise the shared one.
        std::optional<RngStream> batch_rng;
        std::shared_ptr<SampleSet> local_samples;
        ObjectiveConfig local_obj = obj;
        const bool fresh = static_cast<bool>(options.fresh_minibatch);
        if (fresh) {
            batch_rng.emplace(mix_seed(cfg.seed, 0x6D696E69ULL), chain);
            local_samples = std::make_shared<SampleSet>(*obj.samples);
            local_obj.samples = local_samples;
        }

        ChainTrace& trace = traces[chain];
        trace.record_stride = sched.record_stride;
        auto record = [&](std::uint64_t at, const ChainState& state) {
            trace.steps.push_back(at);
            trace.states.push_back(state);
            trace.losses.push_back(fresh ? loss(local_obj, model, state)
                                         : shared_eval.loss_at(state));
        };

        ChainState z = init;
        record(0, z);

        std::vector<double> g(dim);
        for (std::uint64_t s = 1; s <= sched.steps_m; ++s) {
            if (fresh) {
                options.fresh_minibatch(*local_samples, *batch_rng);
                g = grad(local_obj, model, z);
            } else {
                shared_eval.grad_into(z, g);
            }
            z.m += -g[0] * sched.h + noise_scale * (sqrt_h * noise_rng.next_gaussian());
            for (std::size_t k = 0; k + 1 < dim; ++k) {
                z.r[k] += -g[k + 1] * sched.h + noise_scale * (sqrt_h * noise_rng.next_gaussian());
            }
            if (!z.finite()) {
                throw divergence_error("sgld: chain " + std::to_string(chain) +
                                       " diverged at step " + std::to_string(s));
            }
            if (s % sched.record_stride == 0 || s == sched.steps_m) record(s, z);
        }
    });

    return traces;
}

} // namespace riskgrad
