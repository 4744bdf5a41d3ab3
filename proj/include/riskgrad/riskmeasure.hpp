#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "riskgrad/avar.hpp"
#include "riskgrad/errors.hpp"
#include "riskgrad/rng.hpp"

namespace riskgrad {

// Estimation of general law-invariant convex risk measures through the
// truncated spectral representation
//
//   rho_delta(f) = sup_{gamma : beta(gamma) <= b}
//                     ( integral_[0,delta) avar_x(f) gamma(dx) - beta(gamma) ),
//
// with the supremum searched over empirical measures (1/J) sum_i delta_{x_i}
// of risk levels. The entropic value-at-risk instance uses the Renyi-entropy
// penalty built from sigma_gamma(x) = integral_0^x (1-v)^-1 gamma(dv).

/// Empirical measure of risk levels: J atoms in [0, delta) with uniform
/// weight 1/J.
struct DiscreteRiskLevelMeasure {
    std::vector<double> atoms;
    double delta = 0.5;

    std::size_t size() const { return atoms.size(); }

    void validate() const {
        if (atoms.empty()) throw argument_error("risk-level measure: needs at least one atom");
        if (!(delta > 0.0 && delta < 1.0)) {
            throw argument_error("risk-level measure: delta must lie in (0,1)");
        }
        for (double x : atoms) {
            if (!(x >= 0.0 && x < delta)) {
                throw argument_error("risk-level measure: atoms must lie in [0, delta)");
            }
        }
    }
};

struct EvarConfig {
    double u = 0.95;
    /// Renyi order; must exceed 1 + 1e-9 (the q -> 1 limit is approached,
    /// never taken).
    double q_order = 1.00001;
    double k_multiplier = 1e18;
    std::size_t atoms_j = 5000;
    std::size_t partitions = 5000;
    /// Upper truncation of the risk-level interval; 0 picks u + (1-u)/2.
    double delta = 0.0;
    /// Quadrature resolution available to user-supplied penalties; the
    /// built-in constraint integral is closed-form and ignores it.
    std::uint64_t quad_points = 1000000;
    std::uint64_t seed = 0;
    /// When set, every candidate consists of J copies of this atom
    /// (reduction / debugging aid).
    std::optional<double> forced_atom;
    /// AVaR levels are rounded to multiples of 1/level_cells before chain
    /// estimation and cached, bounding the number of ensemble runs.
    double level_cells = 1000.0;

    double resolved_delta() const { return delta > 0.0 ? delta : u + 0.5 * (1.0 - u); }

    void validate() const {
        if (!(u > 0.0 && u < 1.0)) throw argument_error("evar: u must lie in (0,1)");
        if (!(q_order > 1.0 + 1e-9)) throw argument_error("evar: q_order must exceed 1 + 1e-9");
        if (!(k_multiplier >= 0.0)) throw argument_error("evar: k must be >= 0");
        if (atoms_j == 0) throw argument_error("evar: atoms_j must be >= 1");
        if (partitions == 0) throw argument_error("evar: partitions must be >= 1");
        const double d = resolved_delta();
        if (!(d > 0.0 && d < 1.0)) throw argument_error("evar: delta must lie in (0,1)");
        if (!(level_cells >= 2.0)) throw argument_error("evar: level_cells must be >= 2");
        if (forced_atom && !(*forced_atom >= 0.0 && *forced_atom < d)) {
            throw argument_error("evar: forced atom must lie in [0, delta)");
        }
    }
};

// Exact value of integral_0^1 sigma_gamma(x)^q dx for a discrete measure.
//
// sigma_gamma is the step function (1/J) sum_i (1-x_i)^-1 1{x_i <= x}, so the
// integral is a finite sum of pow(level, q) * segment-length terms over the
// sorted atoms. No quadrature involved.
inline double sigma_power_integral(const DiscreteRiskLevelMeasure& measure, double q_order) {
    if (!(q_order > 1.0)) throw argument_error("sigma_power_integral: q_order must exceed 1");
    if (measure.atoms.empty()) throw argument_error("sigma_power_integral: no atoms");
    for (double x : measure.atoms) {
        if (x >= 1.0) throw singularity_error("sigma_power_integral: atom at or beyond 1");
        if (!(x >= 0.0)) throw argument_error("sigma_power_integral: atoms must lie in [0,1)");
    }

    std::vector<double> sorted = measure.atoms;
    std::sort(sorted.begin(), sorted.end());
    const double inv_j = 1.0 / static_cast<double>(sorted.size());

    double integral = 0.0;
    double sigma = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        sigma += inv_j / (1.0 - sorted[i]);
        const double right = (i + 1 < sorted.size()) ? sorted[i + 1] : 1.0;
        const double width = right - sorted[i];
        if (width > 0.0) integral += std::pow(sigma, q_order) * width;
    }
    return integral;
}

namespace detail {

// Relative slack treated as exact feasibility. The closed-form integral and
// the threshold pow(1/(1-u), q-1) agree only to a few ulp when a measure sits
// exactly on the constraint boundary, and k ~ 1e18 would blow such rounding
// residue up into a phantom penalty.
inline constexpr double kFeasibilitySlack = 1e-11;

} // namespace detail

/// Constraint excess max(0, integral sigma^q - (1/(1-u))^(q-1)), with
/// boundary rounding residue clamped to zero. Zero means feasible.
inline double evar_constraint_excess(const DiscreteRiskLevelMeasure& measure,
                                     const EvarConfig& cfg) {
    const double threshold = std::pow(1.0 / (1.0 - cfg.u), cfg.q_order - 1.0);
    const double excess = sigma_power_integral(measure, cfg.q_order) - threshold;
    if (excess <= detail::kFeasibilitySlack * threshold) return 0.0;
    return excess;
}

/// Penalized search objective
///   F = (1/J) sum_i avar_values[i] - k * excess(measure).
inline double evar_objective(const DiscreteRiskLevelMeasure& measure,
                             std::span<const double> avar_values, const EvarConfig& cfg) {
    cfg.validate();
    if (avar_values.size() != measure.size()) {
        throw argument_error("evar_objective: avar_values length does not match atoms");
    }
    double mean = 0.0;
    for (double v : avar_values) mean += v;
    mean /= static_cast<double>(avar_values.size());
    return mean - cfg.k_multiplier * evar_constraint_excess(measure, cfg);
}

inline double evar_objective(const DiscreteRiskLevelMeasure& measure,
                             const std::vector<double>& avar_values, const EvarConfig& cfg) {
    return evar_objective(measure, std::span<const double>(avar_values), cfg);
}

/// Generic truncated-representation penalty: maps a candidate measure to its
/// penalty value (may be +infinity).
using PenaltyFn = std::function<double(const DiscreteRiskLevelMeasure&)>;

struct EvarResult {
    double value = 0.0;
    DiscreteRiskLevelMeasure winning_measure;
    std::size_t candidates_evaluated = 0;
    std::size_t candidates_feasible = 0;
    std::size_t levels_estimated = 0;
};

/// Test/diagnostic hook invoked for every evaluated candidate.
using CandidateObserver =
    std::function<void(const DiscreteRiskLevelMeasure&, double objective, bool feasible)>;

namespace detail {

// Candidates are regenerable by index: candidate i draws its J atoms from
// stream(mix(seed, salt), i), i.i.d. uniform on [0, delta). This avoids
// storing partitions * J atoms and keeps the search order-free.
inline constexpr std::uint64_t kCandidateSalt = 0x7061727469746EULL;

inline void fill_candidate(const EvarConfig& cfg, std::size_t index,
                           DiscreteRiskLevelMeasure& out) {
    out.delta = cfg.resolved_delta();
    out.atoms.resize(cfg.atoms_j);
    if (cfg.forced_atom) {
        std::fill(out.atoms.begin(), out.atoms.end(), *cfg.forced_atom);
        return;
    }
    RngStream rng(mix_seed(cfg.seed, kCandidateSalt), index);
    for (auto& a : out.atoms) a = rng.next_uniform() * out.delta;
}

struct LevelCache {
    double cells;
    std::map<long long, double> avar_by_key;

    long long key_of(double level) const {
        long long k = std::llround(level * cells);
        return std::min<long long>(std::max<long long>(k, 0),
                                   static_cast<long long>(cells) - 1);
    }
    // key/cells is a correctly rounded quotient, so a level that is itself a
    // short decimal (0.95) maps back to exactly that double. The zero cell
    // is evaluated at half a cell to stay inside (0,1).
    double level_of(long long key) const {
        return key == 0 ? 0.5 / cells : static_cast<double>(key) / cells;
    }
};

inline LevelCache build_level_cache(const EvarConfig& cfg, const SgldConfig& sgld_cfg,
                                    const PayoffModel& model, const ObjectiveConfig& obj,
                                    const RunOptions& options,
                                    const std::vector<DiscreteRiskLevelMeasure>& extra) {
    LevelCache cache{cfg.level_cells, {}};

    std::set<long long> keys;
    DiscreteRiskLevelMeasure scratch;
    for (std::size_t i = 0; i < cfg.partitions; ++i) {
        fill_candidate(cfg, i, scratch);
        for (double a : scratch.atoms) keys.insert(cache.key_of(a));
        if (cfg.forced_atom) break; // all candidates identical
    }
    for (const auto& m : extra) {
        for (double a : m.atoms) keys.insert(cache.key_of(a));
    }

    const std::vector<long long> key_list(keys.begin(), keys.end());
    std::vector<double> values(key_list.size());
    const unsigned threads = options.threads > 0 ? options.threads : resolve_thread_count();

    // One ensemble per level; levels share the master seed, so nearby levels
    // see common noise and the level -> AVaR curve stays smooth.
    parallel_for(key_list.size(), threads, [&](std::size_t i) {
        const double level = cache.level_of(key_list[i]);
        SgldConfig level_cfg = sgld_cfg;
        level_cfg.u = level;
        level_cfg.record_stride = std::max<std::uint64_t>(1, level_cfg.steps_m);
        ObjectiveConfig level_obj = obj;
        level_obj.u = level;
        RunOptions inner = options;
        inner.threads = 1;
        values[i] = estimate_avar(level_cfg, model, level_obj, inner).avar;
    });

    for (std::size_t i = 0; i < key_list.size(); ++i) cache.avar_by_key[key_list[i]] = values[i];
    return cache;
}

struct Score {
    double objective = 0.0;
    bool eligible = false; // may win the search
    bool feasible = false; // satisfies the constraint (diagnostic)
};

struct SearchSpec {
    std::function<Score(const DiscreteRiskLevelMeasure&, double mean_avar)> score;
};

inline EvarResult run_search(const EvarConfig& cfg, const SgldConfig& sgld_cfg,
                             const PayoffModel& model, const ObjectiveConfig& obj,
                             const RunOptions& options, const SearchSpec& spec,
                             const std::vector<DiscreteRiskLevelMeasure>& extra,
                             const CandidateObserver& observer) {
    cfg.validate();
    for (const auto& m : extra) m.validate();

    const LevelCache cache = build_level_cache(cfg, sgld_cfg, model, obj, options, extra);

    EvarResult result;
    result.levels_estimated = cache.avar_by_key.size();
    bool have_winner = false;

    auto consider = [&](const DiscreteRiskLevelMeasure& measure) {
        double mean = 0.0;
        for (double a : measure.atoms) mean += cache.avar_by_key.at(cache.key_of(a));
        mean /= static_cast<double>(measure.size());

        const Score score = spec.score(measure, mean);
        ++result.candidates_evaluated;
        if (score.feasible) ++result.candidates_feasible;
        if (observer) observer(measure, score.objective, score.feasible);
        if (score.eligible && (!have_winner || score.objective > result.value)) {
            have_winner = true;
            result.value = score.objective;
            result.winning_measure = measure;
        }
    };

    for (const auto& m : extra) consider(m);
    DiscreteRiskLevelMeasure scratch;
    for (std::size_t i = 0; i < cfg.partitions; ++i) {
        fill_candidate(cfg, i, scratch);
        consider(scratch);
    }

    if (!have_winner) {
        throw infeasible_error("risk-measure search: every candidate measure was infeasible");
    }
    return result;
}

} // namespace detail

/// Entropic value-at-risk estimate: maximum of the penalized objective over
/// `partitions` random candidate measures. The soft penalty k * excess makes
/// every candidate admissible, so this never throws for feasibility reasons.
inline EvarResult estimate_evar(const EvarConfig& cfg, const SgldConfig& sgld_cfg,
                                const PayoffModel& model, const ObjectiveConfig& obj,
                                const RunOptions& options = {},
                                const CandidateObserver& observer = nullptr) {
    detail::SearchSpec spec;
    spec.score = [&cfg](const DiscreteRiskLevelMeasure& m, double mean_avar) {
        const double excess = evar_constraint_excess(m, cfg);
        return detail::Score{mean_avar - cfg.k_multiplier * excess, true, excess == 0.0};
    };
    return detail::run_search(cfg, sgld_cfg, model, obj, options, spec, {}, observer);
}

/// Truncated-representation estimate for a user-supplied penalty: candidates
/// with penalty above bound_b are skipped, the rest score
/// mean-AVaR - penalty. Throws infeasible_error when nothing qualifies.
inline EvarResult estimate_general(const PenaltyFn& penalty, double bound_b,
                                   const EvarConfig& cfg, const SgldConfig& sgld_cfg,
                                   const PayoffModel& model, const ObjectiveConfig& obj,
                                   const RunOptions& options = {},
                                   const std::vector<DiscreteRiskLevelMeasure>& extra_candidates = {},
                                   const CandidateObserver& observer = nullptr) {
    if (!penalty) throw argument_error("estimate_general: penalty function required");
    detail::SearchSpec spec;
    spec.score = [&](const DiscreteRiskLevelMeasure& m, double mean_avar) {
        const double beta = penalty(m);
        if (!(beta <= bound_b)) return detail::Score{0.0, false, false};
        return detail::Score{mean_avar - beta, true, true};
    };
    return detail::run_search(cfg, sgld_cfg, model, obj, options, spec, extra_candidates,
                              observer);
}

} // namespace riskgrad
