#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "riskgrad/errors.hpp"
#include "riskgrad/payoff.hpp"

namespace riskgrad {

/// Chain iterate z = (m, r): VaR proxy in the first coordinate, portfolio in
/// the remaining d. For the Identity payoff r is empty and the state is (m).
struct ChainState {
    double m = 0.0;
    std::vector<double> r;

    std::size_t dim() const { return 1 + r.size(); }

    bool finite() const {
        if (!std::isfinite(m)) return false;
        return std::all_of(r.begin(), r.end(), [](double x) { return std::isfinite(x); });
    }
};

/// P independent draws of the risk-factor vector S, row-major.
struct SampleSet {
    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    SampleSet() = default;
    SampleSet(std::size_t p, std::size_t d) : data(p * d, 0.0), rows(p), cols(d) {}

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data.data() + i * cols, cols);
    }
    std::span<double> row(std::size_t i) {
        return std::span<double>(data.data() + i * cols, cols);
    }
};

/// Which coordinates the quadratic penalty (gamma/2)*pen(z) touches.
/// FirstCoordinate penalizes m^2 only; FullState penalizes ||z||^2, which
/// keeps the objective coercive in every coordinate for every payoff and is
/// therefore the default.
enum class PenaltyMode { FirstCoordinate, FullState };

inline const char* to_string(PenaltyMode p) {
    return p == PenaltyMode::FirstCoordinate ? "first" : "full";
}

struct ObjectiveConfig {
    double u = 0.95;
    double gamma = 1e-8;
    PenaltyMode penalty_mode = PenaltyMode::FullState;
    std::shared_ptr<const SampleSet> samples;

    void validate(const PayoffModel& model) const {
        if (!(u > 0.0 && u < 1.0)) throw argument_error("objective: u must lie in (0,1)");
        if (!(gamma > 0.0)) throw argument_error("objective: gamma must be > 0");
        if (!samples || samples->rows == 0) throw argument_error("objective: empty sample set");
        if (samples->cols != model.sample_dim()) {
            throw argument_error("objective: sample dim " + std::to_string(samples->cols) +
                                 " does not match payoff dim " +
                                 std::to_string(model.sample_dim()));
        }
    }
};

namespace detail {

inline double penalty_value(const ObjectiveConfig& cfg, const ChainState& z) {
    double pen = z.m * z.m;
    if (cfg.penalty_mode == PenaltyMode::FullState) {
        for (double x : z.r) pen += x * x;
    }
    return pen;
}

} // namespace detail

// Sampled penalized objective
//
//   l(z) = (1/P) sum_p (1/(1-u)) (f(r, S^p) - m)^+  +  m  +  (gamma/2) pen(z).
//
// This is the reference path; the evaluator below produces the same values
// through a faster route when the payoff admits one.
inline double loss(const ObjectiveConfig& cfg, const PayoffModel& model, const ChainState& z) {
    cfg.validate(model);
    if (z.r.size() != model.portfolio_dim()) {
        throw argument_error("loss: state portfolio dim mismatch");
    }
    const SampleSet& s = *cfg.samples;
    double acc = 0.0;
    for (std::size_t p = 0; p < s.rows; ++p) {
        const double f = model.evaluate(z.r, s.row(p));
        if (f > z.m) acc += f - z.m;
    }
    const double tail = acc / ((1.0 - cfg.u) * static_cast<double>(s.rows));
    return tail + z.m + 0.5 * cfg.gamma * detail::penalty_value(cfg, z);
}

// (Sub)gradient of the sampled objective, d+1 coordinates:
//
//   d/dm = 1 + gamma_m m - (1/((1-u) P)) sum_p 1{f(r,S^p) >= m}
//   d/dr = (1/((1-u) P)) sum_p grad_r f(r,S^p) 1{f(r,S^p) >= m} + gamma_r r
//
// with (gamma_m, gamma_r) = (gamma, 0) under FirstCoordinate and
// (gamma, gamma) under FullState. Ties use the >= convention, so at kinks the
// returned vector is a valid subgradient.
inline std::vector<double> grad(const ObjectiveConfig& cfg, const PayoffModel& model,
                                const ChainState& z) {
    cfg.validate(model);
    if (z.r.size() != model.portfolio_dim()) {
        throw argument_error("grad: state portfolio dim mismatch");
    }
    const SampleSet& s = *cfg.samples;
    const std::size_t d = model.portfolio_dim();
    const double inv = 1.0 / ((1.0 - cfg.u) * static_cast<double>(s.rows));

    std::vector<double> g(d + 1, 0.0);
    std::size_t hits = 0;
    for (std::size_t p = 0; p < s.rows; ++p) {
        const double f = model.evaluate(z.r, s.row(p));
        if (f >= z.m) {
            ++hits;
            if (d > 0) {
                std::vector<double> gf = model.grad_r(z.r, s.row(p));
                for (std::size_t k = 0; k < d; ++k) g[k + 1] += gf[k];
            }
        }
    }
    g[0] = 1.0 + cfg.gamma * z.m - inv * static_cast<double>(hits);
    const double gamma_r = cfg.penalty_mode == PenaltyMode::FullState ? cfg.gamma : 0.0;
    for (std::size_t k = 0; k < d; ++k) g[k + 1] = inv * g[k + 1] + gamma_r * z.r[k];
    return g;
}

// Per-run evaluator for the sampled objective.
//
// For payoffs whose values do not depend on r (Identity: the state is just m)
// the f(S^p) are fixed for the whole run, so they are sorted once and tail
// sums come from a suffix table plus one binary search. That turns each chain
// step from O(P) into O(log P), which is what makes dense level sweeps cheap.
// All other payoffs go through the reference loops above.
class ObjectiveEvaluator {
  public:
    ObjectiveEvaluator(ObjectiveConfig cfg, PayoffModel model)
        : cfg_(std::move(cfg)), model_(std::move(model)) {
        cfg_.validate(model_);
        inv_ = 1.0 / ((1.0 - cfg_.u) * static_cast<double>(cfg_.samples->rows));
        if (model_.portfolio_dim() == 0) {
            const SampleSet& s = *cfg_.samples;
            sorted_.resize(s.rows);
            for (std::size_t p = 0; p < s.rows; ++p) sorted_[p] = s.row(p)[0];
            std::sort(sorted_.begin(), sorted_.end());
            suffix_.assign(s.rows + 1, 0.0);
            for (std::size_t i = s.rows; i-- > 0;) suffix_[i] = suffix_[i + 1] + sorted_[i];
        }
    }

    const ObjectiveConfig& config() const { return cfg_; }
    const PayoffModel& model() const { return model_; }
    std::size_t state_dim() const { return 1 + model_.portfolio_dim(); }

    double loss_at(const ChainState& z) const {
        if (sorted_.empty()) return loss(cfg_, model_, z);
        const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), z.m);
        const std::size_t k = static_cast<std::size_t>(it - sorted_.begin());
        const double count = static_cast<double>(sorted_.size() - k);
        const double tail = (suffix_[k] - count * z.m) * inv_;
        return tail + z.m + 0.5 * cfg_.gamma * detail::penalty_value(cfg_, z);
    }

    /// Writes the (sub)gradient into out (size d+1).
    void grad_into(const ChainState& z, std::vector<double>& out) const {
        if (sorted_.empty()) {
            out = grad(cfg_, model_, z);
            return;
        }
        const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), z.m);
        const double count = static_cast<double>(sorted_.size() -
                                                 static_cast<std::size_t>(it - sorted_.begin()));
        out.assign(1, 1.0 + cfg_.gamma * z.m - inv_ * count);
    }

  private:
    ObjectiveConfig cfg_;
    PayoffModel model_;
    double inv_ = 0.0;
    std::vector<double> sorted_; // empty unless the fast path applies
    std::vector<double> suffix_;
};

} // namespace riskgrad
