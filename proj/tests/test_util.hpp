#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "riskgrad/objective.hpp"
#include "riskgrad/payoff.hpp"
#include "riskgrad/riskmeasure.hpp"
#include "riskgrad/rng.hpp"

namespace testutil {

/// Central finite difference of a scalar function of a vector, step per
/// coordinate scaled by the coordinate magnitude.
inline std::vector<double> central_fd(const std::function<double(std::span<const double>)>& fn,
                                      std::vector<double> x, double base_step = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double step = base_step * std::max(1.0, std::abs(x[k]));
        const double saved = x[k];
        x[k] = saved + step;
        const double up = fn(x);
        x[k] = saved - step;
        const double down = fn(x);
        x[k] = saved;
        g[k] = (up - down) / (2.0 * step);
    }
    return g;
}

/// Rockafellar-Uryasev objective q + (1/((1-u)n)) sum (x-q)^+.
inline double ru_objective(std::span<const double> samples, double u, double q) {
    double acc = 0.0;
    for (double x : samples) {
        if (x > q) acc += x - q;
    }
    return q + acc / ((1.0 - u) * static_cast<double>(samples.size()));
}

/// Brute-force minimum of the RU objective: coarse grid over the sample
/// range, then a fine grid around the coarse argmin. Independent of the
/// sorted-sample closed form it is used to check.
inline double ru_grid_min(std::span<const double> samples, double u) {
    double lo = samples[0], hi = samples[0];
    for (double x : samples) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    lo -= 1.0;
    hi += 1.0;

    auto scan = [&](double a, double b, int points, double& best_q) {
        double best = ru_objective(samples, u, a);
        best_q = a;
        for (int i = 1; i <= points; ++i) {
            const double q = a + (b - a) * static_cast<double>(i) / points;
            const double v = ru_objective(samples, u, q);
            if (v < best) {
                best = v;
                best_q = q;
            }
        }
        return best;
    };

    double q0 = lo;
    scan(lo, hi, 40000, q0);
    const double coarse_step = (hi - lo) / 40000.0;
    double q1 = q0;
    return scan(q0 - 2.0 * coarse_step, q0 + 2.0 * coarse_step, 40000, q1);
}

// Riemann-sum reference for the sigma-power constraint integral. The
// integrand is a step function, so the composite midpoint rule is applied
// per segment between consecutive atoms (total point budget spread across
// segments); within a segment the integrand is constant and the midpoint
// rule resolves it, making the stated 1e-6 comparison meaningful. sigma is
// evaluated pointwise from its definition, independent of the closed form.
inline double riemann_sigma_power(const riskgrad::DiscreteRiskLevelMeasure& measure,
                                  double q_order, std::size_t total_points) {
    const double inv_j = 1.0 / static_cast<double>(measure.atoms.size());
    auto sigma = [&](double x) {
        double s = 0.0;
        for (double a : measure.atoms) {
            if (a <= x) s += inv_j / (1.0 - a);
        }
        return s;
    };

    std::vector<double> cuts = measure.atoms;
    cuts.push_back(0.0);
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const auto n = std::max<std::size_t>(
            1, static_cast<std::size_t>(static_cast<double>(total_points) * (b - a)));
        const double h = (b - a) / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) {
            integral += std::pow(sigma(a + (static_cast<double>(k) + 0.5) * h), q_order) * h;
        }
    }
    return integral;
}

/// Plain uniform-grid midpoint Riemann sum (no knowledge of the atoms).
inline double riemann_sigma_power_uniform(const riskgrad::DiscreteRiskLevelMeasure& measure,
                                          double q_order, std::size_t points) {
    const double inv_j = 1.0 / static_cast<double>(measure.atoms.size());
    const double h = 1.0 / static_cast<double>(points);
    double integral = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
        const double x = (static_cast<double>(k) + 0.5) * h;
        double s = 0.0;
        for (double a : measure.atoms) {
            if (a <= x) s += inv_j / (1.0 - a);
        }
        integral += std::pow(s, q_order) * h;
    }
    return integral;
}

/// Shared sample-set helper for scalar payload tests.
inline std::shared_ptr<riskgrad::SampleSet> scalar_samples(std::initializer_list<double> values) {
    auto set = std::make_shared<riskgrad::SampleSet>(values.size(), 1);
    std::size_t i = 0;
    for (double v : values) set->row(i++)[0] = v;
    return set;
}

inline std::shared_ptr<riskgrad::SampleSet> scalar_samples(const std::vector<double>& values) {
    auto set = std::make_shared<riskgrad::SampleSet>(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i) set->row(i)[0] = values[i];
    return set;
}

} // namespace testutil
