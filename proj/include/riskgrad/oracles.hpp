#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "riskgrad/errors.hpp"

namespace riskgrad::oracles {

/// Parameters of a one-dimensional Gaussian, sigma is the standard deviation.
struct GaussianSpec {
    double mu = 0.0;
    double sigma = 1.0;
};

/// Standard normal density.
inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF via erfc, accurate to ~1 ulp over the whole range.
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Inverse standard normal CDF.
//
// Acklam's rational approximation (three branches, |error| < 1.15e-9 on its
// own) followed by one Halley refinement step against the erfc-based CDF,
// which pushes the error to a few ulp. Both pieces are classical and fully
// specified here, so oracle values do not depend on any platform quantile
// routine.
inline double norm_ppf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw domain_error("norm_ppf: p must lie in (0,1)");
    }

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    constexpr double p_high = 1.0 - p_low;

    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= p_high) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley step: e is the CDF residual, u the Newton correction.
    double e = norm_cdf(x) - p;
    double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

inline void check_spec(const GaussianSpec& spec) {
    if (!(spec.sigma > 0.0)) throw argument_error("GaussianSpec: sigma must be > 0");
}

/// Closed-form AVaR of a Gaussian: mu + sigma * phi(Phi^-1(u)) / (1-u).
inline double gaussian_avar(const GaussianSpec& spec, double u) {
    check_spec(spec);
    if (!(u > 0.0 && u < 1.0)) throw domain_error("gaussian_avar: u must lie in (0,1)");
    return spec.mu + spec.sigma * norm_pdf(norm_ppf(u)) / (1.0 - u);
}

/// Closed-form VaR of a Gaussian: the u-quantile mu + sigma * Phi^-1(u).
inline double gaussian_var(const GaussianSpec& spec, double u) {
    check_spec(spec);
    if (!(u > 0.0 && u < 1.0)) throw domain_error("gaussian_var: u must lie in (0,1)");
    return spec.mu + spec.sigma * norm_ppf(u);
}

// Empirical AVaR of a finite sample: the exact minimum over q of
//
//   q + (1/((1-u) n)) * sum_i (x_i - q)^+ .
//
// The objective is piecewise linear with breakpoints at the order statistics,
// so the minimum is attained at the empirical u-quantile and has a closed
// form with fractional weight on the boundary order statistic whenever
// (1-u) n is not an integer.
inline double empirical_avar(std::span<const double> samples, double u) {
    if (samples.empty()) throw argument_error("empirical_avar: empty sample");
    if (!(u >= 0.0 && u < 1.0)) throw domain_error("empirical_avar: u must lie in [0,1)");

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double tail = (1.0 - u) * static_cast<double>(n);

    // Number of full-weight tail points.
    const std::size_t whole = std::min<std::size_t>(n, static_cast<std::size_t>(std::floor(tail)));
    double acc = 0.0;
    for (std::size_t i = n - whole; i < n; ++i) acc += sorted[i];
    if (whole == n || tail == static_cast<double>(whole)) {
        return acc / tail;
    }
    // Boundary order statistic carries the remaining fractional weight.
    const double boundary = sorted[n - whole - 1];
    return (acc + (tail - static_cast<double>(whole)) * boundary) / tail;
}

inline double empirical_avar(const std::vector<double>& samples, double u) {
    return empirical_avar(std::span<const double>(samples), u);
}

// Reference entropic value-at-risk figure for the N(1, 2) position
// (mu = 1, variance 2):
//
//   1 + sqrt(-2 log(2 (1-u))),  valid for u > 1/2.
//
// Kept verbatim as the comparison target of the search experiment; it is
// specific to this one distribution, hence the hard parameter check.
inline double gaussian_evar_reference(const GaussianSpec& spec, double u) {
    if (std::abs(spec.mu - 1.0) > 1e-12 || std::abs(spec.sigma - std::numbers::sqrt2) > 1e-9) {
        throw argument_error("gaussian_evar_reference: defined only for mu=1, sigma^2=2");
    }
    const double arg = 2.0 * (1.0 - u);
    if (!(arg < 1.0) || !(u < 1.0)) {
        throw domain_error("gaussian_evar_reference: requires 0.5 < u < 1");
    }
    return 1.0 + std::sqrt(-2.0 * std::log(arg));
}

} // namespace riskgrad::oracles
