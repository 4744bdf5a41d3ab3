#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "riskgrad/errors.hpp"

namespace riskgrad {

enum class PayoffKind { Identity, LinearPnL, SoftmaxPortfolio };

inline const char* to_string(PayoffKind k) {
    switch (k) {
        case PayoffKind::Identity: return "identity";
        case PayoffKind::LinearPnL: return "linear";
        case PayoffKind::SoftmaxPortfolio: return "softmax";
    }
    return "?";
}

// Family of payoffs f(r, s) with exact portfolio gradients.
//
//   Identity          f(r, s) = s          (scalar risk factor, no portfolio)
//   LinearPnL         f(r, s) = r . s      (s an increment vector)
//   SoftmaxPortfolio  f(r, s) = softmax(r) . s
//
// Identity is the degenerate case: the risk factor is 1-dimensional and the
// portfolio is empty, so a chain over (m, r) collapses to just (m). LinearPnL
// has an unbounded gradient in s, which the estimator assumptions exclude;
// it is still offered (it is the textbook P&L payoff) but runs carry an
// "assumption-unchecked" flag. Instances are immutable and safe to share
// across chains.
class PayoffModel {
  public:
    static PayoffModel identity() { return PayoffModel(PayoffKind::Identity, 1); }

    static PayoffModel linear_pnl(std::size_t dim) {
        require(dim >= 1, "linear_pnl: dim must be >= 1");
        return PayoffModel(PayoffKind::LinearPnL, dim);
    }

    static PayoffModel softmax_portfolio(std::size_t dim) {
        require(dim >= 1, "softmax_portfolio: dim must be >= 1");
        return PayoffModel(PayoffKind::SoftmaxPortfolio, dim);
    }

    PayoffKind kind() const { return kind_; }

    /// Dimension of the risk-factor vector s.
    std::size_t sample_dim() const { return dim_; }

    /// Dimension of the portfolio r (0 for Identity).
    std::size_t portfolio_dim() const { return kind_ == PayoffKind::Identity ? 0 : dim_; }

    double evaluate(std::span<const double> r, std::span<const double> s) const {
        check_dims(r, s);
        switch (kind_) {
            case PayoffKind::Identity:
                return s[0];
            case PayoffKind::LinearPnL:
                return std::inner_product(r.begin(), r.end(), s.begin(), 0.0);
            case PayoffKind::SoftmaxPortfolio: {
                std::vector<double> w = softmax_weights(r);
                return std::inner_product(w.begin(), w.end(), s.begin(), 0.0);
            }
        }
        return 0.0;
    }

    /// Exact gradient of evaluate in the portfolio variable. Empty for Identity.
    std::vector<double> grad_r(std::span<const double> r, std::span<const double> s) const {
        check_dims(r, s);
        switch (kind_) {
            case PayoffKind::Identity:
                return {};
            case PayoffKind::LinearPnL:
                return std::vector<double>(s.begin(), s.end());
            case PayoffKind::SoftmaxPortfolio: {
                std::vector<double> w = softmax_weights(r);
                const double mean = std::inner_product(w.begin(), w.end(), s.begin(), 0.0);
                std::vector<double> g(dim_);
                for (std::size_t k = 0; k < dim_; ++k) g[k] = w[k] * (s[k] - mean);
                return g;
            }
        }
        return {};
    }

    /// Softmax weights with max-subtraction; r drifts freely under the chain,
    /// so exponentials are taken of non-positive arguments only.
    static std::vector<double> softmax_weights(std::span<const double> r) {
        const double top = *std::max_element(r.begin(), r.end());
        std::vector<double> w(r.size());
        double total = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            w[i] = std::exp(r[i] - top);
            total += w[i];
        }
        for (auto& x : w) x /= total;
        return w;
    }

    /// Flags surfaced in reports for payoffs outside the estimator's
    /// standing assumptions.
    std::vector<std::string> assumption_flags() const {
        if (kind_ == PayoffKind::LinearPnL) {
            return {"assumption-unchecked: linear payoff has unbounded risk-factor gradient"};
        }
        return {};
    }

  private:
    PayoffModel(PayoffKind kind, std::size_t dim) : kind_(kind), dim_(dim) {}

    static void require(bool ok, const char* msg) {
        if (!ok) throw argument_error(msg);
    }

    void check_dims(std::span<const double> r, std::span<const double> s) const {
        if (r.size() != portfolio_dim()) {
            throw argument_error("payoff: portfolio has length " + std::to_string(r.size()) +
                                 ", expected " + std::to_string(portfolio_dim()));
        }
        if (s.size() != sample_dim()) {
            throw argument_error("payoff: sample has length " + std::to_string(s.size()) +
                                 ", expected " + std::to_string(sample_dim()));
        }
    }

    PayoffKind kind_;
    std::size_t dim_;
};

} // namespace riskgrad
