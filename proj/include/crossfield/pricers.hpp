#pragma once

// Closed-form valuation: Quanto caplets/caps in both regimes, float-to-float
// cross-currency swaps, and the exact FX call.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crossfield/analytics.hpp"
#include "crossfield/model_spec.hpp"
#include "crossfield/quadrature.hpp"
#include "crossfield/term_structure.hpp"

namespace crossfield {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct PricingResult {
    double value{0.0};
    std::optional<double> std_error;  // Monte Carlo only
    std::vector<std::pair<std::string, double>> diagnostics;

    void diag(std::string key, double v) { diagnostics.emplace_back(std::move(key), v); }
};

// Cap on the foreign LIBOR paid in domestic currency at the fixed rate X-bar.
// Covers resets first_reset .. last_reset (inclusive; defaults to the whole
// tenor).  fixed_fx overrides the model's X-bar when set.  scale_by_fixed_fx
// lets the LognormalFx pricer drop the X-bar factor; the payoff definition
// keeps it by default.
struct QuantoCapSpec {
    double strike{0.0};
    std::optional<double> fixed_fx;
    double notional{1.0};
    std::size_t first_reset{0};
    std::size_t last_reset{std::numeric_limits<std::size_t>::max()};
    bool scale_by_fixed_fx{true};
};

struct FxOptionSpec {
    double expiry{0.0};
    double strike{0.0};  // domestic per foreign
    double notional{1.0};
};

// Undiscounted expectation E[(F e^{-a} e^{G - v/2} - k)^+], G ~ N(0, v):
//   F e^{-a} N((ln(F/k) - a + v/2)/sqrt(v)) - k N((ln(F/k) - a - v/2)/sqrt(v)).
// k <= 0 returns the forward leg F e^{-a} - k; v == 0 returns the
// deterministic-forward payoff.
inline double lognormal_call_core(double forward, double strike, double drift_adj,
                                  double variance) {
    if (!(forward > 0.0)) throw std::invalid_argument("lognormal core requires forward > 0");
    if (variance < 0.0) throw std::invalid_argument("lognormal core requires variance >= 0");
    const double adjusted = forward * std::exp(-drift_adj);
    if (strike <= 0.0) return adjusted - strike;
    if (variance == 0.0) return std::max(adjusted - strike, 0.0);
    const double sd = std::sqrt(variance);
    const double d1 = (std::log(forward / strike) - drift_adj + 0.5 * variance) / sd;
    const double d2 = d1 - sd;
    return adjusted * normal_cdf(d1) - strike * normal_cdf(d2);
}

namespace detail {

inline std::size_t clamp_last_reset(const QuantoCapSpec& spec, std::size_t periods) {
    if (spec.first_reset >= periods)
        throw std::out_of_range("cap first reset index out of range");
    return std::min(spec.last_reset, periods - 1);
}

inline void caplet_diags(PricingResult& out, std::size_t i, double forward, double strike,
                         double adj, double variance, double quad_err) {
    const std::string p = "caplet" + std::to_string(i) + ".";
    if (strike > 0.0 && variance > 0.0) {
        const double sd = std::sqrt(variance);
        const double d1 = (std::log(forward / strike) - adj + 0.5 * variance) / sd;
        out.diag(p + "d1", d1);
        out.diag(p + "d2", d1 - sd);
    }
    out.diag(p + "adjustment", adj);
    out.diag(p + "variance", variance);
    out.diag(p + "quad_error", quad_err);
}

}  // namespace detail

// Quanto caplet, LognormalLibors regime:
//   delta_{i+1} Xbar B(0,T_{i+1}) [ L_F e^{-alpha~_i} N(d1) - kappa N(d2) ]
// with log-variance Omega~_i.
inline PricingResult quanto_caplet(const Market& market, const ModelConfig& model,
                                   const QuantoCapSpec& spec, std::size_t i,
                                   const QuadratureConfig& cfg) {
    if (model.regime != Regime::LognormalLibors)
        throw std::invalid_argument("quanto caplet requires the lognormal-LIBOR regime");
    const Tenor& tenor = market.tenor;
    if (i >= tenor.periods()) throw std::out_of_range("caplet index out of range");
    const FrozenState state = FrozenState::from_curves(market);
    const double forward = state.for_libor[i];
    const Estimate omega = omega_tilde(model, tenor, i, state.time, cfg);
    const Estimate alpha = alpha_tilde(model, tenor, state, i, cfg);
    const double xbar = spec.fixed_fx.value_or(model.quanto_fixed_fx);
    const double scale = spec.notional * tenor.accrual(i) * xbar *
                         market.curves.discount(tenor.date(i + 1));
    PricingResult out;
    out.value = scale * lognormal_call_core(forward, spec.strike, alpha.value,
                                            std::max(omega.value, 0.0));
    detail::caplet_diags(out, i, forward, spec.strike, alpha.value, std::max(omega.value, 0.0),
                         omega.error + alpha.error);
    return out;
}

// Sum of quanto caplets over the covered resets.
inline PricingResult quanto_cap(const Market& market, const ModelConfig& model,
                                const QuantoCapSpec& spec, const QuadratureConfig& cfg) {
    const std::size_t last = detail::clamp_last_reset(spec, market.tenor.periods());
    PricingResult out;
    for (std::size_t i = spec.first_reset; i <= last; ++i) {
        PricingResult caplet = quanto_caplet(market, model, spec, i, cfg);
        out.value += caplet.value;
        out.diag("caplet" + std::to_string(i) + ".value", caplet.value);
        for (auto& kv : caplet.diagnostics) out.diagnostics.push_back(std::move(kv));
    }
    return out;
}

// Quanto cap when the foreign LIBOR is not lognormal (LognormalFx regime):
//   sum_i delta_{i+1} Xbar B(0,T_{i+1}) [ L_F e^{-beta_i} N(d1) - kappa N(d2) ]
// with log-variance gamma_i.
inline PricingResult quanto_cap_fx_lognormal(const Market& market, const ModelConfig& model,
                                             const QuantoCapSpec& spec,
                                             const QuadratureConfig& cfg) {
    if (model.regime != Regime::LognormalFx)
        throw std::invalid_argument("fx-lognormal cap requires the lognormal-FX regime");
    const Tenor& tenor = market.tenor;
    const std::size_t last = detail::clamp_last_reset(spec, tenor.periods());
    const FrozenState state = FrozenState::from_curves(market);
    const double xbar =
        spec.scale_by_fixed_fx ? spec.fixed_fx.value_or(model.quanto_fixed_fx) : 1.0;
    PricingResult out;
    for (std::size_t i = spec.first_reset; i <= last; ++i) {
        const double forward = state.for_libor[i];
        const Estimate beta = beta_coeff(model, tenor, state, i, cfg);
        const Estimate gamma = gamma_i(model, tenor, state, i, cfg);
        const double scale = spec.notional * tenor.accrual(i) * xbar *
                             market.curves.discount(tenor.date(i + 1));
        const double value = scale * lognormal_call_core(forward, spec.strike, beta.value,
                                                         std::max(gamma.value, 0.0));
        out.value += value;
        out.diag("caplet" + std::to_string(i) + ".value", value);
        detail::caplet_diags(out, i, forward, spec.strike, beta.value,
                             std::max(gamma.value, 0.0), beta.error + gamma.error);
    }
    return out;
}

// Float-to-float cross-currency swap, both legs paid in domestic currency:
//   sum_i delta_{i+1} B(0,T_{i+1}) ( L_F(0,T_i) e^{-adj_i} - L(0,T_i) )
// with adj = alpha~ (LognormalLibors) or beta (LognormalFx).
inline PricingResult ccs_price(const Market& market, const ModelConfig& model,
                               const QuadratureConfig& cfg, double notional = 1.0) {
    const Tenor& tenor = market.tenor;
    const FrozenState state = FrozenState::from_curves(market);
    PricingResult out;
    for (std::size_t i = 0; i < tenor.periods(); ++i) {
        const Estimate adj = model.regime == Regime::LognormalLibors
                                 ? alpha_tilde(model, tenor, state, i, cfg)
                                 : beta_coeff(model, tenor, state, i, cfg);
        const double leg = notional * tenor.accrual(i) *
                           market.curves.discount(tenor.date(i + 1)) *
                           (state.for_libor[i] * std::exp(-adj.value) - state.dom_libor[i]);
        out.value += leg;
        out.diag("period" + std::to_string(i) + ".value", leg);
        out.diag("period" + std::to_string(i) + ".adjustment", adj.value);
        out.diag("period" + std::to_string(i) + ".quad_error", adj.error);
    }
    return out;
}

// Exact call on the spot FX rate:
//   C = B(0,T) ( X(0,T) N(d1) - k N(d2) ),  total variance gamma(0,T).
inline PricingResult fx_call(const Market& market, const ModelConfig& model,
                             const FxOptionSpec& spec, const QuadratureConfig& cfg) {
    if (!(spec.strike > 0.0)) throw std::invalid_argument("fx option strike must be positive");
    if (!(spec.expiry > 0.0)) throw std::invalid_argument("fx option expiry must be positive");
    if (spec.expiry > market.tenor.last() + 1e-12)
        throw std::invalid_argument("fx option expiry beyond the terminal tenor date");
    const double bond = market.curves.discount(spec.expiry);
    const double fwd = market.curves.foreign_discount(spec.expiry) * market.curves.spot_fx() /
                       bond;
    const Estimate variance = gamma_fx(model, 0.0, spec.expiry, cfg);
    PricingResult out;
    out.value = spec.notional * bond *
                lognormal_call_core(fwd, spec.strike, 0.0, std::max(variance.value, 0.0));
    out.diag("forward_fx", fwd);
    out.diag("variance", std::max(variance.value, 0.0));
    out.diag("quad_error", variance.error);
    if (variance.value > 0.0) {
        const double sd = std::sqrt(variance.value);
        const double d1 = (std::log(fwd / spec.strike) + 0.5 * variance.value) / sd;
        out.diag("d1", d1);
        out.diag("d2", d1 - sd);
    }
    return out;
}

}  // namespace crossfield
