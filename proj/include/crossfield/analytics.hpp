#pragma once

// Scalar model quantities: instantaneous covariance blocks of the LIBOR
// diffusions, the telescoped c-integral of the forward-FX volatilities, and
// the drift/variance adjustments entering the closed-form pricers.
//
// All quantities freeze the accrual ratios A, A_F at the valuation time of
// the supplied state; the Monte Carlo engine quantifies the freezing error.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossfield/model_spec.hpp"
#include "crossfield/quadrature.hpp"
#include "crossfield/term_structure.hpp"

namespace crossfield {

// Rates and accrual ratios observed at a fixed time t.
struct FrozenState {
    double time{0.0};
    std::vector<double> dom_libor;    // L(t,T_j), j = 0..N-1
    std::vector<double> for_libor;    // L_F(t,T_j)
    std::vector<double> dom_accrual;  // A(t,T_j)
    std::vector<double> for_accrual;  // A_F(t,T_j)

    static FrozenState from_rates(const Tenor& tenor, double t, std::vector<double> dom,
                                  std::vector<double> frn) {
        const std::size_t n = tenor.periods();
        if (dom.size() != n || frn.size() != n)
            throw std::invalid_argument("frozen state needs one rate per tenor period");
        FrozenState state;
        state.time = t;
        state.dom_libor = std::move(dom);
        state.for_libor = std::move(frn);
        state.dom_accrual.resize(n);
        state.for_accrual.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            state.dom_accrual[j] = accrual_ratio(state.dom_libor[j], tenor.accrual(j));
            state.for_accrual[j] = accrual_ratio(state.for_libor[j], tenor.accrual(j));
        }
        return state;
    }

    static FrozenState from_curves(const Market& market) {
        const std::size_t n = market.tenor.periods();
        std::vector<double> dom(n), frn(n);
        for (std::size_t j = 0; j < n; ++j) {
            dom[j] = libor_from_discounts(market.curves, market.tenor, j, Currency::Domestic);
            frn[j] = libor_from_discounts(market.curves, market.tenor, j, Currency::Foreign);
        }
        return from_rates(market.tenor, 0.0, std::move(dom), std::move(frn));
    }
};

enum class VolRole { DomLibor, ForLibor, TerminalFx };

inline const VolSurfaceSpec& vol_surface(const ModelConfig& model, VolRole role) {
    const std::optional<VolSurfaceSpec>* slot = nullptr;
    switch (role) {
        case VolRole::DomLibor: slot = &model.dom_libor_vol; break;
        case VolRole::ForLibor: slot = &model.for_libor_vol; break;
        case VolRole::TerminalFx: slot = &model.terminal_fx_vol; break;
    }
    if (!slot->has_value()) throw std::invalid_argument("required volatility surface missing");
    return **slot;
}

// lambda_i-type vols live on the strip u in [T_i, T_{i+1}]; evaluation
// outside the strip is a contract violation.
inline double strip_vol(const ModelConfig& model, const Tenor& tenor, VolRole role,
                        std::size_t i, double s, double u) {
    const double lo = tenor.date(i);
    const double hi = tenor.date(i + 1);
    const double tol = 1e-10 * std::max(1.0, hi);
    if (u < lo - tol || u > hi + tol)
        throw std::invalid_argument("libor vol evaluated off its maturity strip");
    return eval_vol(vol_surface(model, role), i, s, u);
}

// sigma_{X_N}(s, u), u in [s, T_N].
inline double terminal_fx_vol_at(const ModelConfig& model, double s, double u) {
    return eval_vol(vol_surface(model, VolRole::TerminalFx), 0, s, u);
}

enum class CovRole { DomDom, ForFor, ForDom };

// Instantaneous covariance block at time t (per unit time):
//   Lambda_{ij}(t) = int_{T_i}^{T_{i+1}} int_{T_j}^{T_{j+1}}
//                    vol_i(t,u) vol_j(t,v) c(u,v) dv du
// with the role pair selecting which surfaces enter.  ForDom pairs the
// foreign surface on strip i with the domestic surface on strip j.
inline Estimate lambda_cov(const ModelConfig& model, const Tenor& tenor, std::size_t i,
                           std::size_t j, double t, CovRole role,
                           const QuadratureConfig& cfg) {
    const std::size_t n = tenor.periods();
    if (i >= n || j >= n) throw std::out_of_range("covariance block index out of range");
    if (t > std::min(tenor.date(i), tenor.date(j)) + 1e-12)
        throw std::invalid_argument("covariance block requires t <= min(T_i, T_j)");
    const VolRole role_u = (role == CovRole::DomDom) ? VolRole::DomLibor : VolRole::ForLibor;
    const VolRole role_v = (role == CovRole::ForFor) ? VolRole::ForLibor : VolRole::DomLibor;
    auto f = [&](double u, double v) {
        return strip_vol(model, tenor, role_u, i, t, u) *
               strip_vol(model, tenor, role_v, j, t, v) *
               eval_corr(model.correlation, u, v);
    };
    return integrate_box2(f, tenor.date(i), tenor.date(i + 1), tenor.date(j), tenor.date(j + 1),
                          cfg, /*split_v_at_u=*/true);
}

// K_i(s, u) = int_s^{T_i} sigma_{X_i}(s, v) c(u, v) dv, evaluated through the
// telescoped expansion
//   sum_{j=i}^{N-1} [ A_F(t,T_j) int_strip_j lambda_j^F(s,v) c(u,v) dv
//                     - A(t,T_j) int_strip_j lambda_j(s,v) c(u,v) dv ]
//   + int_s^{T_N} sigma_{X_N}(s,v) c(u,v) dv
// with the accrual ratios frozen in `state`.  sigma_{X_i} for i < N is never
// materialized as a function; this integral is all any formula consumes.
// Under LognormalFx the foreign coefficient A_F lambda^F collapses to sigma_F.
inline double fx_c_integral(const ModelConfig& model, const Tenor& tenor,
                            const FrozenState& state, std::size_t i, double s, double u,
                            const QuadratureConfig& cfg) {
    const std::size_t n = tenor.periods();
    if (i > n) throw std::out_of_range("fx c-integral index out of range");
    if (state.dom_accrual.size() != n || state.for_accrual.size() != n)
        throw std::invalid_argument("frozen state missing required rates");
    if (s > tenor.date(i) + 1e-12)
        throw std::invalid_argument("fx c-integral requires s <= T_i");
    const bool lognormal_libors = model.regime == Regime::LognormalLibors;
    double total = 0.0;
    for (std::size_t j = i; j < n; ++j) {
        auto f = [&](double v) {
            const double frn = lognormal_libors
                                   ? state.for_accrual[j] *
                                         strip_vol(model, tenor, VolRole::ForLibor, j, s, v)
                                   : strip_vol(model, tenor, VolRole::ForLibor, j, s, v);
            const double dom =
                state.dom_accrual[j] * strip_vol(model, tenor, VolRole::DomLibor, j, s, v);
            return (frn - dom) * eval_corr(model.correlation, u, v);
        };
        total += integrate_1d(f, tenor.date(j), tenor.date(j + 1), cfg,
                              std::span<const double>(&u, 1))
                     .value;
    }
    auto terminal = [&](double v) {
        return terminal_fx_vol_at(model, s, v) * eval_corr(model.correlation, u, v);
    };
    total += integrate_1d(terminal, s, tenor.last(), cfg, std::span<const double>(&u, 1)).value;
    return total;
}

namespace detail {

// Omega-shaped variance integral over the foreign surface:
// int_t^{T_i} int_strip int_strip vol(s,u) vol(s,v) c(u,v) du dv ds.
inline Estimate foreign_quadratic_variance(const ModelConfig& model, const Tenor& tenor,
                                           std::size_t i, double t,
                                           const QuadratureConfig& cfg) {
    const std::size_t n = tenor.periods();
    if (i >= n) throw std::out_of_range("variance index out of range");
    if (t > tenor.date(i) + 1e-12) throw std::invalid_argument("variance requires t <= T_i");
    auto f = [&](double s, double u, double v) {
        return strip_vol(model, tenor, VolRole::ForLibor, i, s, u) *
               strip_vol(model, tenor, VolRole::ForLibor, i, s, v) *
               eval_corr(model.correlation, u, v);
    };
    return integrate_box3(f, t, tenor.date(i), tenor.date(i), tenor.date(i + 1), tenor.date(i),
                          tenor.date(i + 1), cfg, /*split_v_at_u=*/true);
}

}  // namespace detail

// Conditional log-variance of the foreign LIBOR fixing,
// Omega~_i(t) = int_t^{T_i} int_strip int_strip lambda^F_i lambda^F_i c.
inline Estimate omega_tilde(const ModelConfig& model, const Tenor& tenor, std::size_t i,
                            double t, const QuadratureConfig& cfg) {
    return detail::foreign_quadratic_variance(model, tenor, i, t, cfg);
}

// Frozen drift adjustment alpha~_i(t) of the foreign LIBOR under the domestic
// Q_{T_{i+1}} measure (LognormalLibors regime):
//   + sum_{j>i} A_F(t,T_j) int_t^{T_i} int_strip_i int_strip_j lam^F_i lam^F_j c
//   - sum_{j>i} A(t,T_j)   int_t^{T_i} int_strip_i int_strip_j lam^F_i lam_j  c
//   + int_t^{T_i} int_strip_i int_s^{T_N} lam^F_i(s,u) sigma_{X_N}(s,v) c(u,v)
inline Estimate alpha_tilde(const ModelConfig& model, const Tenor& tenor,
                            const FrozenState& state, std::size_t i,
                            const QuadratureConfig& cfg) {
    if (model.regime != Regime::LognormalLibors)
        throw std::invalid_argument("alpha adjustment requires the lognormal-LIBOR regime");
    const std::size_t n = tenor.periods();
    if (i >= n) throw std::out_of_range("alpha index out of range");
    const double t = state.time;
    if (t > tenor.date(i) + 1e-12) throw std::invalid_argument("alpha requires t <= T_i");

    double value = 0.0;
    double err = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
        auto ff = [&](double s, double u, double v) {
            return strip_vol(model, tenor, VolRole::ForLibor, i, s, u) *
                   strip_vol(model, tenor, VolRole::ForLibor, j, s, v) *
                   eval_corr(model.correlation, u, v);
        };
        auto fd = [&](double s, double u, double v) {
            return strip_vol(model, tenor, VolRole::ForLibor, i, s, u) *
                   strip_vol(model, tenor, VolRole::DomLibor, j, s, v) *
                   eval_corr(model.correlation, u, v);
        };
        const Estimate bf =
            integrate_box3(ff, t, tenor.date(i), tenor.date(i), tenor.date(i + 1),
                           tenor.date(j), tenor.date(j + 1), cfg, true);
        const Estimate bd =
            integrate_box3(fd, t, tenor.date(i), tenor.date(i), tenor.date(i + 1),
                           tenor.date(j), tenor.date(j + 1), cfg, true);
        value += state.for_accrual[j] * bf.value - state.dom_accrual[j] * bd.value;
        err += state.for_accrual[j] * bf.error + state.dom_accrual[j] * bd.error;
    }
    auto terminal = [&](double s, double u, double v) {
        return strip_vol(model, tenor, VolRole::ForLibor, i, s, u) *
               terminal_fx_vol_at(model, s, v) * eval_corr(model.correlation, u, v);
    };
    const Estimate tail = integrate_prism3(
        terminal, t, tenor.date(i), PrismAxis{tenor.date(i), tenor.date(i + 1), false},
        PrismAxis{0.0, tenor.last(), true}, cfg, true);
    return Estimate{value + tail.value, err + tail.error};
}

// Frozen drift adjustment beta_i(t) for the LognormalFx regime:
//   (1 / A_F(t,T_i)) int_t^{T_i} int_strip_i sigma_F(s,u) K_{i+1}(s,u) du ds
// with K_{i+1} the sigma_{X_{i+1}} c-integral from fx_c_integral.
inline Estimate beta_coeff(const ModelConfig& model, const Tenor& tenor,
                           const FrozenState& state, std::size_t i,
                           const QuadratureConfig& cfg) {
    if (model.regime != Regime::LognormalFx)
        throw std::invalid_argument("beta adjustment requires the lognormal-FX regime");
    const std::size_t n = tenor.periods();
    if (i >= n) throw std::out_of_range("beta index out of range");
    const double t = state.time;
    if (t > tenor.date(i) + 1e-12) throw std::invalid_argument("beta requires t <= T_i");
    const double af = state.for_accrual[i];
    if (af == 0.0) throw std::domain_error("beta undefined: A_F(t,T_i) = 0");
    auto f = [&](double s, double u) {
        return strip_vol(model, tenor, VolRole::ForLibor, i, s, u) *
               fx_c_integral(model, tenor, state, i + 1, s, u, cfg);
    };
    const Estimate box =
        integrate_box2(f, t, tenor.date(i), tenor.date(i), tenor.date(i + 1), cfg);
    return Estimate{box.value / af, box.error / std::abs(af)};
}

// Frozen log-variance gamma_i(t) of the foreign LIBOR fixing in the
// LognormalFx regime: (1/A_F^2) times the Omega-shaped integral over sigma_F.
inline Estimate gamma_i(const ModelConfig& model, const Tenor& tenor, const FrozenState& state,
                        std::size_t i, const QuadratureConfig& cfg) {
    if (model.regime != Regime::LognormalFx)
        throw std::invalid_argument("gamma_i requires the lognormal-FX regime");
    const double af = state.for_accrual.at(i);
    if (af == 0.0) throw std::domain_error("gamma_i undefined: A_F(t,T_i) = 0");
    const Estimate base = detail::foreign_quadratic_variance(model, tenor, i, state.time, cfg);
    return Estimate{base.value / (af * af), base.error / (af * af)};
}

// Log-variance of the forward FX over [t, T]:
// gamma(t,T) = int_t^T int_s^T int_s^T sigma_X(s,u) sigma_X(s,v) c(u,v) du dv ds.
inline Estimate gamma_fx(const ModelConfig& model, double t, double T,
                         const QuadratureConfig& cfg) {
    if (t > T + 1e-12) throw std::invalid_argument("gamma(t,T) requires t <= T");
    auto f = [&](double s, double u, double v) {
        return terminal_fx_vol_at(model, s, u) * terminal_fx_vol_at(model, s, v) *
               eval_corr(model.correlation, u, v);
    };
    return integrate_prism3(f, t, T, T, cfg, /*split_v_at_u=*/true);
}

// Per-index adjustments for reporting.
struct AdjustmentReport {
    Regime regime{Regime::LognormalLibors};
    std::vector<double> omega, omega_err;  // LognormalLibors
    std::vector<double> alpha, alpha_err;  // LognormalLibors
    std::vector<double> beta, beta_err;    // LognormalFx
    std::vector<double> gamma, gamma_err;  // LognormalFx
    double fx_variance{0.0};               // gamma(0, T_N)
    double fx_variance_err{0.0};
};

inline AdjustmentReport compute_adjustments(const Market& market, const ModelConfig& model,
                                            const QuadratureConfig& cfg) {
    const Tenor& tenor = market.tenor;
    const FrozenState state = FrozenState::from_curves(market);
    AdjustmentReport report;
    report.regime = model.regime;
    for (std::size_t i = 0; i < tenor.periods(); ++i) {
        if (model.regime == Regime::LognormalLibors) {
            const Estimate om = omega_tilde(model, tenor, i, state.time, cfg);
            const Estimate al = alpha_tilde(model, tenor, state, i, cfg);
            report.omega.push_back(om.value);
            report.omega_err.push_back(om.error);
            report.alpha.push_back(al.value);
            report.alpha_err.push_back(al.error);
        } else {
            const Estimate be = beta_coeff(model, tenor, state, i, cfg);
            const Estimate ga = gamma_i(model, tenor, state, i, cfg);
            report.beta.push_back(be.value);
            report.beta_err.push_back(be.error);
            report.gamma.push_back(ga.value);
            report.gamma_err.push_back(ga.error);
        }
    }
    const Estimate gx = gamma_fx(model, 0.0, tenor.last(), cfg);
    report.fx_variance = gx.value;
    report.fx_variance_err = gx.error;
    return report;
}

}  // namespace crossfield
