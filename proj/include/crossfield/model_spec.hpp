#pragma once

// Deterministic model inputs: volatility surfaces per role, the field
// correlation function, and the regime selector, with validation.
//
// One correlation function c governs domestic, foreign, and cross increments;
// the model runs on a single shared random field.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossfield/term_structure.hpp"

namespace crossfield {

enum class CorrelationForm { Exponential, ExponentialWithFloor };

// c(u,v) = exp(-beta |u-v|), optionally floored:
// c(u,v) = floor + (1 - floor) exp(-beta |u-v|).  Both forms are positive
// semidefinite kernels with c(u,u) = 1.
struct CorrelationSpec {
    CorrelationForm form{CorrelationForm::Exponential};
    double decay{0.0};  // beta >= 0, 1/years
    double floor{0.0};  // rho_inf in [0,1); second form only
};

inline double eval_corr(const CorrelationSpec& spec, double u, double v) {
    const double base = std::exp(-spec.decay * std::abs(u - v));
    if (spec.form == CorrelationForm::ExponentialWithFloor)
        return spec.floor + (1.0 - spec.floor) * base;
    return base;
}

enum class VolForm { Constant, Rebonato };

// phi_i * g(u - t) with g constant or the Rebonato hump (a + b tau) e^{-c tau} + d.
struct VolSurfaceSpec {
    VolForm form{VolForm::Constant};
    double level{0.0};                         // g0 for the constant form
    double a{0.0}, b{0.0}, c{0.0}, d{0.0};     // Rebonato parameters
    std::vector<double> scales;                // per-index phi_i; empty means all 1
};

inline double eval_vol(const VolSurfaceSpec& spec, std::size_t i, double t, double u) {
    if (u < t) throw std::invalid_argument("vol evaluation requires t <= u");
    double phi = 1.0;
    if (!spec.scales.empty()) {
        if (i >= spec.scales.size()) throw std::out_of_range("vol scale index out of range");
        phi = spec.scales[i];
    }
    if (spec.form == VolForm::Constant) return phi * spec.level;
    const double tau = u - t;
    return phi * ((spec.a + spec.b * tau) * std::exp(-spec.c * tau) + spec.d);
}

// (i)  all forward LIBOR rates lognormal (lambda, lambda^F deterministic);
// (ii) domestic LIBOR and the forward FX lognormal (lambda, sigma_F,
//      terminal FX vol deterministic; lambda^F = sigma_F / A_F is stochastic).
enum class Regime { LognormalLibors, LognormalFx };

struct ModelConfig {
    Regime regime{Regime::LognormalLibors};
    std::optional<VolSurfaceSpec> dom_libor_vol;    // lambda_i
    std::optional<VolSurfaceSpec> for_libor_vol;    // lambda^F_i, or sigma_F under LognormalFx
    std::optional<VolSurfaceSpec> terminal_fx_vol;  // sigma_{X_N}
    CorrelationSpec correlation;
    double quanto_fixed_fx{1.0};  // X-bar, domestic per foreign
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {

// Cholesky of C + shift*I as a positive-semidefiniteness probe.
inline bool cholesky_psd(std::vector<double> m, std::size_t n, double shift) {
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] += shift;
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= m[j * n + k] * m[j * n + k];
        if (diag <= 0.0) return false;
        const double root = std::sqrt(diag);
        m[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= m[i * n + k] * m[j * n + k];
            m[i * n + j] = v / root;
        }
    }
    return true;
}

inline void check_vol_surface(const std::string& name, const VolSurfaceSpec& spec,
                              std::size_t periods, double horizon,
                              std::vector<std::string>& out) {
    for (double p : {spec.level, spec.a, spec.b, spec.c, spec.d}) {
        if (!std::isfinite(p)) {
            out.push_back(name + ": non-finite parameter");
            return;
        }
    }
    if (!spec.scales.empty() && spec.scales.size() < periods)
        out.push_back(name + ": fewer scales than tenor periods");
    for (std::size_t i = 0; i < spec.scales.size(); ++i) {
        if (!(spec.scales[i] >= 0.0) || !std::isfinite(spec.scales[i]))
            out.push_back(name + ": negative scale at index " + std::to_string(i));
    }
    // sample g(tau) over the relevant range
    const int samples = 64;
    for (int k = 0; k <= samples; ++k) {
        const double tau = horizon * k / samples;
        double g = spec.form == VolForm::Constant
                       ? spec.level
                       : (spec.a + spec.b * tau) * std::exp(-spec.c * tau) + spec.d;
        if (g < 0.0) {
            out.push_back(name + ": negative volatility at tau=" + std::to_string(tau));
            return;
        }
    }
}

}  // namespace detail

// Range/symmetry/PSD checks on an explicit correlation matrix (row-major n x n).
inline ValidationReport validate_correlation_matrix(std::span<const double> matrix,
                                                    std::size_t n, double psd_tol = 1e-10) {
    ValidationReport report;
    if (matrix.size() != n * n) {
        report.violations.push_back("correlation matrix: wrong size");
        return report;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(matrix[i * n + i] - 1.0) > 1e-12)
            report.violations.push_back("correlation matrix: diagonal entry != 1 at index " +
                                        std::to_string(i));
        for (std::size_t j = 0; j < n; ++j) {
            const double cij = matrix[i * n + j];
            if (std::abs(cij) > 1.0 + 1e-12) {
                report.violations.push_back("correlation matrix: |c| > 1 at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
                return report;
            }
            if (std::abs(cij - matrix[j * n + i]) > 1e-12) {
                report.violations.push_back("correlation matrix: not symmetric");
                return report;
            }
        }
    }
    std::vector<double> copy(matrix.begin(), matrix.end());
    if (!detail::cholesky_psd(std::move(copy), n, psd_tol))
        report.violations.push_back("correlation matrix: not positive semidefinite");
    return report;
}

inline std::vector<double> correlation_matrix(const CorrelationSpec& spec,
                                              std::span<const double> grid) {
    const std::size_t n = grid.size();
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i * n + j] = eval_corr(spec, grid[i], grid[j]);
    return m;
}

// Report-valued configuration check: regime inputs, vol positivity, correlation
// parameters, and PSD of the induced matrix on a refined maturity grid.
inline ValidationReport validate_config(const ModelConfig& cfg, const Tenor& tenor) {
    ValidationReport report;
    const std::size_t n = tenor.periods();
    const double horizon = tenor.last();

    if (!cfg.dom_libor_vol) report.violations.push_back("missing domestic volatility");
    if (!cfg.for_libor_vol) report.violations.push_back("missing foreign volatility");
    if (!cfg.terminal_fx_vol) report.violations.push_back("missing terminal FX volatility");
    if (cfg.dom_libor_vol)
        detail::check_vol_surface("domestic volatility", *cfg.dom_libor_vol, n, horizon,
                                  report.violations);
    if (cfg.for_libor_vol)
        detail::check_vol_surface("foreign volatility", *cfg.for_libor_vol, n, horizon,
                                  report.violations);
    if (cfg.terminal_fx_vol)
        detail::check_vol_surface("terminal FX volatility", *cfg.terminal_fx_vol, n, horizon,
                                  report.violations);

    if (!(cfg.correlation.decay >= 0.0) || !std::isfinite(cfg.correlation.decay))
        report.violations.push_back("correlation decay must be >= 0");
    if (cfg.correlation.form == CorrelationForm::ExponentialWithFloor &&
        (cfg.correlation.floor < 0.0 || cfg.correlation.floor >= 1.0))
        report.violations.push_back("correlation floor must be in [0,1)");
    if (!(cfg.quanto_fixed_fx > 0.0))
        report.violations.push_back("quanto fixed FX must be positive");

    if (report.ok()) {
        // PSD probe on the tenor grid refined 4x, from time 0
        std::vector<double> grid;
        double prev = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double next = tenor.date(i);
            if (next > prev) {
                for (int k = 1; k <= 4; ++k) grid.push_back(prev + (next - prev) * k / 4.0);
            } else if (i == 0) {
                grid.push_back(next);
            }
            prev = next;
        }
        const auto matrix = correlation_matrix(cfg.correlation, grid);
        auto psd = validate_correlation_matrix(matrix, grid.size());
        for (auto& v : psd.violations) report.violations.push_back(std::move(v));
    }
    return report;
}

}  // namespace crossfield
