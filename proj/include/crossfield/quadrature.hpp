#pragma once

// Deterministic nested integration on boxes and moving-limit prisms.
//
// All rules are tensor products of 1-D composite panels (Gauss-Legendre or
// trapezoid).  The inner-most axis can be split at the current value of the
// middle axis; exponential correlation kernels have a C^0 ridge along u == v
// and are only piecewise smooth, so the split is what keeps high-order rules
// at their nominal accuracy.
//
// Every integrator returns the refined value together with |refined - coarse|
// from one panel-doubling.  The estimate is advisory; callers surface it in
// diagnostics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crossfield {

enum class QuadratureRule { GaussLegendre, CompositeTrapezoid };

struct QuadratureConfig {
    QuadratureRule rule{QuadratureRule::GaussLegendre};
    int order{8};   // points per panel (Gauss) / subintervals per panel (trapezoid)
    int panels{1};  // panels per axis and accrual period
};

struct Estimate {
    double value{0.0};
    double error{0.0};  // |refined - coarse| from one panel-doubling
};

// Inner axis of a prism: [lower, upper], or [s, upper] when lower_is_outer.
struct PrismAxis {
    double lower{0.0};
    double upper{0.0};
    bool lower_is_outer{false};
};

namespace detail {

struct Node {
    double x;
    double w;
};

// Gauss-Legendre abscissas/weights on [-1, 1] by Newton iteration on P_n.
inline std::vector<Node> gauss_legendre_rule(int n) {
    if (n < 1) throw std::invalid_argument("quadrature order must be >= 1");
    std::vector<Node> rule(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int k = 0; k < half; ++k) {
        double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
        double deriv = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            // n == 1: p1 = x, derivative 1
            deriv = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / deriv;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        rule[static_cast<std::size_t>(k)] = Node{-x, w};
        rule[static_cast<std::size_t>(n - 1 - k)] = Node{x, w};
    }
    if (n == 1) rule[0] = Node{0.0, 2.0};
    return rule;
}

// Panel edges of [a, b]: split at interior breakpoints, then `panels` equal
// panels per segment.
inline void panel_edges(double a, double b, std::span<const double> breaks, int panels,
                        std::vector<double>& edges) {
    edges.clear();
    const double span = b - a;
    const double tol = 1e-14 * std::max(1.0, std::abs(a) + std::abs(b));
    std::vector<double> cuts{a};
    for (double c : breaks) {
        if (c > a + tol && c < b - tol) cuts.push_back(c);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double lo = cuts[s];
        const double hi = cuts[s + 1];
        if (hi - lo <= tol * std::max(1.0, span)) continue;
        for (int p = 0; p < panels; ++p) {
            edges.push_back(lo + (hi - lo) * p / panels);
        }
    }
    edges.push_back(b);
}

// Nodes of the composite rule on [a, b].  Returns nothing when the interval
// is empty or inverted within tolerance; throws when clearly inverted.
inline void axis_nodes(const QuadratureConfig& cfg, int panel_mult, double a, double b,
                       std::span<const double> breaks, std::vector<Node>& out) {
    out.clear();
    const double tol = 1e-14 * std::max(1.0, std::abs(a) + std::abs(b));
    if (b <= a + tol) {
        if (b < a - tol) throw std::invalid_argument("quadrature bounds inverted");
        return;
    }
    static thread_local std::vector<double> edges;
    panel_edges(a, b, breaks, std::max(1, cfg.panels * panel_mult), edges);
    if (cfg.rule == QuadratureRule::GaussLegendre) {
        const auto rule = gauss_legendre_rule(cfg.order);
        for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
            const double mid = 0.5 * (edges[s] + edges[s + 1]);
            const double hw = 0.5 * (edges[s + 1] - edges[s]);
            for (const Node& n : rule) out.push_back(Node{mid + hw * n.x, hw * n.w});
        }
    } else {
        const int m = std::max(2, cfg.order);
        for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
            const double h = (edges[s + 1] - edges[s]) / m;
            for (int k = 0; k <= m; ++k) {
                const double w = (k == 0 || k == m) ? 0.5 * h : h;
                out.push_back(Node{edges[s] + h * k, w});
            }
        }
    }
}

inline double checked(double v) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite integrand sample");
    return v;
}

}  // namespace detail

// 1-D integral over [a, b] with optional interior breakpoints.
template <class F>
Estimate integrate_1d(F&& f, double a, double b, const QuadratureConfig& cfg,
                      std::span<const double> breaks = {}) {
    std::vector<detail::Node> nodes;
    auto run = [&](int mult) {
        detail::axis_nodes(cfg, mult, a, b, breaks, nodes);
        double acc = 0.0;
        for (const auto& n : nodes) acc += n.w * detail::checked(f(n.x));
        return acc;
    };
    const double coarse = run(1);
    const double refined = run(2);
    return Estimate{refined, std::abs(refined - coarse)};
}

// Tensor integral of f(u, v) over [a1,b1] x [a2,b2].  split_v_at_u inserts a
// panel breakpoint at v == u for each outer node.
template <class F>
Estimate integrate_box2(F&& f, double a1, double b1, double a2, double b2,
                        const QuadratureConfig& cfg, bool split_v_at_u = false) {
    std::vector<detail::Node> un, vn;
    auto run = [&](int mult) {
        detail::axis_nodes(cfg, mult, a1, b1, {}, un);
        double acc = 0.0;
        for (const auto& u : un) {
            const double cut = u.x;
            detail::axis_nodes(cfg, mult, a2, b2,
                               split_v_at_u ? std::span<const double>(&cut, 1)
                                            : std::span<const double>(),
                               vn);
            double inner = 0.0;
            for (const auto& v : vn) inner += v.w * detail::checked(f(u.x, v.x));
            acc += u.w * inner;
        }
        return acc;
    };
    const double coarse = run(1);
    const double refined = run(2);
    return Estimate{refined, std::abs(refined - coarse)};
}

// Tensor integral of f(s, u, v) over a box.
template <class F>
Estimate integrate_box3(F&& f, double as, double bs, double au, double bu, double av,
                        double bv, const QuadratureConfig& cfg, bool split_v_at_u = false) {
    std::vector<detail::Node> sn, un, vn;
    auto run = [&](int mult) {
        detail::axis_nodes(cfg, mult, as, bs, {}, sn);
        detail::axis_nodes(cfg, mult, au, bu, {}, un);
        double acc = 0.0;
        for (const auto& s : sn) {
            double mid = 0.0;
            for (const auto& u : un) {
                const double cut = u.x;
                detail::axis_nodes(cfg, mult, av, bv,
                                   split_v_at_u ? std::span<const double>(&cut, 1)
                                                : std::span<const double>(),
                                   vn);
                double inner = 0.0;
                for (const auto& v : vn) inner += v.w * detail::checked(f(s.x, u.x, v.x));
                mid += u.w * inner;
            }
            acc += s.w * mid;
        }
        return acc;
    };
    const double coarse = run(1);
    const double refined = run(2);
    return Estimate{refined, std::abs(refined - coarse)};
}

// Moving-limit prism: s runs over [as, bs]; each inner axis runs over
// [axis.lower, axis.upper], with lower replaced by s when lower_is_outer.
// Inner boxes are re-noded per outer node.
template <class F>
Estimate integrate_prism3(F&& f, double as, double bs, PrismAxis u_axis, PrismAxis v_axis,
                          const QuadratureConfig& cfg, bool split_v_at_u = false) {
    std::vector<detail::Node> sn, un, vn;
    auto run = [&](int mult) {
        detail::axis_nodes(cfg, mult, as, bs, {}, sn);
        double acc = 0.0;
        for (const auto& s : sn) {
            const double ulo = u_axis.lower_is_outer ? s.x : u_axis.lower;
            const double vlo = v_axis.lower_is_outer ? s.x : v_axis.lower;
            detail::axis_nodes(cfg, mult, ulo, u_axis.upper, {}, un);
            double mid = 0.0;
            for (const auto& u : un) {
                const double cut = u.x;
                detail::axis_nodes(cfg, mult, vlo, v_axis.upper,
                                   split_v_at_u ? std::span<const double>(&cut, 1)
                                                : std::span<const double>(),
                                   vn);
                double inner = 0.0;
                for (const auto& v : vn) inner += v.w * detail::checked(f(s.x, u.x, v.x));
                mid += u.w * inner;
            }
            acc += s.w * mid;
        }
        return acc;
    };
    const double coarse = run(1);
    const double refined = run(2);
    return Estimate{refined, std::abs(refined - coarse)};
}

// Symmetric prism with both inner axes on [s, inner_upper].
template <class F>
Estimate integrate_prism3(F&& f, double as, double bs, double inner_upper,
                          const QuadratureConfig& cfg, bool split_v_at_u = false) {
    return integrate_prism3(std::forward<F>(f), as, bs, PrismAxis{0.0, inner_upper, true},
                            PrismAxis{0.0, inner_upper, true}, cfg, split_v_at_u);
}

}  // namespace crossfield
