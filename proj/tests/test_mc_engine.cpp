#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "crossfield/market_io.hpp"
#include "crossfield/mc_engine.hpp"

using namespace crossfield;

namespace {

const QuadratureConfig kQuad{QuadratureRule::GaussLegendre, 8, 1};

ModelConfig constant_model(Regime regime, double dom, double frn, double fx, double beta) {
    ModelConfig cfg;
    cfg.regime = regime;
    VolSurfaceSpec d;
    d.level = dom;
    cfg.dom_libor_vol = d;
    VolSurfaceSpec f;
    f.level = frn;
    cfg.for_libor_vol = f;
    VolSurfaceSpec x;
    x.level = fx;
    cfg.terminal_fx_vol = x;
    cfg.correlation.decay = beta;
    return cfg;
}

Market flat_market(double dom_rate = 0.02, double frn_rate = 0.03) {
    std::vector<double> dates{0.5, 1.0, 1.5, 2.0, 2.5};
    std::vector<double> dom, frn;
    double bd = 1.0, bf = 1.0;
    for (std::size_t k = 0; k < dates.size(); ++k) {
        bd /= 1.0 + 0.5 * dom_rate;
        bf /= 1.0 + 0.5 * frn_rate;
        dom.push_back(bd);
        frn.push_back(bf);
    }
    return Market{Tenor(dates), CurveSet(dates, dom, frn, 1.3)};
}

}  // namespace

TEST_CASE("maturity grid refines the tenor from the valuation date") {
    const Market market = flat_market();
    const auto grid = make_maturity_grid(market.tenor, 4);
    REQUIRE(grid.size() == 21);  // 5 segments x 4 + 1
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 2.5);
    for (std::size_t i = 0; i <= market.tenor.periods(); ++i) {
        bool found = false;
        for (double g : grid) found = found || std::abs(g - market.tenor.date(i)) < 1e-12;
        CHECK(found);
    }
}

TEST_CASE("field factor basics") {
    // degenerate one-point grid
    const CorrelationSpec unit{CorrelationForm::Exponential, 1.0, 0.0};
    std::vector<double> one{0.5};
    const auto single = build_field_factor(unit, one);
    REQUIRE(single.rank == 1);
    CHECK(single.factor[0] == Catch::Approx(1.0));

    // two-point grid: off-diagonal e^{-0.5}, near-exact reconstruction
    std::vector<double> two{0.5, 1.0};
    const auto pair = build_field_factor(unit, two);
    CHECK(pair.corr[1] == Catch::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK(pair.reconstruction_error <= 1e-12);

    // beta = 0: all-ones kernel is rank one after the PSD repair
    const CorrelationSpec flat{CorrelationForm::Exponential, 0.0, 0.0};
    std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
    const auto repaired = build_field_factor(flat, grid);
    CHECK(repaired.rank == 1);
    CHECK(repaired.reconstruction_error <= 1e-10);

    // weights sum to the grid span
    double total = 0.0;
    for (double w : repaired.weights) total += w;
    CHECK(total == Catch::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("zero volatility freezes every path at the initial state") {
    const Market market = flat_market();
    const auto model = constant_model(Regime::LognormalLibors, 0.0, 0.0, 0.0, 0.5);
    McConfig mc;
    mc.paths = 8;
    mc.steps_per_accrual = 2;
    mc.maturity_resolution = 2;
    const auto disc = build_field_factor(model.correlation,
                                         make_maturity_grid(market.tenor, 2));
    const PathSet paths = simulate_terminal_measure(market, model, mc, disc, kQuad);

    const FrozenState state = FrozenState::from_curves(market);
    const double x0 = forward_fx(market.curves, market.tenor, market.tenor.periods());
    for (std::size_t p = 0; p < paths.paths(); ++p) {
        for (std::size_t k = 0; k <= market.tenor.periods(); ++k) {
            CHECK(paths.fx_forward(p, k) == Catch::Approx(x0).epsilon(1e-15));
            for (std::size_t j = 0; j < market.tenor.periods(); ++j) {
                CHECK(paths.dom_rate(p, k, j) == Catch::Approx(state.dom_libor[j]).epsilon(1e-15));
                CHECK(paths.for_rate(p, k, j) == Catch::Approx(state.for_libor[j]).epsilon(1e-15));
            }
        }
    }
}

TEST_CASE("same seed and config give bit-identical paths, any worker count") {
    const Market market = flat_market();
    const auto model = constant_model(Regime::LognormalLibors, 0.2, 0.2, 0.1, 0.5);
    const auto disc = build_field_factor(model.correlation,
                                         make_maturity_grid(market.tenor, 2));
    McConfig mc;
    mc.paths = 64;
    mc.steps_per_accrual = 2;
    mc.maturity_resolution = 2;
    mc.seed = 99;

    McConfig serial = mc;
    serial.threads = 1;
    McConfig parallel = mc;
    parallel.threads = 3;
    const PathSet a = simulate_terminal_measure(market, model, serial, disc, kQuad);
    const PathSet b = simulate_terminal_measure(market, model, parallel, disc, kQuad);
    const PathSet c = simulate_terminal_measure(market, model, parallel, disc, kQuad);
    for (std::size_t p = 0; p < a.paths(); ++p)
        for (std::size_t k = 0; k <= market.tenor.periods(); ++k) {
            CHECK(a.fx_forward(p, k) == b.fx_forward(p, k));
            CHECK(b.fx_forward(p, k) == c.fx_forward(p, k));
            for (std::size_t j = 0; j < market.tenor.periods(); ++j) {
                CHECK(a.dom_rate(p, k, j) == b.dom_rate(p, k, j));
                CHECK(a.for_rate(p, k, j) == b.for_rate(p, k, j));
            }
        }
}

TEST_CASE("antithetic pairing flips the driving noise") {
    const Market market = flat_market();
    // domestic-only vol, beta = 0: single factor, so log-rates move symmetrically
    const auto model = constant_model(Regime::LognormalLibors, 0.2, 0.0, 0.0, 0.0);
    const auto disc = build_field_factor(model.correlation,
                                         make_maturity_grid(market.tenor, 2));
    McConfig mc;
    mc.paths = 4;
    mc.steps_per_accrual = 1;
    mc.maturity_resolution = 2;
    const PathSet paths = simulate_terminal_measure(market, model, mc, disc, kQuad);
    const std::size_t n = market.tenor.periods();
    const double l0 = libor_from_discounts(market.curves, market.tenor, n - 1);
    // drift is -(1/2)Lambda h for the terminal rate; antithetic members mirror around it
    const double up = std::log(paths.dom_rate(0, n, n - 1) / l0);
    const double dn = std::log(paths.dom_rate(1, n, n - 1) / l0);
    const double drift_part = 0.5 * (up + dn);
    CHECK(drift_part < 0.0);
    CHECK(std::abs(up - drift_part) == Catch::Approx(std::abs(dn - drift_part)).epsilon(1e-10));
}

TEST_CASE("foreign drift: telescoped form equals the direct expansion") {
    const Market market = flat_market();
    const Tenor& tenor = market.tenor;
    ModelConfig model = constant_model(Regime::LognormalLibors, 0.15, 0.2, 0.1, 0.5);
    model.for_libor_vol->form = VolForm::Rebonato;
    model.for_libor_vol->a = 0.1;
    model.for_libor_vol->b = 0.3;
    model.for_libor_vol->c = 0.8;
    model.for_libor_vol->d = 0.05;
    model.correlation.form = CorrelationForm::ExponentialWithFloor;
    model.correlation.floor = 0.2;
    const FrozenState state = FrozenState::from_curves(market);
    const double t = 0.2;

    for (std::size_t i = 0; i < tenor.periods(); ++i) {
        // direct: change measure Q^F -> Q_{T_{i+1}} -> Q_{T_N} without cancelling
        double direct = 0.0;
        for (std::size_t k = i + 1; k < tenor.periods(); ++k)
            direct -= state.dom_accrual[k] *
                      lambda_cov(model, tenor, i, k, t, CovRole::ForDom, kQuad).value;
        auto against_fx = [&](double u) {
            return strip_vol(model, tenor, VolRole::ForLibor, i, t, u) *
                   fx_c_integral(model, tenor, state, i + 1, t, u, kQuad);
        };
        direct -= integrate_1d(against_fx, tenor.date(i), tenor.date(i + 1), kQuad).value;

        // telescoped: the A Lambda^{FD} terms cancel, leaving the terminal FX cross term
        double telescoped = 0.0;
        for (std::size_t j = i + 1; j < tenor.periods(); ++j)
            telescoped -= state.for_accrual[j] *
                          lambda_cov(model, tenor, i, j, t, CovRole::ForFor, kQuad).value;
        auto cross = [&](double u, double v) {
            return strip_vol(model, tenor, VolRole::ForLibor, i, t, u) *
                   terminal_fx_vol_at(model, t, v) * eval_corr(model.correlation, u, v);
        };
        telescoped -= integrate_box2(cross, tenor.date(i), tenor.date(i + 1), t, tenor.last(),
                                     kQuad, true)
                          .value;

        CHECK(direct == Catch::Approx(telescoped).margin(1e-12));
    }
}

TEST_CASE("mc_price identities") {
    const Market market = flat_market();
    const std::size_t n = market.tenor.periods();
    const auto model = constant_model(Regime::LognormalLibors, 0.2, 0.2, 0.1, 0.5);
    const auto disc = build_field_factor(model.correlation,
                                         make_maturity_grid(market.tenor, 2));
    McConfig mc;
    mc.paths = 2000;
    mc.steps_per_accrual = 2;
    mc.maturity_resolution = 2;
    const PathSet paths = simulate_terminal_measure(market, model, mc, disc, kQuad);

    // unit paid at T_N is the numeraire identity, exact with zero stderr
    const PricingResult terminal = mc_price(paths, unit_payoff(n), market);
    CHECK(terminal.value == Catch::Approx(market.curves.discount(market.tenor.last()))
                                .epsilon(1e-13));
    CHECK(*terminal.std_error <= 1e-13);

    // unit paid earlier reproduces B(0,T_k) within 3 standard errors
    for (std::size_t k = 1; k + 1 <= n; ++k) {
        const PricingResult bond = mc_price(paths, unit_payoff(k), market);
        CHECK(std::abs(bond.value - market.curves.discount(market.tenor.date(k))) <=
              3.0 * *bond.std_error);
    }

    CHECK_THROWS_AS(mc_price(paths, unit_payoff(n + 1), market), std::out_of_range);
}

TEST_CASE("zero-vol quanto caplet payoff prices exactly") {
    const Market market = flat_market();
    const auto model = constant_model(Regime::LognormalLibors, 0.0, 0.0, 0.0, 0.0);
    const auto disc = build_field_factor(model.correlation,
                                         make_maturity_grid(market.tenor, 2));
    McConfig mc;
    mc.paths = 16;
    mc.steps_per_accrual = 1;
    mc.maturity_resolution = 2;
    const PathSet paths = simulate_terminal_measure(market, model, mc, disc, kQuad);

    const FrozenState state = FrozenState::from_curves(market);
    const std::size_t i = 1;
    const double strike = 0.025;
    const PricingResult result =
        mc_price(paths, quanto_caplet_payoff(market, i, strike, 1.0), market);
    const double expected = 0.5 * std::max(state.for_libor[i] - strike, 0.0) *
                            market.curves.discount(market.tenor.date(i + 1));
    CHECK(result.value == Catch::Approx(expected).epsilon(1e-13));
    CHECK(*result.std_error <= 1e-14);
}

TEST_CASE("spot FX reconstruction") {
    const Market market = flat_market(0.03, 0.03);  // identical curves
    const std::size_t n = market.tenor.periods();
    const auto model = constant_model(Regime::LognormalLibors, 0.0, 0.0, 0.0, 0.0);
    const auto disc = build_field_factor(model.correlation,
                                         make_maturity_grid(market.tenor, 2));
    McConfig mc;
    mc.paths = 8;
    mc.steps_per_accrual = 1;
    mc.maturity_resolution = 2;
    const PathSet paths = simulate_terminal_measure(market, model, mc, disc, kQuad);

    const auto spot_terminal = reconstruct_spot_fx(paths, market, n);
    for (std::size_t p = 0; p < paths.paths(); ++p)
        CHECK(spot_terminal[p] == Catch::Approx(paths.fx_forward(p, n)).epsilon(1e-15));

    const auto spot_mid = reconstruct_spot_fx(paths, market, 2);
    for (std::size_t p = 0; p < paths.paths(); ++p)
        CHECK(spot_mid[p] == Catch::Approx(market.curves.spot_fx()).epsilon(1e-13));
}

TEST_CASE("maturity grid and step grid may disagree") {
    const Market market = flat_market();
    const std::size_t n = market.tenor.periods();
    const auto model = constant_model(Regime::LognormalLibors, 0.2, 0.2, 0.1, 0.5);
    const auto disc = build_field_factor(model.correlation,
                                         make_maturity_grid(market.tenor, 2));
    McConfig mc;
    mc.paths = 20000;
    mc.steps_per_accrual = 3;  // step starts fall between grid points
    mc.maturity_resolution = 2;
    const PathSet paths = simulate_terminal_measure(market, model, mc, disc, kQuad);
    CHECK(paths.aborted() == 0);

    // the FX leg keeps its exact martingale property regardless of alignment
    double sum = 0.0;
    for (std::size_t p = 0; p < paths.paths(); ++p) sum += paths.fx_forward(p, n);
    const double mean = sum / static_cast<double>(paths.paths());
    const double x0 = forward_fx(market.curves, market.tenor, n);
    CHECK(mean == Catch::Approx(x0).epsilon(0.01));
}

TEST_CASE("config errors") {
    const Market market = flat_market();
    const auto model = constant_model(Regime::LognormalLibors, 0.2, 0.2, 0.1, 0.5);
    const auto disc = build_field_factor(model.correlation,
                                         make_maturity_grid(market.tenor, 2));
    McConfig odd;
    odd.paths = 7;
    odd.antithetic = true;
    CHECK_THROWS_AS(simulate_terminal_measure(market, model, odd, disc, kQuad),
                    std::invalid_argument);
    McConfig tiny;
    tiny.paths = 1;
    CHECK_THROWS_AS(simulate_terminal_measure(market, model, tiny, disc, kQuad),
                    std::invalid_argument);

    ModelConfig broken = model;
    broken.for_libor_vol.reset();
    McConfig mc;
    mc.paths = 4;
    CHECK_THROWS_AS(simulate_terminal_measure(market, broken, mc, disc, kQuad),
                    std::invalid_argument);
}

TEST_CASE("path set accessors guard unsimulated state") {
    PathSet paths(2, 3, false);
    CHECK_THROWS_AS(paths.dom_rate(0, 4, 0), std::out_of_range);
    CHECK_THROWS_AS(paths.for_rate(0, 0, 3), std::out_of_range);
    CHECK_THROWS_AS(paths.fx_forward(2, 0), std::out_of_range);
}

TEST_CASE("zero-vol validation reports z = 0") {
    const Market market = flat_market();
    const auto model = constant_model(Regime::LognormalLibors, 0.0, 0.0, 0.0, 0.0);
    Instrument cap;
    cap.kind = InstrumentKind::QuantoCap;
    cap.cap.strike = 0.025;
    McConfig mc;
    mc.paths = 16;
    mc.steps_per_accrual = 1;
    mc.maturity_resolution = 2;
    const McValidation report = validate_against_analytic(cap, market, model, mc, kQuad);
    REQUIRE_FALSE(report.rows.empty());
    for (const auto& row : report.rows) CHECK(row.z == 0.0);
}
