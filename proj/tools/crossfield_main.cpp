// Command-line front end: load -> price -> validate -> report.
//
//   crossfield price    <instrument> --curves c.json --model m.json [--out r.csv]
//   crossfield validate <instrument> ... [--paths P --seed S --steps K]
//   crossfield inspect  adjustments ...
//   crossfield converge [instrument] ...
//
// Instruments: quanto-cap | quanto-cap-fx | ccs | fx-option.
// Exit codes: 0 success, 1 model/validation failure, 2 usage error.

#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crossfield/analytics.hpp"
#include "crossfield/market_io.hpp"
#include "crossfield/mc_engine.hpp"
#include "crossfield/pricers.hpp"

namespace {

using namespace crossfield;

struct Options {
    std::string instrument;
    std::string curves_path;
    std::string model_path;
    std::string out_path;
    std::optional<double> strike;
    std::optional<std::uint64_t> paths;
    std::optional<std::uint64_t> seed;
    std::optional<int> steps;
    std::optional<int> quad_order;
    std::optional<std::string> regime;
};

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--curves", opt.curves_path, "curves JSON file")->required();
    cmd->add_option("--model", opt.model_path, "model JSON file")->required();
    cmd->add_option("--out", opt.out_path, "results CSV path");
    cmd->add_option("--strike", opt.strike, "strike override (rate or FX level)");
    cmd->add_option("--paths", opt.paths, "Monte Carlo path count override");
    cmd->add_option("--seed", opt.seed, "Monte Carlo seed override");
    cmd->add_option("--steps", opt.steps, "Monte Carlo steps per accrual override");
    cmd->add_option("--quad-order", opt.quad_order, "Gauss-Legendre order override");
    cmd->add_option("--regime", opt.regime, "regime override: lognormal_libors|lognormal_fx");
}

InstrumentKind instrument_kind(const std::string& token) {
    if (token == "quanto-cap") return InstrumentKind::QuantoCap;
    if (token == "quanto-cap-fx") return InstrumentKind::QuantoCapFxLognormal;
    if (token == "ccs") return InstrumentKind::CrossCurrencySwap;
    if (token == "fx-option") return InstrumentKind::FxOption;
    throw CLI::ValidationError("instrument",
                               "unknown instrument '" + token +
                                   "' (expected quanto-cap|quanto-cap-fx|ccs|fx-option)");
}

struct Loaded {
    Market market;
    ModelFile file;
};

Loaded load(const Options& opt) {
    Market market = load_curves(opt.curves_path);
    ModelFile file = load_model(opt.model_path);
    if (opt.regime) file.model.regime = parse_regime(*opt.regime);
    if (opt.paths) file.mc.paths = *opt.paths;
    if (opt.seed) file.mc.seed = *opt.seed;
    if (opt.steps) file.mc.steps_per_accrual = *opt.steps;
    if (opt.quad_order) file.quadrature.order = *opt.quad_order;
    require_valid(file.model, market.tenor);
    return Loaded{std::move(market), std::move(file)};
}

QuantoCapSpec cap_spec(const Loaded& in, const Options& opt) {
    QuantoCapSpec spec;
    spec.strike = opt.strike ? *opt.strike
                             : libor_from_discounts(in.market.curves, in.market.tenor, 0,
                                                    Currency::Foreign);
    return spec;
}

FxOptionSpec fx_spec(const Loaded& in, const Options& opt) {
    FxOptionSpec spec;
    spec.expiry = in.market.tenor.last();
    spec.strike =
        opt.strike ? *opt.strike : forward_fx(in.market.curves, in.market.tenor, in.market.tenor.periods());
    return spec;
}

// defaults recorded alongside the result so runs are auditable
void record_run_config(PricingResult& result, const Loaded& in) {
    result.diag("config.quad_order", in.file.quadrature.order);
    result.diag("config.quad_panels", in.file.quadrature.panels);
    result.diag("config.mc_paths", static_cast<double>(in.file.mc.paths));
    result.diag("config.mc_steps", in.file.mc.steps_per_accrual);
    result.diag("config.mc_seed", static_cast<double>(in.file.mc.seed));
}

int run_price(const Options& opt) {
    const InstrumentKind kind = instrument_kind(opt.instrument);
    Loaded in = load(opt);
    PricingResult result;
    switch (kind) {
        case InstrumentKind::QuantoCap:
            result = quanto_cap(in.market, in.file.model, cap_spec(in, opt), in.file.quadrature);
            break;
        case InstrumentKind::QuantoCapFxLognormal:
            result = quanto_cap_fx_lognormal(in.market, in.file.model, cap_spec(in, opt),
                                             in.file.quadrature);
            break;
        case InstrumentKind::CrossCurrencySwap:
            result = ccs_price(in.market, in.file.model, in.file.quadrature);
            break;
        case InstrumentKind::FxOption:
            result = fx_call(in.market, in.file.model, fx_spec(in, opt), in.file.quadrature);
            break;
    }
    record_run_config(result, in);
    std::printf("%s = %.10f\n", opt.instrument.c_str(), result.value);
    if (!opt.out_path.empty()) {
        const ResultRow row{opt.instrument, result, std::nullopt};
        write_results(opt.out_path, std::span<const ResultRow>(&row, 1));
    }
    return 0;
}

int run_validate(const Options& opt) {
    const InstrumentKind kind = instrument_kind(opt.instrument);
    Loaded in = load(opt);
    Instrument instrument;
    instrument.kind = kind;
    if (kind == InstrumentKind::QuantoCap || kind == InstrumentKind::QuantoCapFxLognormal)
        instrument.cap = cap_spec(in, opt);
    if (kind == InstrumentKind::FxOption) instrument.fx = fx_spec(in, opt);

    const McValidation report = validate_against_analytic(instrument, in.market, in.file.model,
                                                          in.file.mc, in.file.quadrature);
    std::printf("%-14s %18s %18s %14s %10s\n", "name", "analytic", "mc", "stderr", "z");
    for (const auto& row : report.rows)
        std::printf("%-14s %18.10e %18.10e %14.6e %10.4f\n", row.name.c_str(), row.analytic,
                    row.mc_value, row.mc_stderr, row.z);
    std::printf("%s\n", report.commentary.c_str());

    if (!opt.out_path.empty()) {
        std::vector<ResultRow> rows;
        for (const auto& row : report.rows) {
            PricingResult result;
            result.value = row.mc_value;
            result.std_error = row.mc_stderr;
            result.diag("analytic", row.analytic);
            rows.push_back(ResultRow{row.name, std::move(result), row.z});
        }
        write_results(opt.out_path, rows);
    }
    return 0;
}

int run_inspect(const Options& opt) {
    if (opt.instrument != "adjustments")
        throw CLI::ValidationError("inspect", "unknown target '" + opt.instrument +
                                                  "' (expected adjustments)");
    Loaded in = load(opt);
    const AdjustmentReport report =
        compute_adjustments(in.market, in.file.model, in.file.quadrature);
    std::vector<ResultRow> rows;
    if (report.regime == Regime::LognormalLibors) {
        std::printf("%-6s %18s %18s %14s\n", "index", "omega", "alpha", "quad_err");
        for (std::size_t i = 0; i < report.omega.size(); ++i) {
            std::printf("%-6zu %18.12e %18.12e %14.4e\n", i, report.omega[i], report.alpha[i],
                        report.omega_err[i] + report.alpha_err[i]);
            PricingResult r;
            r.value = report.alpha[i];
            r.diag("omega", report.omega[i]);
            r.diag("quad_error", report.omega_err[i] + report.alpha_err[i]);
            rows.push_back(ResultRow{"adjustment[" + std::to_string(i) + "]", std::move(r),
                                     std::nullopt});
        }
    } else {
        std::printf("%-6s %18s %18s %14s\n", "index", "gamma", "beta", "quad_err");
        for (std::size_t i = 0; i < report.beta.size(); ++i) {
            std::printf("%-6zu %18.12e %18.12e %14.4e\n", i, report.gamma[i], report.beta[i],
                        report.gamma_err[i] + report.beta_err[i]);
            PricingResult r;
            r.value = report.beta[i];
            r.diag("gamma", report.gamma[i]);
            r.diag("quad_error", report.gamma_err[i] + report.beta_err[i]);
            rows.push_back(ResultRow{"adjustment[" + std::to_string(i) + "]", std::move(r),
                                     std::nullopt});
        }
    }
    std::printf("fx variance gamma(0,T_N) = %.12e (quad err %.4e)\n", report.fx_variance,
                report.fx_variance_err);
    PricingResult r;
    r.value = report.fx_variance;
    r.diag("quad_error", report.fx_variance_err);
    rows.push_back(ResultRow{"fx_variance", std::move(r), std::nullopt});
    if (!opt.out_path.empty()) write_results(opt.out_path, rows);
    return 0;
}

int run_converge(const Options& opt) {
    const InstrumentKind kind = instrument_kind(opt.instrument);
    Loaded in = load(opt);
    std::vector<ResultRow> rows;

    auto price_with = [&](const QuadratureConfig& q) {
        switch (kind) {
            case InstrumentKind::QuantoCap:
                return quanto_cap(in.market, in.file.model, cap_spec(in, opt), q).value;
            case InstrumentKind::QuantoCapFxLognormal:
                return quanto_cap_fx_lognormal(in.market, in.file.model, cap_spec(in, opt), q)
                    .value;
            case InstrumentKind::CrossCurrencySwap:
                return ccs_price(in.market, in.file.model, q).value;
            case InstrumentKind::FxOption:
                return fx_call(in.market, in.file.model, fx_spec(in, opt), q).value;
        }
        return 0.0;
    };

    std::printf("quadrature order sweep\n");
    for (int order : {2, 3, 4, 6, 8, 12, 16}) {
        QuadratureConfig q = in.file.quadrature;
        q.order = order;
        PricingResult r;
        r.value = price_with(q);
        std::printf("  order %2d: %.14e\n", order, r.value);
        rows.push_back(ResultRow{"quad[order=" + std::to_string(order) + "]", std::move(r),
                                 std::nullopt});
    }

    std::printf("Monte Carlo path sweep\n");
    Instrument instrument;
    instrument.kind = kind;
    if (kind == InstrumentKind::QuantoCap || kind == InstrumentKind::QuantoCapFxLognormal)
        instrument.cap = cap_spec(in, opt);
    if (kind == InstrumentKind::FxOption) instrument.fx = fx_spec(in, opt);
    for (std::size_t paths : {std::size_t{1000}, std::size_t{4000}, std::size_t{16000},
                              std::size_t{64000}}) {
        McConfig mc = in.file.mc;
        mc.paths = paths;
        const McValidation rep = validate_against_analytic(instrument, in.market, in.file.model,
                                                           mc, in.file.quadrature);
        const auto& total = rep.rows.back();
        PricingResult r;
        r.value = total.mc_value;
        r.std_error = total.mc_stderr;
        r.diag("analytic", total.analytic);
        std::printf("  paths %6zu: %.10e (stderr %.3e)\n", paths, total.mc_value,
                    total.mc_stderr);
        rows.push_back(ResultRow{"mc[paths=" + std::to_string(paths) + "]", std::move(r),
                                 total.z});
    }
    if (!opt.out_path.empty()) write_results(opt.out_path, rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-currency random-field LIBOR market model pricing engine"};
    app.require_subcommand(1);

    Options price_opt, validate_opt, inspect_opt, converge_opt;
    CLI::App* price = app.add_subcommand("price", "closed-form price of one instrument");
    price->add_option("instrument", price_opt.instrument, "quanto-cap|quanto-cap-fx|ccs|fx-option")
        ->required();
    add_common(price, price_opt);

    CLI::App* validate = app.add_subcommand("validate", "analytic vs Monte Carlo with z-scores");
    validate
        ->add_option("instrument", validate_opt.instrument,
                     "quanto-cap|quanto-cap-fx|ccs|fx-option")
        ->required();
    add_common(validate, validate_opt);

    CLI::App* inspect = app.add_subcommand("inspect", "inspect model quantities");
    inspect->add_option("target", inspect_opt.instrument, "adjustments")->required();
    add_common(inspect, inspect_opt);

    CLI::App* converge = app.add_subcommand("converge", "quadrature and path-count sweeps");
    converge->add_option("instrument", converge_opt.instrument,
                         "quanto-cap|quanto-cap-fx|ccs|fx-option");
    converge_opt.instrument = "quanto-cap";
    add_common(converge, converge_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (price->parsed()) return run_price(price_opt);
        if (validate->parsed()) return run_validate(validate_opt);
        if (inspect->parsed()) return run_inspect(inspect_opt);
        if (converge->parsed()) return run_converge(converge_opt);
        std::fprintf(stderr, "no subcommand\n");
        return 2;
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
