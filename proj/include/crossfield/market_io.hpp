#pragma once

// File formats: curves.json / model.json inputs, results.csv output.
// Malformed files raise ParseError; files that parse but violate invariants
// raise ValidationError.  Loads never partially construct state.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crossfield/mc_engine.hpp"
#include "crossfield/model_spec.hpp"
#include "crossfield/pricers.hpp"
#include "crossfield/quadrature.hpp"
#include "crossfield/term_structure.hpp"

namespace crossfield {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return doc;
}

template <class T>
T field(const nlohmann::json& doc, const std::string& key) {
    if (!doc.contains(key)) throw ValidationError("missing field '" + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("field '" + key + "': " + e.what());
    }
}

inline void check_schema(const nlohmann::json& doc, const std::string& what) {
    const int version = field<int>(doc, "schema_version");
    if (version != kSchemaVersion)
        throw ValidationError(what + ": unsupported schema_version " +
                              std::to_string(version) + " (expected " +
                              std::to_string(kSchemaVersion) + ")");
}

}  // namespace detail

// -- curves.json --------------------------------------------------------------
//
// { "schema_version": 1,
//   "tenor_dates": [0.5, 1.0, ...],
//   "domestic_discounts": [...], "foreign_discounts": [...],
//   "spot_fx": 1.3 }

inline Market load_curves(const std::filesystem::path& path) {
    const auto doc = detail::read_json(path);
    detail::check_schema(doc, "curves");
    auto dates = detail::field<std::vector<double>>(doc, "tenor_dates");
    auto dom = detail::field<std::vector<double>>(doc, "domestic_discounts");
    auto frn = detail::field<std::vector<double>>(doc, "foreign_discounts");
    const double spot = detail::field<double>(doc, "spot_fx");
    if (dom.size() != dates.size() || frn.size() != dates.size())
        throw ValidationError(path.string() + ": discount arrays must match tenor_dates");
    try {
        Tenor tenor(dates);
        CurveSet curves(std::move(dates), std::move(dom), std::move(frn), spot);
        return Market{std::move(tenor), std::move(curves)};
    } catch (const std::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

inline void write_curves(const std::filesystem::path& path, const Market& market) {
    nlohmann::json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["tenor_dates"] = std::vector<double>(market.tenor.dates().begin(),
                                             market.tenor.dates().end());
    doc["domestic_discounts"] = std::vector<double>(
        market.curves.domestic_discounts().begin(), market.curves.domestic_discounts().end());
    doc["foreign_discounts"] = std::vector<double>(market.curves.foreign_discounts().begin(),
                                                   market.curves.foreign_discounts().end());
    doc["spot_fx"] = market.curves.spot_fx();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

// -- model.json ----------------------------------------------------------------
//
// { "schema_version": 1,
//   "regime": "lognormal_libors" | "lognormal_fx",
//   "domestic_libor_vol": {"form": "constant", "level": 0.2, "scales": [...]},
//   "foreign_libor_vol":  {"form": "rebonato", "a":..,"b":..,"c":..,"d":..},
//   "terminal_fx_vol":    {...},
//   "correlation": {"form": "exponential", "decay": 0.5, "floor": 0.0},
//   "quanto_fixed_fx": 1.0,
//   "quadrature": {"rule": "gauss_legendre", "order": 8, "panels": 1},
//   "mc": {"paths":200000, "steps_per_accrual":4, "seed":42,
//          "antithetic":true, "maturity_resolution":4} }

struct ModelFile {
    ModelConfig model;
    QuadratureConfig quadrature;
    McConfig mc;
};

namespace detail {

inline VolSurfaceSpec parse_vol(const nlohmann::json& doc, const std::string& name) {
    VolSurfaceSpec spec;
    const std::string form = field<std::string>(doc, "form");
    if (form == "constant") {
        spec.form = VolForm::Constant;
        spec.level = field<double>(doc, "level");
    } else if (form == "rebonato") {
        spec.form = VolForm::Rebonato;
        spec.a = field<double>(doc, "a");
        spec.b = field<double>(doc, "b");
        spec.c = field<double>(doc, "c");
        spec.d = field<double>(doc, "d");
    } else {
        throw ValidationError(name + ": unknown vol form '" + form +
                              "' (expected constant|rebonato)");
    }
    if (doc.contains("scales")) spec.scales = field<std::vector<double>>(doc, "scales");
    return spec;
}

inline CorrelationSpec parse_correlation(const nlohmann::json& doc) {
    CorrelationSpec spec;
    const std::string form = field<std::string>(doc, "form");
    if (form == "exponential") {
        spec.form = CorrelationForm::Exponential;
    } else if (form == "exponential_floor") {
        spec.form = CorrelationForm::ExponentialWithFloor;
        spec.floor = field<double>(doc, "floor");
    } else {
        throw ValidationError("correlation: unknown form '" + form +
                              "' (expected exponential|exponential_floor)");
    }
    spec.decay = field<double>(doc, "decay");
    return spec;
}

}  // namespace detail

inline Regime parse_regime(const std::string& token) {
    if (token == "lognormal_libors") return Regime::LognormalLibors;
    if (token == "lognormal_fx") return Regime::LognormalFx;
    throw ValidationError("unknown regime '" + token +
                          "' (expected lognormal_libors|lognormal_fx)");
}

inline std::string regime_token(Regime regime) {
    return regime == Regime::LognormalLibors ? "lognormal_libors" : "lognormal_fx";
}

inline ModelFile load_model(const std::filesystem::path& path) {
    const auto doc = detail::read_json(path);
    detail::check_schema(doc, "model");
    ModelFile file;
    try {
        file.model.regime = parse_regime(detail::field<std::string>(doc, "regime"));
        if (doc.contains("domestic_libor_vol"))
            file.model.dom_libor_vol =
                detail::parse_vol(doc.at("domestic_libor_vol"), "domestic_libor_vol");
        if (doc.contains("foreign_libor_vol"))
            file.model.for_libor_vol =
                detail::parse_vol(doc.at("foreign_libor_vol"), "foreign_libor_vol");
        if (doc.contains("terminal_fx_vol"))
            file.model.terminal_fx_vol =
                detail::parse_vol(doc.at("terminal_fx_vol"), "terminal_fx_vol");
        if (!doc.contains("correlation")) throw ValidationError("missing field 'correlation'");
        file.model.correlation = detail::parse_correlation(doc.at("correlation"));
        file.model.quanto_fixed_fx = detail::field<double>(doc, "quanto_fixed_fx");
        if (doc.contains("quadrature")) {
            const auto& q = doc.at("quadrature");
            const std::string rule = detail::field<std::string>(q, "rule");
            if (rule == "gauss_legendre")
                file.quadrature.rule = QuadratureRule::GaussLegendre;
            else if (rule == "composite_trapezoid")
                file.quadrature.rule = QuadratureRule::CompositeTrapezoid;
            else
                throw ValidationError("quadrature: unknown rule '" + rule + "'");
            file.quadrature.order = detail::field<int>(q, "order");
            file.quadrature.panels = detail::field<int>(q, "panels");
            if (file.quadrature.order < 2 || file.quadrature.panels < 1)
                throw ValidationError("quadrature: order must be >= 2 and panels >= 1");
        }
        if (doc.contains("mc")) {
            const auto& m = doc.at("mc");
            file.mc.paths = detail::field<std::uint64_t>(m, "paths");
            file.mc.steps_per_accrual = detail::field<int>(m, "steps_per_accrual");
            file.mc.seed = detail::field<std::uint64_t>(m, "seed");
            if (m.contains("antithetic")) file.mc.antithetic = detail::field<bool>(m, "antithetic");
            if (m.contains("maturity_resolution"))
                file.mc.maturity_resolution = detail::field<int>(m, "maturity_resolution");
            if (file.mc.paths < 2 || file.mc.steps_per_accrual < 1 ||
                file.mc.maturity_resolution < 1)
                throw ValidationError("mc: paths >= 2, steps and resolution >= 1 required");
        }
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return file;
}

// Validates against a tenor once curves are known.
inline void require_valid(const ModelConfig& model, const Tenor& tenor) {
    const ValidationReport report = validate_config(model, tenor);
    if (!report.ok()) {
        std::string msg = "model configuration invalid:";
        for (const auto& v : report.violations) msg += "\n  - " + v;
        throw ValidationError(msg);
    }
}

// -- results.csv ----------------------------------------------------------------
//
// header: instrument,value,stderr,z_score,diag_key,diag_value
// The first row of each result carries value/stderr/z, follow-up rows carry
// one diagnostic pair each.  Numbers print at 17 significant digits so reruns
// are byte-identical.

struct ResultRow {
    std::string instrument;
    PricingResult result;
    std::optional<double> z_score;
};

namespace detail {

inline std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_results(std::ostream& out, std::span<const ResultRow> rows) {
    out << "instrument,value,stderr,z_score,diag_key,diag_value\n";
    for (const auto& row : rows) {
        out << row.instrument << ',' << detail::num17(row.result.value) << ',';
        if (row.result.std_error) out << detail::num17(*row.result.std_error);
        out << ',';
        if (row.z_score) out << detail::num17(*row.z_score);
        out << ",,\n";
        for (const auto& [key, value] : row.result.diagnostics)
            out << row.instrument << ",,,," << key << ',' << detail::num17(value) << '\n';
    }
}

inline void write_results(const std::filesystem::path& path, std::span<const ResultRow> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_results(out, rows);
}

}  // namespace crossfield
