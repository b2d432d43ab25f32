#pragma once

#include "cohwork/errors.hpp"
#include "cohwork/ising.hpp"
#include "cohwork/table.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cohwork::sweep {

enum class Engine { ising, generic };

enum class OutputKind {
    distribution,
    histogram,
    average_work,
    fluctuation,
    fluctuation_relation,
    delta_f,
    w_irr,
    decomposition,
};

inline const char* to_string(OutputKind kind) {
    switch (kind) {
        case OutputKind::distribution: return "distribution";
        case OutputKind::histogram: return "histogram";
        case OutputKind::average_work: return "average_work";
        case OutputKind::fluctuation: return "fluctuation";
        case OutputKind::fluctuation_relation: return "fluctuation_relation";
        case OutputKind::delta_f: return "delta_f";
        case OutputKind::w_irr: return "w_irr";
        case OutputKind::decomposition: return "decomposition";
    }
    return "?";
}

struct HistogramSpec {
    double sigma = 0.1;
    double w_min = -10.0;
    double w_max = 10.0;
    int n_points = 2001;
};

struct SweepAxis {
    std::string param;           // N, lambda0, delta_lambda, T, p or phi
    std::vector<double> values;  // resolved grid, in declared order
};

struct ExperimentConfig {
    Engine engine = Engine::ising;
    ising::IsingQuenchSpec base;
    std::vector<SweepAxis> sweep;       // at most two axes
    std::vector<OutputKind> outputs;
    std::optional<HistogramSpec> histogram;
    double merge_tolerance = tol::default_merge;
    std::string output_path;  // empty = stdout
    Format format = Format::csv;

    bool wants(OutputKind kind) const {
        return std::find(outputs.begin(), outputs.end(), kind) != outputs.end();
    }
};

namespace detail {

inline double parse_phi(const Json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "pi") return M_PI;
        if (s == "pi/2") return M_PI / 2.0;
        try {
            std::size_t consumed = 0;
            const double v = std::stod(s, &consumed);
            if (consumed == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError(path + ": expected \"0\", \"pi\", \"pi/2\" or a float, got \"" + s +
                          "\"");
    }
    throw ConfigError(path + ": expected a number or phase string");
}

inline double require_number(const Json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing required key");
    if (!j.at(key).is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

inline void check_even_chain(double value, const std::string& path) {
    if (value != std::floor(value) || static_cast<long long>(value) % 2 != 0 || value < 2)
        throw ConfigError(path + ": N must be an even integer >= 2, got " +
                          Json(value).dump());
}

inline std::vector<double> resolve_axis_values(const Json& axis, const std::string& path) {
    const bool has_values = axis.contains("values");
    const bool has_range = axis.contains("range");
    if (has_values == has_range)
        throw ConfigError(path + ": exactly one of \"values\" or \"range\" is required");
    std::vector<double> out;
    if (has_values) {
        if (!axis.at("values").is_array() || axis.at("values").empty())
            throw ConfigError(path + ".values: expected a nonempty array of numbers");
        for (const auto& v : axis.at("values")) {
            if (!v.is_number()) throw ConfigError(path + ".values: expected numbers");
            out.push_back(v.get<double>());
        }
    } else {
        const auto& r = axis.at("range");
        if (!r.is_object()) throw ConfigError(path + ".range: expected an object");
        for (const auto& [key, value] : r.items())
            if (key != "from" && key != "to" && key != "step")
                throw ConfigError(path + ".range." + key + ": unknown key");
        const double from = require_number(r, "from", path + ".range");
        const double to = require_number(r, "to", path + ".range");
        const double step = require_number(r, "step", path + ".range");
        if (step <= 0.0) throw ConfigError(path + ".range.step: must be positive");
        if (to < from) throw ConfigError(path + ".range: \"to\" must be >= \"from\"");
        const auto count = static_cast<long long>(std::floor((to - from) / step + 1e-9));
        for (long long i = 0; i <= count; ++i) out.push_back(from + i * step);
    }
    return out;
}

}  // namespace detail

// Parses the single-document JSON experiment description. Unknown keys are
// rejected with their path; defaults are resolved (merge_tolerance 1e-9,
// format csv, empty sweep, output to stdout).
inline ExperimentConfig parse_config(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("$: config must be a JSON object");

    static const std::set<std::string> known = {
        "engine", "N",       "lambda0",         "delta_lambda", "T",
        "p",      "phi",     "sweep",           "outputs",      "histogram",
        "merge_tolerance",   "output_path",     "format"};
    for (const auto& [key, value] : doc.items())
        if (!known.count(key)) throw ConfigError("$." + key + ": unknown key");

    ExperimentConfig cfg;

    if (!doc.contains("engine") || !doc.at("engine").is_string())
        throw ConfigError("$.engine: expected \"ising\" or \"generic\"");
    const std::string engine = doc.at("engine").get<std::string>();
    if (engine == "ising")
        cfg.engine = Engine::ising;
    else if (engine == "generic")
        cfg.engine = Engine::generic;
    else
        throw ConfigError("$.engine: expected \"ising\" or \"generic\", got \"" + engine + "\"");

    const double n = detail::require_number(doc, "N", "$");
    detail::check_even_chain(n, "$.N");
    cfg.base.chain_length = static_cast<int>(n);
    cfg.base.field_initial = detail::require_number(doc, "lambda0", "$");
    cfg.base.quench_amplitude = detail::require_number(doc, "delta_lambda", "$");
    cfg.base.temperature = detail::require_number(doc, "T", "$");
    cfg.base.coherent_weight = detail::require_number(doc, "p", "$");
    if (!doc.contains("phi")) throw ConfigError("$.phi: missing required key");
    cfg.base.relative_phase = detail::parse_phi(doc.at("phi"), "$.phi");
    try {
        cfg.base.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("$: ") + e.what());
    }

    if (!doc.contains("outputs") || !doc.at("outputs").is_array() || doc.at("outputs").empty())
        throw ConfigError("$.outputs: expected a nonempty array");
    static const std::vector<std::pair<std::string, OutputKind>> output_names = {
        {"distribution", OutputKind::distribution},
        {"histogram", OutputKind::histogram},
        {"average_work", OutputKind::average_work},
        {"fluctuation", OutputKind::fluctuation},
        {"fluctuation_relation", OutputKind::fluctuation_relation},
        {"delta_f", OutputKind::delta_f},
        {"w_irr", OutputKind::w_irr},
        {"decomposition", OutputKind::decomposition}};
    for (std::size_t i = 0; i < doc.at("outputs").size(); ++i) {
        const auto& o = doc.at("outputs")[i];
        const std::string path = "$.outputs[" + std::to_string(i) + "]";
        if (!o.is_string()) throw ConfigError(path + ": expected a string");
        const std::string name = o.get<std::string>();
        const auto it = std::find_if(output_names.begin(), output_names.end(),
                                     [&](const auto& pair) { return pair.first == name; });
        if (it == output_names.end()) throw ConfigError(path + ": unknown output \"" + name + "\"");
        if (cfg.wants(it->second)) throw ConfigError(path + ": duplicate output \"" + name + "\"");
        cfg.outputs.push_back(it->second);
    }

    if (doc.contains("sweep")) {
        if (!doc.at("sweep").is_array()) throw ConfigError("$.sweep: expected an array");
        if (doc.at("sweep").size() > 2)
            throw ConfigError("$.sweep: at most 2 sweep axes are supported");
        static const std::set<std::string> sweepable = {"N",  "lambda0", "delta_lambda",
                                                        "T",  "p",       "phi"};
        for (std::size_t i = 0; i < doc.at("sweep").size(); ++i) {
            const auto& axis = doc.at("sweep")[i];
            const std::string path = "$.sweep[" + std::to_string(i) + "]";
            if (!axis.is_object()) throw ConfigError(path + ": expected an object");
            for (const auto& [key, value] : axis.items())
                if (key != "param" && key != "values" && key != "range")
                    throw ConfigError(path + "." + key + ": unknown key");
            if (!axis.contains("param") || !axis.at("param").is_string())
                throw ConfigError(path + ".param: expected a string");
            const std::string param = axis.at("param").get<std::string>();
            if (!sweepable.count(param))
                throw ConfigError(path + ".param: cannot sweep over unknown parameter \"" +
                                  param + "\"");
            for (const auto& other : cfg.sweep)
                if (other.param == param)
                    throw ConfigError(path + ".param: duplicate sweep axis \"" + param + "\"");
            SweepAxis resolved{param, detail::resolve_axis_values(axis, path)};
            if (param == "N")
                for (double v : resolved.values) detail::check_even_chain(v, path + ".values");
            cfg.sweep.push_back(std::move(resolved));
        }
    }

    const bool wants_histogram = cfg.wants(OutputKind::histogram);
    if (doc.contains("histogram") != wants_histogram)
        throw ConfigError(wants_histogram
                              ? "$.histogram: required when \"histogram\" is in outputs"
                              : "$.histogram: only allowed when \"histogram\" is in outputs");
    if (wants_histogram) {
        const auto& h = doc.at("histogram");
        if (!h.is_object()) throw ConfigError("$.histogram: expected an object");
        for (const auto& [key, value] : h.items())
            if (key != "sigma" && key != "w_min" && key != "w_max" && key != "n_points")
                throw ConfigError("$.histogram." + key + ": unknown key");
        HistogramSpec hs;
        hs.sigma = detail::require_number(h, "sigma", "$.histogram");
        hs.w_min = detail::require_number(h, "w_min", "$.histogram");
        hs.w_max = detail::require_number(h, "w_max", "$.histogram");
        const double np = detail::require_number(h, "n_points", "$.histogram");
        if (hs.sigma <= 0.0) throw ConfigError("$.histogram.sigma: must be positive");
        if (!(hs.w_max > hs.w_min)) throw ConfigError("$.histogram: w_max must exceed w_min");
        if (np != std::floor(np) || np < 2)
            throw ConfigError("$.histogram.n_points: must be an integer >= 2");
        hs.n_points = static_cast<int>(np);
        cfg.histogram = hs;
    }

    if (doc.contains("merge_tolerance")) {
        if (!doc.at("merge_tolerance").is_number() || doc.at("merge_tolerance").get<double>() <= 0.0)
            throw ConfigError("$.merge_tolerance: must be a positive number");
        cfg.merge_tolerance = doc.at("merge_tolerance").get<double>();
    }
    if (doc.contains("output_path")) {
        if (!doc.at("output_path").is_string())
            throw ConfigError("$.output_path: expected a string");
        cfg.output_path = doc.at("output_path").get<std::string>();
    }
    if (doc.contains("format")) {
        if (!doc.at("format").is_string()) throw ConfigError("$.format: expected a string");
        const std::string f = doc.at("format").get<std::string>();
        if (f == "csv")
            cfg.format = Format::csv;
        else if (f == "json")
            cfg.format = Format::json;
        else
            throw ConfigError("$.format: expected \"csv\" or \"json\", got \"" + f + "\"");
    }
    return cfg;
}

// Serializes the fully resolved configuration (for run metadata).
inline Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["engine"] = cfg.engine == Engine::ising ? "ising" : "generic";
    j["N"] = cfg.base.chain_length;
    j["lambda0"] = cfg.base.field_initial;
    j["delta_lambda"] = cfg.base.quench_amplitude;
    j["T"] = cfg.base.temperature;
    j["p"] = cfg.base.coherent_weight;
    j["phi"] = cfg.base.relative_phase;
    Json sweep = Json::array();
    for (const auto& axis : cfg.sweep)
        sweep.push_back(Json{{"param", axis.param}, {"values", axis.values}});
    j["sweep"] = std::move(sweep);
    Json outputs = Json::array();
    for (auto kind : cfg.outputs) outputs.push_back(to_string(kind));
    j["outputs"] = std::move(outputs);
    if (cfg.histogram)
        j["histogram"] = Json{{"sigma", cfg.histogram->sigma},
                              {"w_min", cfg.histogram->w_min},
                              {"w_max", cfg.histogram->w_max},
                              {"n_points", cfg.histogram->n_points}};
    j["merge_tolerance"] = cfg.merge_tolerance;
    j["output_path"] = cfg.output_path;
    j["format"] = cfg.format == Format::csv ? "csv" : "json";
    return j;
}

// Canned experiment definitions reproducing the published figure data.
//   fig1{a,b,c}{1,2,3}: work distribution and broadened histogram, N = 10,
//     delta_lambda = 0.5, phi = pi; rows a/b/c are (T=0.01, p=0),
//     (T=100, p=0), (T=100, p=1); columns 1/2/3 are lambda0 = 0, 1, 2.
//   fig2: <W> and dW^2 vs p (step 0.05) for lambda0 in {0, 0.5, 1, 1.5, 2};
//     delta_lambda = 0.1, T = 100, N = 100, phi = 0.
//   fig3: <W> and dW^2 vs lambda0 (step 0.02 on [0, 2]) for T in {0.01, 100};
//     delta_lambda = 0.1, N = 100, p = 1, phi = 0.
//   fig4: Delta F and W_irr vs p; T = 100, lambda0 = 0, delta_lambda = 0.1,
//     N = 100, phi = 0.
//   fig5: Delta F and W_irr vs lambda0 for T in {0.01, 100}; delta_lambda =
//     0.1, N = 100, p = 1, phi = 0.
inline ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    cfg.engine = Engine::ising;

    auto p_axis = [] {
        SweepAxis axis{"p", {}};
        for (int i = 0; i <= 20; ++i) axis.values.push_back(i * 0.05);
        return axis;
    };
    auto lambda0_axis = [] {
        SweepAxis axis{"lambda0", {}};
        for (int i = 0; i <= 100; ++i) axis.values.push_back(i * 0.02);
        return axis;
    };

    if (name.rfind("fig1", 0) == 0 && name.size() == 6) {
        const char row = name[4], col = name[5];
        if ((row != 'a' && row != 'b' && row != 'c') || (col < '1' || col > '3'))
            throw ConfigError("unknown preset \"" + name + "\"");
        cfg.base.chain_length = 10;
        cfg.base.quench_amplitude = 0.5;
        cfg.base.relative_phase = M_PI;
        cfg.base.temperature = row == 'a' ? 0.01 : 100.0;
        cfg.base.coherent_weight = row == 'c' ? 1.0 : 0.0;
        cfg.base.field_initial = static_cast<double>(col - '1');
        cfg.outputs = {OutputKind::distribution, OutputKind::histogram};
        cfg.histogram = HistogramSpec{0.1, -10.0, 10.0, 2001};
        return cfg;
    }
    if (name == "fig2") {
        cfg.base = {100, 0.0, 0.1, 100.0, 0.0, 0.0, {}};
        cfg.sweep = {p_axis(), SweepAxis{"lambda0", {0.0, 0.5, 1.0, 1.5, 2.0}}};
        cfg.outputs = {OutputKind::average_work, OutputKind::fluctuation};
        return cfg;
    }
    if (name == "fig3") {
        cfg.base = {100, 0.0, 0.1, 100.0, 1.0, 0.0, {}};
        cfg.sweep = {lambda0_axis(), SweepAxis{"T", {0.01, 100.0}}};
        cfg.outputs = {OutputKind::average_work, OutputKind::fluctuation};
        return cfg;
    }
    if (name == "fig4") {
        cfg.base = {100, 0.0, 0.1, 100.0, 0.0, 0.0, {}};
        cfg.sweep = {p_axis()};
        cfg.outputs = {OutputKind::delta_f, OutputKind::w_irr};
        return cfg;
    }
    if (name == "fig5") {
        cfg.base = {100, 0.0, 0.1, 100.0, 1.0, 0.0, {}};
        cfg.sweep = {lambda0_axis(), SweepAxis{"T", {0.01, 100.0}}};
        cfg.outputs = {OutputKind::delta_f, OutputKind::w_irr};
        return cfg;
    }
    throw ConfigError("unknown preset \"" + name + "\"");
}

inline std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (char row : {'a', 'b', 'c'})
        for (char col : {'1', '2', '3'}) names.push_back(std::string("fig1") + row + col);
    for (const char* n : {"fig2", "fig3", "fig4", "fig5"}) names.push_back(n);
    return names;
}

}  // namespace cohwork::sweep
