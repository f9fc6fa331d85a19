// Copyright 2026 The collapse-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "collapse/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace collapse {

namespace {

using json = nlohmann::json;

// Typed accessors over one JSON object, tracking its pointer.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        const std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!ok.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) const { return j_.at(key); }
    std::string at(const std::string& key) const { return path_ + "/" + key; }

    double number(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        return as_number(raw(key), at(key));
    }

    std::uint64_t count(const char* key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        return as_count(raw(key), at(key));
    }

    std::string text(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        if (!raw(key).is_string()) throw ConfigError(at(key), "expected a string");
        return raw(key).get<std::string>();
    }

    const json& required(const char* key) const {
        if (!has(key)) throw ConfigError(at(key), "required key is missing");
        return raw(key);
    }

    static double as_number(const json& v, const std::string& where) {
        if (!v.is_number()) throw ConfigError(where, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(where, "must be finite");
        return d;
    }

    static std::uint64_t as_count(const json& v, const std::string& where) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer()) throw ConfigError(where, "must be a non-negative integer");
        throw ConfigError(where, "expected an integer");
    }

    static cplx as_complex(const json& v, const std::string& where) {
        if (v.is_number()) return {as_number(v, where), 0.0};
        if (v.is_array() && v.size() == 2) return {as_number(v[0], where + "/0"), as_number(v[1], where + "/1")};
        throw ConfigError(where, "expected a number or [re, im]");
    }

    static const json& array(const json& v, const std::string& where) {
        if (!v.is_array()) throw ConfigError(where, "expected an array");
        return v;
    }

private:
    const json& j_;
    std::string path_;
};

DetectorSpec read_detector(const json& j, const std::string& path, const DetectorSpec& base) {
    const Node n(j, path);
    n.allow({"levels", "omega", "anharmonicity", "alpha_active", "alpha_quiet", "dephasing_rate", "model"});
    DetectorSpec d = base;
    if (n.has("levels")) {
        const std::uint64_t levels = n.count("levels", 0);
        if (levels < 2 || levels > 4096) throw ConfigError(n.at("levels"), "must lie in [2, 4096]");
        d.basis = ModeBasis(static_cast<int>(levels));
    }
    d.omega = n.number("omega", d.omega);
    d.anharmonicity = n.number("anharmonicity", d.anharmonicity);
    if (n.has("alpha_active")) d.alpha_active = Node::as_complex(n.raw("alpha_active"), n.at("alpha_active"));
    if (n.has("alpha_quiet")) d.alpha_quiet = Node::as_complex(n.raw("alpha_quiet"), n.at("alpha_quiet"));
    d.dephasing_rate = n.number("dephasing_rate", d.dephasing_rate);
    if (n.has("model")) {
        const std::string m = n.text("model", "");
        if (m == "kerr") {
            d.model = DetectorModel::kerr;
        } else if (m == "inverted") {
            d.model = DetectorModel::inverted;
        } else {
            throw ConfigError(n.at("model"), "expected \"kerr\" or \"inverted\", got \"" + m + "\"");
        }
    }
    return d;
}

std::vector<cplx> read_amplitudes(const json& j, const std::string& path) {
    std::vector<cplx> out;
    const json& arr = Node::array(j, path);
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(Node::as_complex(arr[i], path + "/" + std::to_string(i)));
    return out;
}

Scenario read_scenario(const json& j) {
    const Node n(j, "/scenario");
    n.allow({"amplitudes", "detectors", "activation", "zeta", "dt", "t_max", "collapse_epsilon"});
    Scenario s;
    s.amplitudes = read_amplitudes(n.required("amplitudes"), n.at("amplitudes"));
    const json& dets = Node::array(n.required("detectors"), n.at("detectors"));
    for (std::size_t d = 0; d < dets.size(); ++d)
        s.detectors.push_back(read_detector(dets[d], n.at("detectors") + "/" + std::to_string(d), DetectorSpec{}));
    const json& act = Node::array(n.required("activation"), n.at("activation"));
    for (std::size_t k = 0; k < act.size(); ++k) {
        const std::string row_path = n.at("activation") + "/" + std::to_string(k);
        const json& row = Node::array(act[k], row_path);
        std::vector<bool> r;
        for (std::size_t d = 0; d < row.size(); ++d) {
            if (!row[d].is_boolean()) throw ConfigError(row_path + "/" + std::to_string(d), "expected true or false");
            r.push_back(row[d].get<bool>());
        }
        s.activation.push_back(std::move(r));
    }
    s.zeta = n.number("zeta", s.zeta);
    s.dt = n.number("dt", s.dt);
    s.t_max = n.number("t_max", s.t_max);
    s.collapse_epsilon = n.number("collapse_epsilon", s.collapse_epsilon);
    return s;
}

ExperimentConfig read_experiment(const json& j) {
    const Node n(j, "/experiment");
    n.allow({"trials", "master_seed", "output_dir", "thin"});
    ExperimentConfig e;
    e.trials = n.count("trials", e.trials);
    e.master_seed = n.count("master_seed", e.master_seed);
    e.output_dir = n.text("output_dir", e.output_dir);
    e.thin = n.count("thin", e.thin);
    return e;
}

RuinConfig read_ruin(const json& j) {
    const Node n(j, "/ruin");
    n.allow({"w0", "distribution", "delta", "absorb_floor", "sign_bias", "pair_scale", "max_steps"});
    RuinConfig r;
    if (n.has("w0")) {
        const json& arr = Node::array(n.raw("w0"), n.at("w0"));
        for (std::size_t i = 0; i < arr.size(); ++i)
            r.w0.push_back(Node::as_number(arr[i], n.at("w0") + "/" + std::to_string(i)));
    }
    if (n.has("distribution")) {
        const std::string kind = n.text("distribution", "");
        try {
            r.distribution.kind = parse_step_kind(kind);
        } catch (const ConfigError& e) {
            throw ConfigError(n.at("distribution"), e.message());
        }
    }
    r.distribution.scale = n.number("delta", r.distribution.scale);
    r.distribution.absorb_floor = n.number("absorb_floor", r.distribution.absorb_floor);
    r.rules.sign_bias = n.number("sign_bias", r.rules.sign_bias);
    if (n.has("pair_scale")) {
        const json& rows = Node::array(n.raw("pair_scale"), n.at("pair_scale"));
        for (std::size_t m = 0; m < rows.size(); ++m) {
            const std::string rp = n.at("pair_scale") + "/" + std::to_string(m);
            const json& row = Node::array(rows[m], rp);
            std::vector<double> v;
            for (std::size_t c = 0; c < row.size(); ++c) v.push_back(Node::as_number(row[c], rp + "/" + std::to_string(c)));
            r.rules.pair_scale.push_back(std::move(v));
        }
    }
    r.max_steps = n.count("max_steps", r.max_steps);
    return r;
}

VerifyConfig read_verify(const json& j) {
    const Node n(j, "/verify");
    n.allow({"points", "grid_resolution", "conservation_steps", "martingale_steps", "born_trials"});
    VerifyConfig v;
    v.points = n.count("points", v.points);
    v.grid_resolution = n.count("grid_resolution", v.grid_resolution);
    v.conservation_steps = n.count("conservation_steps", v.conservation_steps);
    v.martingale_steps = n.count("martingale_steps", v.martingale_steps);
    v.born_trials = n.count("born_trials", v.born_trials);
    return v;
}

NoSignalingConfig read_nosignaling(const json& j, const Scenario& base) {
    const Node n(j, "/nosignaling");
    n.allow({"local_detectors", "local_outcomes", "variants"});
    NoSignalingConfig c;
    const json& ld = Node::array(n.required("local_detectors"), n.at("local_detectors"));
    for (std::size_t d = 0; d < ld.size(); ++d) {
        if (!ld[d].is_boolean())
            throw ConfigError(n.at("local_detectors") + "/" + std::to_string(d), "expected true or false");
        c.split.local_detector.push_back(ld[d].get<bool>());
    }
    const json& lo = Node::array(n.required("local_outcomes"), n.at("local_outcomes"));
    for (std::size_t k = 0; k < lo.size(); ++k)
        c.split.local_outcome.push_back(Node::as_count(lo[k], n.at("local_outcomes") + "/" + std::to_string(k)));
    const json& vars = Node::array(n.required("variants"), n.at("variants"));
    for (std::size_t i = 0; i < vars.size(); ++i) {
        const std::string vp = n.at("variants") + "/" + std::to_string(i);
        const Node v(vars[i], vp);
        v.allow({"amplitudes", "detectors"});
        Scenario s = base;
        if (v.has("amplitudes")) s.amplitudes = read_amplitudes(v.raw("amplitudes"), v.at("amplitudes"));
        if (v.has("detectors")) {
            // {"<index>": {partial detector}, ...} applied over the base detectors
            const Node patch(v.raw("detectors"), v.at("detectors"));  // must be an object
            (void)patch;
            for (auto it = v.raw("detectors").begin(); it != v.raw("detectors").end(); ++it) {
                const std::string where = v.at("detectors") + "/" + it.key();
                std::size_t idx = 0;
                try {
                    std::size_t used = 0;
                    idx = std::stoul(it.key(), &used);
                    if (used != it.key().size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw ConfigError(where, "detector index must be an integer");
                }
                if (idx >= s.detectors.size()) throw ConfigError(where, "no such detector");
                s.detectors[idx] = read_detector(it.value(), where, s.detectors[idx]);
            }
        }
        c.variants.push_back(std::move(s));
    }
    return c;
}

std::string line_col(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

void Config::validate() const {
    scenario.validate();
    if (experiment.trials < 1) throw ConfigError("/experiment/trials", "must be at least 1");
    if (experiment.output_dir.empty()) throw ConfigError("/experiment/output_dir", "must not be empty");

    const std::vector<double> w0 = ruin_start();
    if (w0.size() < 2) throw ConfigError("/ruin/w0", "need at least 2 players");
    double total = 0.0;
    for (std::size_t i = 0; i < w0.size(); ++i) {
        if (!(w0[i] >= 0.0)) throw ConfigError("/ruin/w0/" + std::to_string(i), "must be >= 0");
        total += w0[i];
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("/ruin/w0", "stakes must sum to 1");
    try {
        ruin.distribution.validate();
    } catch (const ConfigError& e) {
        throw ConfigError("/ruin/" + std::string(e.field() == "scale" ? "delta" : e.field()), e.message());
    }
    try {
        ruin.rules.validate(w0.size());
    } catch (const ConfigError& e) {
        throw ConfigError("/ruin/" + e.field(), e.message());
    }
    if (ruin.max_steps < 1) throw ConfigError("/ruin/max_steps", "must be at least 1");

    if (verify.points < 1) throw ConfigError("/verify/points", "must be at least 1");
    if (verify.grid_resolution < w0.size() + 2)
        throw ConfigError("/verify/grid_resolution", "too coarse for an interior grid");
    if (verify.grid_resolution > 400) throw ConfigError("/verify/grid_resolution", "must be at most 400");
    if (verify.conservation_steps < 1) throw ConfigError("/verify/conservation_steps", "must be at least 1");
    if (verify.martingale_steps < 2) throw ConfigError("/verify/martingale_steps", "must be at least 2");
    if (verify.born_trials < 100) throw ConfigError("/verify/born_trials", "must be at least 100");

    if (nosignaling) {
        if (nosignaling->variants.empty()) throw ConfigError("/nosignaling/variants", "need at least one variant");
        for (std::size_t i = 0; i < nosignaling->variants.size(); ++i) {
            try {
                nosignaling->variants[i].validate();
            } catch (const ConfigError& e) {
                std::string f = e.field();
                if (f.rfind("/scenario", 0) == 0) f = "/nosignaling/variants/" + std::to_string(i) + f.substr(9);
                throw ConfigError(f, e.message());
            }
        }
        try {
            check_remote_variants(scenario, nosignaling->variants, nosignaling->split);
        } catch (const InvalidComparisonError& e) {
            throw ConfigError("/nosignaling", e.what());
        }
    }
}

std::vector<double> Config::ruin_start() const { return ruin.w0.empty() ? scenario.born_weights() : ruin.w0; }

Config parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // nlohmann reports the byte offset; the message already names the token
        std::string what = e.what();
        const auto colon = what.find(": ");
        if (colon != std::string::npos) what = what.substr(colon + 2);
        throw ConfigError("", line_col(text, e.byte) + ": " + what);
    }
    const Node root(doc, "");
    root.allow({"scenario", "experiment", "ruin", "verify", "nosignaling"});
    Config c;
    c.scenario = read_scenario(root.required("scenario"));
    if (root.has("experiment")) c.experiment = read_experiment(root.raw("experiment"));
    if (root.has("ruin")) c.ruin = read_ruin(root.raw("ruin"));
    if (root.has("verify")) c.verify = read_verify(root.raw("verify"));
    if (root.has("nosignaling")) c.nosignaling = read_nosignaling(root.raw("nosignaling"), c.scenario);
    c.validate();
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(e.field(), path + ": " + e.message());
    }
}

namespace {

enum class Kind { number, nullable_number, integer, boolean, string, array, object };

struct Field {
    const char* key;
    Kind kind;
};

bool matches(const json& v, Kind k) {
    switch (k) {
        case Kind::number: return v.is_number();
        case Kind::nullable_number: return v.is_number() || v.is_null();
        case Kind::integer: return v.is_number_unsigned();
        case Kind::boolean: return v.is_boolean();
        case Kind::string: return v.is_string();
        case Kind::array: return v.is_array();
        case Kind::object: return v.is_object();
    }
    return false;
}

void check_fields(const json& obj, const std::string& path, std::initializer_list<Field> fields,
                  std::vector<std::string>& problems) {
    if (!obj.is_object()) {
        problems.push_back(path + ": expected an object");
        return;
    }
    for (const Field& f : fields) {
        if (!obj.contains(f.key)) {
            problems.push_back(path + "/" + f.key + ": missing");
        } else if (!matches(obj.at(f.key), f.kind)) {
            problems.push_back(path + "/" + f.key + ": wrong type");
        }
    }
}

void check_numbers(const json& obj, const char* key, std::size_t size, std::vector<std::string>& problems) {
    if (!obj.contains(key) || !obj.at(key).is_array()) return;
    const json& a = obj.at(key);
    if (size != 0 && a.size() != size) problems.push_back(std::string("/") + key + ": expected " + std::to_string(size) + " entries");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) problems.push_back(std::string("/") + key + "/" + std::to_string(i) + ": expected a number");
    }
}

void check_born(const json& doc, std::vector<std::string>& problems) {
    if (!doc.contains("born_test")) return;
    check_fields(doc.at("born_test"), "/born_test",
                 {{"tested", Kind::boolean},
                  {"chi_square", Kind::nullable_number},
                  {"degrees_of_freedom", Kind::integer},
                  {"p_value", Kind::nullable_number},
                  {"passed", Kind::boolean}},
                 problems);
}

}  // namespace

std::vector<std::string> validate_report(std::string_view json_text) {
    std::vector<std::string> problems;
    json doc;
    try {
        doc = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        problems.push_back(std::string("not valid JSON: ") + e.what());
        return problems;
    }
    if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string()) {
        problems.push_back("/kind: missing");
        return problems;
    }
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "simulate") {
        check_fields(doc, "",
                     {{"scenario_digest", Kind::string},
                      {"trials", Kind::integer},
                      {"master_seed", Kind::integer},
                      {"counts", Kind::array},
                      {"undecided", Kind::integer},
                      {"undecided_fraction", Kind::number},
                      {"frequencies", Kind::array},
                      {"expected", Kind::array},
                      {"born_test", Kind::object},
                      {"drift_stats", Kind::array},
                      {"mean_final_weights", Kind::array},
                      {"mean_collapse_time", Kind::nullable_number},
                      {"warnings", Kind::array}},
                     problems);
        if (!problems.empty()) return problems;
        const std::size_t k = doc.at("counts").size();
        check_numbers(doc, "frequencies", k, problems);
        check_numbers(doc, "expected", k, problems);
        check_numbers(doc, "mean_final_weights", k, problems);
        std::uint64_t total = doc.at("undecided").get<std::uint64_t>();
        for (const json& c : doc.at("counts")) {
            if (!c.is_number_unsigned()) {
                problems.push_back("/counts: expected non-negative integers");
                return problems;
            }
            total += c.get<std::uint64_t>();
        }
        if (total != doc.at("trials").get<std::uint64_t>()) problems.push_back("/counts: counts + undecided != trials");
        check_born(doc, problems);
        const json& drift = doc.at("drift_stats");
        for (std::size_t i = 0; i < drift.size(); ++i) {
            check_fields(drift[i], "/drift_stats/" + std::to_string(i),
                         {{"pair", Kind::array}, {"mean", Kind::number}, {"se", Kind::number}}, problems);
        }
        if (doc.contains("nosignaling")) {
            check_fields(doc.at("nosignaling"), "/nosignaling",
                         {{"marginals", Kind::array},
                          {"expected_marginal", Kind::array},
                          {"decided", Kind::array},
                          {"max_deviation", Kind::number},
                          {"pooled_sigma", Kind::number},
                          {"passed", Kind::boolean}},
                         problems);
        }
    } else if (kind == "ruin") {
        check_fields(doc, "",
                     {{"trials", Kind::integer},
                      {"master_seed", Kind::integer},
                      {"w0", Kind::array},
                      {"distribution", Kind::object},
                      {"sign_bias", Kind::number},
                      {"counts", Kind::array},
                      {"frequencies", Kind::array},
                      {"standard_errors", Kind::array},
                      {"undecided", Kind::integer},
                      {"mean_steps", Kind::number},
                      {"born_test", Kind::object}},
                     problems);
        if (!problems.empty()) return problems;
        const std::size_t k = doc.at("w0").size();
        check_numbers(doc, "w0", 0, problems);
        check_numbers(doc, "frequencies", k, problems);
        check_numbers(doc, "standard_errors", k, problems);
        if (doc.at("counts").size() != k) problems.push_back("/counts: expected " + std::to_string(k) + " entries");
        check_born(doc, problems);
        check_fields(doc.at("distribution"), "/distribution", {{"kind", Kind::string}, {"delta", Kind::number}},
                     problems);
        if (doc.contains("oracle") && !doc.at("oracle").is_null()) {
            const json& o = doc.at("oracle");
            if (!o.is_array()) {
                problems.push_back("/oracle: expected an array or null");
            } else {
                for (std::size_t i = 0; i < o.size(); ++i) {
                    check_fields(o[i], "/oracle/" + std::to_string(i),
                                 {{"player", Kind::integer},
                                  {"oracle", Kind::number},
                                  {"monte_carlo", Kind::number},
                                  {"standard_error", Kind::number},
                                  {"deviation", Kind::number},
                                  {"within_3_sigma", Kind::boolean}},
                                 problems);
                }
            }
        }
    } else if (kind == "simulate-full") {
        check_fields(doc, "",
                     {{"scenario_digest", Kind::string},
                      {"master_seed", Kind::integer},
                      {"steps", Kind::integer},
                      {"max_deviation", Kind::number},
                      {"final_weights", Kind::array},
                      {"final_weights_full", Kind::array}},
                     problems);
    } else if (kind == "verify") {
        check_fields(doc, "", {{"passed", Kind::boolean}, {"checks", Kind::array}}, problems);
        if (!problems.empty()) return problems;
        const json& checks = doc.at("checks");
        bool all = true;
        for (std::size_t i = 0; i < checks.size(); ++i) {
            check_fields(checks[i], "/checks/" + std::to_string(i),
                         {{"name", Kind::string},
                          {"value", Kind::nullable_number},
                          {"tolerance", Kind::number},
                          {"passed", Kind::boolean},
                          {"detail", Kind::string}},
                         problems);
            if (checks[i].is_object() && checks[i].contains("passed") && checks[i].at("passed").is_boolean())
                all = all && checks[i].at("passed").get<bool>();
        }
        if (problems.empty() && all != doc.at("passed").get<bool>())
            problems.push_back("/passed: disagrees with the individual checks");
    } else {
        problems.push_back("/kind: unknown report kind \"" + kind + "\"");
    }
    return problems;
}

}  // namespace collapse
