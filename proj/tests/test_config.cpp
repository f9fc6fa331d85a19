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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "collapse/collapse.h"
#include "collapse/config.hpp"
#include "collapse/verify.hpp"

using namespace collapse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_json() {
    json d = {{"levels", 4}, {"alpha_active", 2.0}, {"alpha_quiet", 1.0}};
    return {{"scenario",
             {{"amplitudes", {std::sqrt(0.5), std::sqrt(0.5)}},
              {"detectors", {d, d}},
              {"activation", {{true, false}, {false, true}}},
              {"t_max", 0.5}}},
            {"experiment", {{"trials", 4}, {"master_seed", 3}}},
            {"ruin", {{"distribution", "fixed"}, {"delta", 0.05}}},
            {"verify",
             {{"points", 20},
              {"grid_resolution", 10},
              {"conservation_steps", 200},
              {"martingale_steps", 100000},
              {"born_trials", 20000}}}};
}

std::string field_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

std::string message_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "<accepted>";
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("collapse_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const CheckResult& find_check(const VerifyReport& r, const std::string& name) {
    for (const CheckResult& c : r.checks)
        if (c.name == name) return c;
    FAIL("missing check " << name);
    return r.checks.front();
}

}  // namespace

TEST_CASE("config: a complete document parses") {
    json j = base_json();
    j["scenario"]["amplitudes"][1] = {0.0, std::sqrt(0.5)};
    const Config c = parse_config(j.dump());
    CHECK(c.scenario.n_outcomes() == 2);
    CHECK(c.scenario.amplitudes[1].imag() == doctest::Approx(std::sqrt(0.5)));
    CHECK(c.scenario.detectors[0].basis.n_levels() == 4);
    CHECK(c.scenario.detectors[0].alpha_quiet == cplx(1.0, 0.0));
    CHECK(c.experiment.trials == 4);
    CHECK(c.experiment.master_seed == 3);
    CHECK(c.ruin.distribution.kind == StepKind::fixed);
    CHECK_FALSE(c.nosignaling.has_value());
    const std::vector<double> w = c.ruin_start();
    CHECK(w[0] == doctest::Approx(0.5));
}

TEST_CASE("config: unknown keys are rejected with their path") {
    json j = base_json();
    j["scenario"]["detectors"][1]["colour"] = "red";
    CHECK(field_of(j.dump()) == "/scenario/detectors/1/colour");
    j = base_json();
    j["extra"] = 1;
    CHECK(field_of(j.dump()) == "/extra");
}

TEST_CASE("config: syntax errors carry line and column") {
    const std::string text = "{\n  \"scenario\": {\n    \"zeta\": ,\n  }\n}\n";
    const std::string msg = message_of(text);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
}

TEST_CASE("config: field validation") {
    json j = base_json();
    j["experiment"]["trials"] = 0;
    CHECK(field_of(j.dump()) == "/experiment/trials");

    j = base_json();
    j["experiment"]["trials"] = -5;
    CHECK(field_of(j.dump()) == "/experiment/trials");

    j = base_json();
    j["ruin"]["distribution"] = "gaussian";
    CHECK(field_of(j.dump()) == "/ruin/distribution");

    j = base_json();
    j["scenario"]["zeta"] = "fast";
    CHECK(field_of(j.dump()) == "/scenario/zeta");

    j = base_json();
    j["scenario"]["activation"][1][0] = 1;
    CHECK(field_of(j.dump()) == "/scenario/activation/1/0");

    j = base_json();
    j["scenario"]["detectors"][0]["levels"] = 1;
    CHECK(field_of(j.dump()) == "/scenario/detectors/0/levels");

    j = base_json();
    j["ruin"]["w0"] = {0.5, 0.6};
    CHECK(field_of(j.dump()) == "/ruin/w0");

    j = base_json();
    j["scenario"].erase("amplitudes");
    CHECK(field_of(j.dump()) == "/scenario/amplitudes");
}

TEST_CASE("config: remote variants must leave the local site alone") {
    json j = base_json();
    j["nosignaling"] = {{"local_detectors", {true, false}},
                        {"local_outcomes", {0, 1}},
                        {"variants", {{{"detectors", {{"1", {{"alpha_active", 3.0}}}}}}}}};
    const Config ok = parse_config(j.dump());
    REQUIRE(ok.nosignaling.has_value());
    CHECK(ok.nosignaling->variants.size() == 1);
    CHECK(ok.nosignaling->variants[0].detectors[1].alpha_active == cplx(3.0, 0.0));
    CHECK(ok.nosignaling->variants[0].detectors[0].alpha_active == cplx(2.0, 0.0));

    j["nosignaling"]["variants"][0]["detectors"] = {{"0", {{"alpha_active", 3.0}}}};
    CHECK(field_of(j.dump()) == "/nosignaling");
}

TEST_CASE("config: the shipped configs load") {
    for (const char* name : {"sg_50_50", "sg_70_30", "chsh_default", "epr_default", "oracle_small"}) {
        const Config c = load_config(std::string(COLLAPSE_CONFIG_DIR) + "/" + name + ".json");
        CHECK(c.experiment.trials >= 1);
    }
    const Config sg = load_config(std::string(COLLAPSE_CONFIG_DIR) + "/sg_70_30.json");
    CHECK(sg.ruin_start()[0] == doctest::Approx(0.7));
    const Config chsh = load_config(std::string(COLLAPSE_CONFIG_DIR) + "/chsh_default.json");
    CHECK(chsh.nosignaling.has_value());
}

TEST_CASE("verify: a small default battery passes") {
    const VerifyReport r = run_verify(parse_config(base_json().dump()));
    for (const CheckResult& c : r.checks) CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);
    CHECK(r.passed);
    CHECK(r.checks.size() == 15);
}

TEST_CASE("verify: sign bias breaks the fairness checks") {
    json j = base_json();
    j["ruin"]["sign_bias"] = 0.6;
    const VerifyReport r = run_verify(parse_config(j.dump()));
    CHECK_FALSE(r.passed);
    CHECK_FALSE(find_check(r, "ruin_born").passed);
    CHECK_FALSE(find_check(r, "martingale").passed);
    CHECK(find_check(r, "boundary_values").passed);
}

TEST_CASE("verify: a coarse step breaks conservation") {
    json j = base_json();
    j["scenario"]["dt"] = 0.5;
    j["scenario"]["t_max"] = 100.0;
    const VerifyReport r = run_verify(parse_config(j.dump()));
    CHECK_FALSE(r.passed);
    const bool broken = !find_check(r, "factored_weight_sum").passed || !find_check(r, "full_purity").passed;
    CHECK(broken);
    CHECK(find_check(r, "diffusion_residual").passed);
}

TEST_CASE("c api: config handling and overrides") {
    collapse_config* cfg = nullptr;
    REQUIRE(collapse_config_parse(base_json().dump().c_str(), &cfg) == COLLAPSE_OK);
    CHECK(collapse_config_set_trials(cfg, 0) == COLLAPSE_CONFIG_ERROR);
    CHECK(std::string(collapse_last_error_field()) == "/experiment/trials");
    CHECK(collapse_config_set_output_dir(cfg, "") == COLLAPSE_CONFIG_ERROR);
    CHECK(collapse_config_set_output_dir(cfg, "elsewhere") == COLLAPSE_OK);
    CHECK(std::string(collapse_config_output_dir(cfg)) == "elsewhere");
    collapse_config_free(cfg);

    collapse_config* bad = nullptr;
    CHECK(collapse_config_parse("{\"scenario\": 3}", &bad) == COLLAPSE_CONFIG_ERROR);
    CHECK(bad == nullptr);
    CHECK(collapse_config_load("/nonexistent/config.json", &bad) == COLLAPSE_CONFIG_ERROR);
    CHECK(collapse_config_parse(nullptr, &bad) == COLLAPSE_INVALID_ARGUMENT);
}

TEST_CASE("c api: simulate writes a report that re-validates") {
    const fs::path dir = scratch_dir("simulate");
    collapse_config* cfg = nullptr;
    REQUIRE(collapse_config_parse(base_json().dump().c_str(), &cfg) == COLLAPSE_OK);
    REQUIRE(collapse_config_set_output_dir(cfg, dir.string().c_str()) == COLLAPSE_OK);
    REQUIRE(collapse_config_set_thin(cfg, 10) == COLLAPSE_OK);
    collapse_report* rep = nullptr;
    REQUIRE(collapse_run_simulate(cfg, &rep) == COLLAPSE_OK);
    const std::string text = collapse_report_json(rep);
    CHECK(text == slurp(dir / "report.json"));
    CHECK(collapse_validate_report(text.c_str()) == COLLAPSE_OK);
    const json j = json::parse(text);
    CHECK(j["kind"] == "simulate");
    CHECK(j["trials"] == 4);
    CHECK(fs::exists(dir / "timing.json"));
    CHECK(fs::exists(dir / "trajectories" / "trial_00003.csv"));
    const std::string csv = slurp(dir / "trajectories" / "trial_00000.csv");
    CHECK(csv.rfind("t,w_1,w_2,purity_1,purity_2\n", 0) == 0);
    collapse_report_free(rep);

    // same seed, same bytes
    const std::string first = slurp(dir / "report.json");
    REQUIRE(collapse_run_simulate(cfg, &rep) == COLLAPSE_OK);
    CHECK(slurp(dir / "report.json") == first);
    collapse_report_free(rep);
    collapse_config_free(cfg);
    fs::remove_all(dir);
}

TEST_CASE("c api: ruin report with the oracle table") {
    const fs::path dir = scratch_dir("ruin");
    json j = base_json();
    j["experiment"]["trials"] = 20000;
    j["experiment"]["output_dir"] = dir.string();
    collapse_config* cfg = nullptr;
    REQUIRE(collapse_config_parse(j.dump().c_str(), &cfg) == COLLAPSE_OK);
    collapse_report* rep = nullptr;
    REQUIRE(collapse_run_ruin(cfg, &rep) == COLLAPSE_OK);
    CHECK(collapse_report_passed(rep) == 1);
    const json r = json::parse(collapse_report_json(rep));
    REQUIRE(r.contains("oracle"));
    CHECK(r["oracle"].size() == 2);
    for (const json& row : r["oracle"]) CHECK(row["within_3_sigma"] == true);
    CHECK(collapse_validate_report(collapse_report_json(rep)) == COLLAPSE_OK);
    collapse_report_free(rep);
    collapse_config_free(cfg);

    // three players: frequencies only
    j["scenario"]["amplitudes"] = {std::sqrt(0.2), std::sqrt(0.3), std::sqrt(0.5)};
    j["scenario"]["detectors"].push_back(j["scenario"]["detectors"][0]);
    j["scenario"]["activation"] = {{true, false, false}, {false, true, false}, {false, false, true}};
    REQUIRE(collapse_config_parse(j.dump().c_str(), &cfg) == COLLAPSE_OK);
    REQUIRE(collapse_run_ruin(cfg, &rep) == COLLAPSE_OK);
    CHECK(json::parse(collapse_report_json(rep))["oracle"].is_null());
    collapse_report_free(rep);
    collapse_config_free(cfg);
    fs::remove_all(dir);
}

TEST_CASE("c api: report validation catches tampering") {
    const fs::path dir = scratch_dir("tamper");
    json j = base_json();
    j["experiment"]["output_dir"] = dir.string();
    collapse_config* cfg = nullptr;
    REQUIRE(collapse_config_parse(j.dump().c_str(), &cfg) == COLLAPSE_OK);
    collapse_report* rep = nullptr;
    REQUIRE(collapse_run_simulate(cfg, &rep) == COLLAPSE_OK);
    json r = json::parse(collapse_report_json(rep));
    r["undecided"] = 99;
    CHECK(collapse_validate_report(r.dump().c_str()) == COLLAPSE_VERIFY_FAILED);
    CHECK(std::string(collapse_last_error()).find("undecided") != std::string::npos);
    CHECK(collapse_validate_report("{\"kind\": \"nonsense\"}") == COLLAPSE_VERIFY_FAILED);
    CHECK(collapse_validate_report("not json") != COLLAPSE_OK);
    collapse_report_free(rep);
    collapse_config_free(cfg);
    fs::remove_all(dir);
}

TEST_CASE("c api: direct estimates") {
    double action = 0.0, zeta = 0.0;
    REQUIRE(collapse_estimate_zeta(2e7, 3000.0, 1e-8, &action, &zeta) == COLLAPSE_OK);
    // Q e U t / hbar
    CHECK(action == doctest::Approx(2e7 * 1.602176634e-19 * 3000.0 * 1e-8 / 1.054571817e-34).epsilon(1e-9));
    CHECK(zeta == doctest::Approx(1.0 / (action * 1e-8)));
    CHECK(collapse_estimate_zeta(2e7, -3000.0, 1e-8, &action, &zeta) == COLLAPSE_CONFIG_ERROR);

    double p = 0.0;
    REQUIRE(collapse_exit_probability_oracle(0.3, 0.05, 0.5, &p) == COLLAPSE_OK);
    CHECK(p == doctest::Approx(0.3));
    // biased walk: classical ruin formula with r = q/p
    REQUIRE(collapse_exit_probability_oracle(0.3, 0.1, 0.6, &p) == COLLAPSE_OK);
    const double r = 0.4 / 0.6;
    CHECK(p == doctest::Approx((1.0 - std::pow(r, 3)) / (1.0 - std::pow(r, 10))));
}
