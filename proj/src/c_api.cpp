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

#include "collapse/collapse.h"

#include <exception>
#include <new>
#include <string>

#include "collapse/config.hpp"
#include "commands.hpp"

struct collapse_config {
    collapse::Config cfg;
};

struct collapse_report {
    std::string json;
    std::string summary;
    bool passed = true;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

collapse_status fail(collapse_status s, const std::string& message, const std::string& field = {}) {
    g_error = message;
    g_field = field;
    return s;
}

collapse_status ok() {
    g_error.clear();
    g_field.clear();
    return COLLAPSE_OK;
}

// Maps library exceptions to status codes.
template <class F>
collapse_status guarded(F&& body) {
    try {
        return body();
    } catch (const collapse::ConfigError& e) {
        return fail(COLLAPSE_CONFIG_ERROR, e.what(), e.field());
    } catch (const collapse::InvalidComparisonError& e) {
        return fail(COLLAPSE_CONFIG_ERROR, e.what());
    } catch (const collapse::BlowupError& e) {
        return fail(COLLAPSE_BLOWUP, e.what());
    } catch (const collapse::StructuralError& e) {
        return fail(COLLAPSE_INVALID_ARGUMENT, e.what());
    } catch (const collapse::SizeError& e) {
        return fail(COLLAPSE_INVALID_ARGUMENT, e.what());
    } catch (const collapse::GameOverError& e) {
        return fail(COLLAPSE_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(COLLAPSE_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(COLLAPSE_INTERNAL, e.what());
    } catch (...) {
        return fail(COLLAPSE_INTERNAL, "unknown failure");
    }
}

// Applies a change, keeping the previous config if validation rejects it.
template <class F>
collapse_status update(collapse_config* c, F&& change) {
    if (!c) return fail(COLLAPSE_INVALID_ARGUMENT, "null config");
    return guarded([&] {
        collapse::Config next = c->cfg;
        change(next);
        next.validate();
        c->cfg = std::move(next);
        return ok();
    });
}

using Command = collapse::detail::CommandOutput (*)(const collapse::Config&);

collapse_status run(const collapse_config* c, collapse_report** out, Command command) {
    if (!c || !out) return fail(COLLAPSE_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        collapse::detail::CommandOutput r = command(c->cfg);
        auto* rep = new collapse_report{std::move(r.report), std::move(r.summary), r.passed};
        *out = rep;
        if (!rep->passed) return fail(COLLAPSE_VERIFY_FAILED, "one or more checks failed");
        return ok();
    });
}

collapse_status take_config(collapse::Config cfg, collapse_config** out) {
    *out = new collapse_config{std::move(cfg)};
    return ok();
}

}  // namespace

extern "C" {

const char* collapse_last_error(void) { return g_error.c_str(); }
const char* collapse_last_error_field(void) { return g_field.c_str(); }
const char* collapse_version(void) { return "1.0.0"; }

collapse_status collapse_config_load(const char* path, collapse_config** out) {
    if (!path || !out) return fail(COLLAPSE_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] { return take_config(collapse::load_config(path), out); });
}

collapse_status collapse_config_parse(const char* json_text, collapse_config** out) {
    if (!json_text || !out) return fail(COLLAPSE_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] { return take_config(collapse::parse_config(json_text), out); });
}

void collapse_config_free(collapse_config* config) { delete config; }

collapse_status collapse_config_set_trials(collapse_config* config, uint64_t trials) {
    return update(config, [&](collapse::Config& c) { c.experiment.trials = trials; });
}

collapse_status collapse_config_set_seed(collapse_config* config, uint64_t seed) {
    return update(config, [&](collapse::Config& c) { c.experiment.master_seed = seed; });
}

collapse_status collapse_config_set_output_dir(collapse_config* config, const char* dir) {
    if (!dir) return fail(COLLAPSE_INVALID_ARGUMENT, "null directory");
    return update(config, [&](collapse::Config& c) { c.experiment.output_dir = dir; });
}

collapse_status collapse_config_set_thin(collapse_config* config, uint64_t thin) {
    return update(config, [&](collapse::Config& c) { c.experiment.thin = thin; });
}

collapse_status collapse_config_set_threads(collapse_config* config, unsigned threads) {
    return update(config, [&](collapse::Config& c) { c.experiment.threads = threads; });
}

const char* collapse_config_output_dir(const collapse_config* config) {
    return config ? config->cfg.experiment.output_dir.c_str() : "";
}

collapse_status collapse_run_simulate(const collapse_config* config, collapse_report** out) {
    return run(config, out, &collapse::detail::command_simulate);
}

collapse_status collapse_run_simulate_full(const collapse_config* config, collapse_report** out) {
    return run(config, out, &collapse::detail::command_simulate_full);
}

collapse_status collapse_run_ruin(const collapse_config* config, collapse_report** out) {
    return run(config, out, &collapse::detail::command_ruin);
}

collapse_status collapse_run_verify(const collapse_config* config, collapse_report** out) {
    return run(config, out, &collapse::detail::command_verify);
}

const char* collapse_report_json(const collapse_report* report) { return report ? report->json.c_str() : ""; }
const char* collapse_report_summary(const collapse_report* report) { return report ? report->summary.c_str() : ""; }
int collapse_report_passed(const collapse_report* report) { return report && report->passed ? 1 : 0; }
void collapse_report_free(collapse_report* report) { delete report; }

collapse_status collapse_validate_report(const char* json_text) {
    if (!json_text) return fail(COLLAPSE_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const std::vector<std::string> problems = collapse::validate_report(json_text);
        if (problems.empty()) return ok();
        std::string msg;
        for (const std::string& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        return fail(COLLAPSE_VERIFY_FAILED, msg);
    });
}

collapse_status collapse_estimate_zeta(double charge_carriers, double bias_voltage, double duration, double* action,
                                       double* zeta) {
    if (!action || !zeta) return fail(COLLAPSE_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const collapse::ZetaEstimate z = collapse::estimate_zeta(charge_carriers, bias_voltage, duration);
        *action = z.action;
        *zeta = z.zeta;
        return ok();
    });
}

collapse_status collapse_exit_probability_oracle(double w0, double delta, double sign_bias, double* probability) {
    if (!probability) return fail(COLLAPSE_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        collapse::GameRules rules;
        rules.sign_bias = sign_bias;
        *probability = collapse::exit_probability_oracle(w0, delta, rules);
        return ok();
    });
}

}  // extern "C"
