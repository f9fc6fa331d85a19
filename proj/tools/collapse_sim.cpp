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

// collapse-sim command line. Talks to the library only through collapse.h.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "collapse/collapse.h"

namespace {

// 0 pass, 1 verification failure, 2 usage/config error, 3 blowup.
int exit_code(collapse_status s) {
    switch (s) {
        case COLLAPSE_OK:
            return 0;
        case COLLAPSE_VERIFY_FAILED:
            return 1;
        case COLLAPSE_CONFIG_ERROR:
        case COLLAPSE_INVALID_ARGUMENT:
            return 2;
        case COLLAPSE_BLOWUP:
            return 3;
        default:
            return 1;
    }
}

int report_error(collapse_status s) {
    std::fprintf(stderr, "collapse-sim: %s\n", collapse_last_error());
    return exit_code(s);
}

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::uint64_t> thin;
};

// Reads COLLAPSE_SIM_THREADS; unset or empty means machine parallelism.
collapse_status env_threads(unsigned& threads) {
    threads = 0;
    const char* v = std::getenv("COLLAPSE_SIM_THREADS");
    if (!v || !*v) return COLLAPSE_OK;
    char* end = nullptr;
    const unsigned long n = std::strtoul(v, &end, 10);
    if (*end != '\0' || v[0] == '-' || n == 0 || n > 4096) return COLLAPSE_INVALID_ARGUMENT;
    threads = static_cast<unsigned>(n);
    return COLLAPSE_OK;
}

collapse_status apply(collapse_config* cfg, const Overrides& o) {
    collapse_status s = COLLAPSE_OK;
    if (o.trials && (s = collapse_config_set_trials(cfg, *o.trials)) != COLLAPSE_OK) return s;
    if (o.seed && (s = collapse_config_set_seed(cfg, *o.seed)) != COLLAPSE_OK) return s;
    if (o.out && (s = collapse_config_set_output_dir(cfg, o.out->c_str())) != COLLAPSE_OK) return s;
    if (o.thin && (s = collapse_config_set_thin(cfg, *o.thin)) != COLLAPSE_OK) return s;
    unsigned threads = 0;
    if (env_threads(threads) != COLLAPSE_OK) {
        std::fprintf(stderr, "collapse-sim: COLLAPSE_SIM_THREADS must be a positive integer\n");
        return COLLAPSE_INVALID_ARGUMENT;
    }
    return collapse_config_set_threads(cfg, threads);
}

using Runner = collapse_status (*)(const collapse_config*, collapse_report**);

int run_command(const Overrides& o, Runner runner) {
    collapse_config* cfg = nullptr;
    collapse_status s = collapse_config_load(o.config_path.c_str(), &cfg);
    if (s != COLLAPSE_OK) return report_error(s);
    s = apply(cfg, o);
    if (s != COLLAPSE_OK) {
        const int code = report_error(s);
        collapse_config_free(cfg);
        return code;
    }
    collapse_report* rep = nullptr;
    s = runner(cfg, &rep);
    if (rep) {
        std::fputs(collapse_report_summary(rep), stdout);
        std::printf("report written to %s/report.json\n", collapse_config_output_dir(cfg));
    }
    const int code = rep ? exit_code(s) : report_error(s);
    std::fflush(stdout);
    if (rep && s != COLLAPSE_OK) std::fprintf(stderr, "collapse-sim: %s\n", collapse_last_error());
    collapse_report_free(rep);
    collapse_config_free(cfg);
    return code;
}

void add_run_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--trials", o.trials, "number of trials");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--thin", o.thin, "write a trajectory row every S steps (0 disables)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"collapse-sim: detector-driven collapse simulations"};
    app.set_version_flag("--version", std::string(collapse_version()));
    app.require_subcommand(1);

    Overrides o;
    struct Entry {
        const char* name;
        const char* help;
        Runner runner;
    };
    const Entry entries[] = {
        {"simulate", "ensemble of trials with the factored dynamics", &collapse_run_simulate},
        {"simulate-full", "one trial integrated in factored and full form", &collapse_run_simulate_full},
        {"ruin", "exit probabilities of the weight game", &collapse_run_ruin},
        {"verify", "invariant and oracle battery; exit 0 iff all checks pass", &collapse_run_verify},
    };
    int code = 0;
    for (const Entry& e : entries) {
        CLI::App* cmd = app.add_subcommand(e.name, e.help);
        add_run_flags(cmd, o);
        cmd->callback([&o, &code, runner = e.runner] { code = run_command(o, runner); });
    }

    double charge = 0.0, voltage = 0.0, duration = 0.0;
    CLI::App* zeta = app.add_subcommand("estimate-zeta", "order-of-magnitude nonlinearity estimate");
    zeta->add_option("Q", charge, "charge carriers per pulse")->required();
    zeta->add_option("U", voltage, "bias voltage in volts")->required();
    zeta->add_option("t", duration, "duration in seconds")->required();
    zeta->callback([&] {
        double action = 0.0, z = 0.0;
        const collapse_status s = collapse_estimate_zeta(charge, voltage, duration, &action, &z);
        if (s != COLLAPSE_OK) {
            code = report_error(s);
            return;
        }
        std::printf("action = %.6g (units of hbar)\n", action);
        std::printf("zeta   = %.6g 1/s\n", z);
        std::printf("note: zeta = 1/(action * t) is a reconstruction; only the order of magnitude is meaningful\n");
        code = 0;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return code;
}
