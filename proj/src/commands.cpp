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

#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "collapse/verify.hpp"
#include "json.hpp"

namespace collapse::detail {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson nums(const std::vector<double>& v) {
    ojson a = ojson::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::string g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string list(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + short_num(v[i]);
    return s + ")";
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

void write_outputs(const Config& cfg, const ojson& report, double wall_time) {
    const fs::path dir(cfg.experiment.output_dir);
    fs::create_directories(dir);
    write_file(dir / "report.json", report.dump(2) + "\n");
    ojson timing;
    timing["kind"] = report["kind"];
    timing["wall_time"] = wall_time;
    write_file(dir / "timing.json", timing.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ojson born_json(bool tested, double chi2, std::size_t dof, double p, bool passed) {
    ojson b;
    b["tested"] = tested;
    b["chi_square"] = tested ? num(chi2) : ojson(nullptr);
    b["degrees_of_freedom"] = tested ? dof : 0;
    b["p_value"] = tested ? num(p) : ojson(nullptr);
    b["passed"] = tested && passed;
    return b;
}

ojson run_json(const RunReport& r) {
    ojson j;
    j["kind"] = "simulate";
    j["scenario_digest"] = r.scenario_digest;
    j["trials"] = r.trials;
    j["master_seed"] = r.master_seed;
    j["counts"] = r.counts;
    j["undecided"] = r.undecided;
    j["undecided_fraction"] = num(r.undecided_fraction);
    j["frequencies"] = nums(r.frequencies);
    j["expected"] = nums(r.expected);
    j["born_test"] = born_json(r.born_tested, r.chi_square, r.degrees_of_freedom, r.p_value, r.born_pass);
    ojson drift = ojson::array();
    for (const PairDrift& d : r.drift_stats) {
        ojson e;
        e["pair"] = {d.k, d.m};
        e["mean"] = num(d.mean);
        e["se"] = num(d.se);
        drift.push_back(e);
    }
    j["drift_stats"] = drift;
    j["mean_final_weights"] = nums(r.mean_final_weights);
    j["mean_collapse_time"] = r.undecided == r.trials ? ojson(nullptr) : num(r.mean_collapse_time);
    j["warnings"] = r.warnings;
    return j;
}

std::string trajectory_csv(const Trajectory& t) {
    std::string s = "t";
    for (std::size_t k = 1; k <= t.n_outcomes; ++k) s += ",w_" + std::to_string(k);
    for (std::size_t d = 1; d <= t.n_detectors; ++d) s += ",purity_" + std::to_string(d);
    s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + g(row[i]);
        s += "\n";
    }
    return s;
}

}  // namespace

CommandOutput command_simulate(const Config& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    EnsembleOptions opts;
    opts.threads = cfg.experiment.threads;
    const fs::path dir(cfg.experiment.output_dir);
    if (cfg.experiment.thin > 0 && !cfg.nosignaling) {
        fs::create_directories(dir / "trajectories");
        opts.thin = cfg.experiment.thin;
        opts.trajectory_sink = [dir](std::uint64_t trial, const Trajectory& t) {
            char name[32];
            std::snprintf(name, sizeof name, "trial_%05llu.csv", static_cast<unsigned long long>(trial));
            write_file(dir / "trajectories" / name, trajectory_csv(t));
        };
    }

    ojson report;
    CommandOutput out;
    if (cfg.nosignaling) {
        const NoSignalingReport ns = nosignaling_test(cfg.scenario, cfg.nosignaling->variants, cfg.nosignaling->split,
                                                      cfg.experiment.trials, cfg.experiment.master_seed, opts);
        report = run_json(ns.runs.front());
        report["master_seed"] = cfg.experiment.master_seed;
        ojson n;
        ojson margs = ojson::array();
        for (const auto& m : ns.marginals) margs.push_back(nums(m));
        n["marginals"] = margs;
        n["expected_marginal"] = nums(ns.expected_marginal);
        n["decided"] = ns.decided;
        n["max_deviation"] = num(ns.max_deviation);
        n["pooled_sigma"] = num(ns.pooled_sigma);
        n["passed"] = ns.passed;
        ojson settings = ojson::array();
        for (std::size_t i = 1; i < ns.runs.size(); ++i) settings.push_back(run_json(ns.runs[i]));
        for (ojson& s : settings) s.erase("kind");
        n["remote_settings"] = settings;
        report["nosignaling"] = n;
        out.summary = "local marginals under " + std::to_string(ns.marginals.size()) + " remote settings, max deviation " +
                      short_num(ns.max_deviation) + " (pooled sigma " + short_num(ns.pooled_sigma) + "): " +
                      (ns.passed ? "consistent" : "not established") + "\n";
    } else {
        report = run_json(run_ensemble(cfg.scenario, cfg.experiment.trials, cfg.experiment.master_seed, opts));
    }
    const auto freqs = report["frequencies"].get<std::vector<double>>();
    out.summary = "decided " + std::to_string(cfg.experiment.trials - report["undecided"].get<std::uint64_t>()) + " of " +
                  std::to_string(cfg.experiment.trials) + " trials, frequencies " + list(freqs) + ", Born weights " +
                  list(cfg.scenario.born_weights()) + "\n" + out.summary;
    for (const auto& w : report["warnings"]) out.summary += "warning: " + w.get<std::string>() + "\n";
    out.report = report.dump(2) + "\n";
    write_outputs(cfg, report, seconds_since(t0));
    return out;
}

CommandOutput command_simulate_full(const Config& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const DetectorPhases ph = trial_phases(cfg.scenario.n_detectors(), trial_seed(cfg.experiment.master_seed, 0));
    const std::uint64_t thin = cfg.experiment.thin > 0 ? cfg.experiment.thin : 1;
    const FullComparison fc = compare_full(cfg.scenario, ph, thin);

    const std::size_t k = cfg.scenario.n_outcomes();
    const std::size_t d = cfg.scenario.n_detectors();
    const auto& last = fc.rows.back();
    ojson report;
    report["kind"] = "simulate-full";
    report["scenario_digest"] = scenario_digest(cfg.scenario);
    report["master_seed"] = cfg.experiment.master_seed;
    report["steps"] = static_cast<std::uint64_t>(std::llround(last[0] / cfg.scenario.dt));
    report["max_deviation"] = num(fc.max_deviation);
    report["final_weights"] = nums(std::vector<double>(last.begin() + 1, last.begin() + 1 + static_cast<long>(k)));
    report["final_weights_full"] = nums(std::vector<double>(last.begin() + 1 + static_cast<long>(k + d),
                                                            last.begin() + 1 + static_cast<long>(2 * k + d)));
    report["final_purities"] = nums(std::vector<double>(last.begin() + 1 + static_cast<long>(k),
                                                        last.begin() + 1 + static_cast<long>(k + d)));

    std::string csv;
    for (std::size_t i = 0; i < fc.header.size(); ++i) csv += (i ? "," : "") + fc.header[i];
    csv += "\n";
    for (const auto& row : fc.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) csv += (i ? "," : "") + g(row[i]);
        csv += "\n";
    }
    CommandOutput out;
    out.report = report.dump(2) + "\n";
    out.summary = "factored vs full: max weight deviation " + short_num(fc.max_deviation) + " over " +
                  std::to_string(report["steps"].get<std::uint64_t>()) + " steps\n";
    write_outputs(cfg, report, seconds_since(t0));
    write_file(fs::path(cfg.experiment.output_dir) / "full_comparison.csv", csv);
    return out;
}

CommandOutput command_ruin(const Config& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> w0 = cfg.ruin_start();
    MonteCarloOptions mc;
    mc.max_steps = cfg.ruin.max_steps;
    mc.threads = cfg.experiment.threads;
    const ExitEstimate e = exit_probability_mc(w0, cfg.ruin.distribution, cfg.experiment.trials,
                                               cfg.experiment.master_seed, cfg.ruin.rules, mc);
    CommandOutput out;
    ojson report;
    report["kind"] = "ruin";
    report["trials"] = e.trials;
    report["master_seed"] = cfg.experiment.master_seed;
    report["w0"] = nums(w0);
    ojson dist;
    dist["kind"] = to_string(cfg.ruin.distribution.kind);
    dist["delta"] = cfg.ruin.distribution.scale;
    if (cfg.ruin.distribution.kind == StepKind::dynamics_coupled) dist["absorb_floor"] = cfg.ruin.distribution.absorb_floor;
    report["distribution"] = dist;
    report["sign_bias"] = cfg.ruin.rules.sign_bias;
    report["counts"] = e.counts;
    report["frequencies"] = nums(e.frequencies);
    report["standard_errors"] = nums(e.standard_errors);
    report["undecided"] = e.undecided;
    report["mean_steps"] = num(e.mean_steps);
    report["max_steps_seen"] = e.max_steps_seen;
    const std::uint64_t decided = e.trials - e.undecided;
    std::vector<std::string> warnings;
    if (decided >= 100) {
        const BornTest bt = born_test(e.counts, w0);
        report["born_test"] = born_json(true, bt.chi_square, bt.degrees_of_freedom, bt.p_value, bt.passed);
        warnings = bt.warnings;
    } else {
        report["born_test"] = born_json(false, 0.0, 0, 1.0, false);
        warnings.push_back("fewer than 100 finished games; chi-square not computed");
    }

    report["oracle"] = nullptr;
    out.summary = "frequencies " + list(e.frequencies) + " from stakes " + list(w0) + "\n";
    if (w0.size() == 2 && cfg.ruin.distribution.kind == StepKind::fixed) {
        try {
            const double p0 = exit_probability_oracle(w0, cfg.ruin.distribution.scale, cfg.ruin.rules);
            ojson table = ojson::array();
            for (std::size_t i = 0; i < 2; ++i) {
                const double exact = i == 0 ? p0 : 1.0 - p0;
                const double dev = std::abs(e.frequencies[i] - exact);
                const double se = e.standard_errors[i];
                const bool ok = dev <= 3.0 * se || dev == 0.0;
                out.passed = out.passed && ok;
                ojson row;
                row["player"] = i;
                row["oracle"] = exact;
                row["monte_carlo"] = num(e.frequencies[i]);
                row["standard_error"] = num(se);
                row["deviation"] = num(dev);
                row["within_3_sigma"] = ok;
                table.push_back(row);
                out.summary += "player " + std::to_string(i) + ": oracle " + short_num(exact) + ", Monte Carlo " +
                               short_num(e.frequencies[i]) + " +- " + short_num(se) + (ok ? "" : "  (outside 3 sigma)") +
                               "\n";
            }
            report["oracle"] = table;
        } catch (const StructuralError& err) {
            warnings.push_back(std::string("no exact oracle: ") + err.what());
        }
    }
    report["warnings"] = warnings;
    for (const auto& w : warnings) out.summary += "warning: " + w + "\n";
    out.report = report.dump(2) + "\n";
    write_outputs(cfg, report, seconds_since(t0));
    return out;
}

CommandOutput command_verify(const Config& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const VerifyReport v = run_verify(cfg);
    ojson report;
    report["kind"] = "verify";
    report["passed"] = v.passed;
    ojson checks = ojson::array();
    CommandOutput out;
    out.passed = v.passed;
    for (const CheckResult& c : v.checks) {
        ojson j;
        j["name"] = c.name;
        j["value"] = c.value ? num(*c.value) : ojson(nullptr);
        j["tolerance"] = c.tolerance;
        j["passed"] = c.passed;
        j["detail"] = c.detail;
        checks.push_back(j);
        out.summary += std::string(c.passed ? "PASS " : "FAIL ") + c.name + ": " +
                       (c.value ? short_num(*c.value) : std::string("n/a")) + " (tolerance " + short_num(c.tolerance) +
                       ")" + (c.detail.empty() ? "" : ", " + c.detail) + "\n";
    }
    report["checks"] = checks;
    out.report = report.dump(2) + "\n";
    write_outputs(cfg, report, seconds_since(t0));
    return out;
}

}  // namespace collapse::detail
