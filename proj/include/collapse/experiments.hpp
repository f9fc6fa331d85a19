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

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "collapse/dynamics.hpp"
#include "collapse/ruin.hpp"

namespace collapse {

// Sampled trajectory: rows of t, w_1..w_K, purity_1..purity_D.
struct Trajectory {
    std::size_t n_outcomes = 0;
    std::size_t n_detectors = 0;
    std::vector<std::vector<double>> rows;
};

struct PairDrift {
    std::size_t k = 0;
    std::size_t m = 0;
    double mean = 0.0;  // across trials, of each trial's time-averaged sum_d (T_km - T_mk)
    double se = 0.0;
};

struct RunReport {
    std::string scenario_digest;
    std::uint64_t trials = 0;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> counts;
    std::vector<double> frequencies;  // counts / decided
    std::vector<double> expected;     // Born weights
    std::uint64_t undecided = 0;
    double undecided_fraction = 0.0;
    double chi_square = 0.0;
    std::size_t degrees_of_freedom = 0;
    double p_value = 1.0;
    bool born_pass = false;
    bool born_tested = false;
    std::vector<PairDrift> drift_stats;
    std::vector<double> mean_final_weights;  // over all trials
    double mean_collapse_time = 0.0;         // over decided trials
    std::vector<std::string> warnings;
    double wall_time = 0.0;
};

struct EnsembleOptions {
    unsigned threads = 0;
    // Record every `thin`-th step of each trajectory; 0 records nothing.
    std::uint64_t thin = 0;
    // Called from worker threads with a finished trial; must be safe for
    // concurrent calls on distinct trial indices.
    std::function<void(std::uint64_t trial, const Trajectory&)> trajectory_sink;
};

// FNV-1a over a canonical text form of the scenario (17 significant
// digits per number), as 16 hex digits.
std::string scenario_digest(const Scenario& scenario);

// Per-trial detector phases: independent uniform angles in [0, 2 pi) for
// the active and quiet coherent states of every detector.
DetectorPhases trial_phases(std::size_t n_detectors, std::uint64_t seed);

struct TrialResult {
    std::optional<std::size_t> winner;
    double time = 0.0;
    std::vector<double> final_weights;
    std::vector<double> mean_asymmetry;  // per unordered pair, time-averaged
};

// One trajectory from the given phases, run until collapse or t_max.
TrialResult run_trial(const Scenario& scenario, const DetectorPhases& phases, std::uint64_t thin = 0,
                      Trajectory* trajectory = nullptr);

RunReport run_ensemble(const Scenario& scenario, std::uint64_t trials, std::uint64_t master_seed,
                       const EnsembleOptions& opts = {});

struct BornTest {
    double chi_square = 0.0;
    std::size_t degrees_of_freedom = 0;
    double p_value = 1.0;
    bool passed = true;
    std::vector<std::string> warnings;
};

// Pearson chi-square of counts against expected probabilities, pass at
// alpha = 0.01. Bins expecting fewer than 5 counts are pooled (with a
// warning). Throws StructuralError with fewer than 100 counts.
BornTest born_test(const std::vector<std::uint64_t>& counts, const std::vector<double>& expected, double alpha = 0.01);
BornTest born_test(const RunReport& report, const std::vector<double>& expected, double alpha = 0.01);

struct DriftDiagnostic {
    std::vector<PairDrift> pairs;
    std::size_t windows = 0;
    double window = 0.0;
    bool fair = true;  // every pair |mean| <= 3 SE
    std::string verdict;
};

// One trajectory; block means of sum_d (T_km - T_mk) over consecutive
// windows of length `window` until collapse or t_max.
DriftDiagnostic drift_diagnostic(const Scenario& scenario, double window, std::uint64_t seed);

// Which detectors and which outcome labels belong to the local site.
struct SiteSplit {
    std::vector<bool> local_detector;        // [d]
    std::vector<std::size_t> local_outcome;  // [k]: local result label of outcome k
};

struct NoSignalingReport {
    std::vector<std::vector<double>> marginals;  // [setting][local label]
    std::vector<double> expected_marginal;       // from the Born weights of the base setting
    std::vector<std::uint64_t> decided;          // [setting]
    std::vector<RunReport> runs;
    double max_deviation = 0.0;
    double pooled_sigma = 0.0;
    bool passed = true;
};

// Checks that every variant changes remote detectors (or rotates the
// remote basis keeping the local marginal); throws InvalidComparisonError
// otherwise.
void check_remote_variants(const Scenario& base, const std::vector<Scenario>& variants, const SiteSplit& split);

NoSignalingReport nosignaling_test(const Scenario& base, const std::vector<Scenario>& variants, const SiteSplit& split,
                                   std::uint64_t trials, std::uint64_t seed, const EnsembleOptions& opts = {});

// Same statistic on the abstract game: one pair-scale table per remote
// setting, local marginal of the exit frequencies.
NoSignalingReport nosignaling_ruin(const std::vector<double>& w0, const StepDistribution& dist,
                                   const std::vector<GameRules>& settings, const std::vector<std::size_t>& local_outcome,
                                   std::uint64_t trials, std::uint64_t seed, unsigned threads = 0);

// Two-site correlation setup on (|00> + |11>)/sqrt2 measured at angles
// theta_a, theta_b. Outcomes (++, +-, -+, --); detectors (A+, A-, B+, B-).
Scenario chsh_scenario(double theta_a, double theta_b, const DetectorSpec& a_detector, const DetectorSpec& b_detector);
SiteSplit chsh_split();

struct ZetaEstimate {
    double action = 0.0;  // Q e U t / hbar
    double zeta = 0.0;    // 1 / (action t), reconstructed
    std::string note;
};

ZetaEstimate estimate_zeta(double charge_carriers, double bias_voltage, double duration);

// Factored and full integration side by side.
struct FullComparison {
    std::vector<std::vector<double>> rows;  // t, w_factored..., purity_d..., w_full..., deviation
    double max_deviation = 0.0;
    std::vector<std::string> header;
};

FullComparison compare_full(const Scenario& scenario, const DetectorPhases& phases, std::uint64_t thin = 1);

}  // namespace collapse
