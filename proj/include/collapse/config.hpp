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

// Run configuration: a JSON document with a required "scenario" block and
// optional "experiment", "ruin", "verify" and "nosignaling" blocks. Unknown
// keys are rejected; every error names the offending JSON pointer.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collapse/dynamics.hpp"
#include "collapse/experiments.hpp"
#include "collapse/ruin.hpp"

namespace collapse {

struct ExperimentConfig {
    std::uint64_t trials = 1000;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    std::uint64_t thin = 0;  // trajectory sampling stride; 0 writes none
    unsigned threads = 0;    // 0: machine parallelism; not part of the file format
};

struct RuinConfig {
    std::vector<double> w0;  // empty: Born weights of the scenario
    StepDistribution distribution;
    GameRules rules;
    std::uint64_t max_steps = 100'000'000;
};

struct VerifyConfig {
    std::size_t points = 100;           // interior points for the difference equation
    std::size_t grid_resolution = 50;   // simplex grid for the diffusion residual
    std::uint64_t conservation_steps = 10'000;
    std::uint64_t martingale_steps = 1'000'000;
    std::uint64_t born_trials = 100'000;
};

struct NoSignalingConfig {
    SiteSplit split;
    std::vector<Scenario> variants;  // remote settings compared against the base scenario
};

struct Config {
    Scenario scenario;
    ExperimentConfig experiment;
    RuinConfig ruin;
    VerifyConfig verify;
    std::optional<NoSignalingConfig> nosignaling;

    // Full validation; throws ConfigError naming the field.
    void validate() const;
    // Ruin starting stakes, defaulting to the scenario's Born weights.
    std::vector<double> ruin_start() const;
};

// Throws ConfigError; syntax errors report line and column.
Config parse_config(std::string_view text);
Config load_config(const std::string& path);

// Checks a written report against the schema for its "kind"; returns the
// list of problems (empty when valid).
std::vector<std::string> validate_report(std::string_view json_text);

}  // namespace collapse
