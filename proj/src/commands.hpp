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

// Command bodies behind the C API. Each one computes everything first and
// then writes <output_dir>/report.json (deterministic) and timing.json.

#pragma once

#include <string>

#include "collapse/config.hpp"

namespace collapse::detail {

struct CommandOutput {
    std::string report;   // report.json contents
    std::string summary;  // short human-readable digest
    bool passed = true;
};

// Ensemble run; streams trajectory CSVs when experiment.thin > 0. With a
// nosignaling block the comparison runs as well and is added to the report.
CommandOutput command_simulate(const Config& config);
// Factored and full integration of one trial side by side.
CommandOutput command_simulate_full(const Config& config);
// Exit-probability Monte Carlo, with the exact oracle when it applies.
CommandOutput command_ruin(const Config& config);
CommandOutput command_verify(const Config& config);

}  // namespace collapse::detail
