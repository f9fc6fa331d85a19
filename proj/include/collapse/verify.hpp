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

#include <optional>
#include <string>
#include <vector>

#include "collapse/config.hpp"

namespace collapse {

struct CheckResult {
    std::string name;
    std::optional<double> value;  // empty when the check could not be evaluated
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed = true;
};

// Worst residuals seen along one integration.
struct ConservationStats {
    std::uint64_t steps = 0;
    double weight_sum = 0.0;    // max |sum_k w_k - 1|, or |tr rho - 1|
    double hermiticity = 0.0;   // max entry of R_kl - R_lk^dagger, or of rho - rho^dagger
    double block_trace = 0.0;   // factored only: max trace deficit removed by renormalization
    double purity_drift = 0.0;  // full only: max |tr rho^2 - initial|
    std::optional<std::string> blowup;
};

ConservationStats conservation_factored(const Scenario& scenario, std::uint64_t steps, const DetectorPhases& phases);
ConservationStats conservation_full(const Scenario& scenario, std::uint64_t steps, const DetectorPhases& phases);

// Two outcomes, one four-level detector: small enough for the full space.
Scenario oracle_scenario(double zeta, double dt);

// Whole battery driven by a config: game-level residuals, oracle match,
// conservation along both integrators, Born and martingale checks.
VerifyReport run_verify(const Config& config);

}  // namespace collapse
