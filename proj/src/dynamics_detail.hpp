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

#include <vector>

#include "collapse/dynamics.hpp"

namespace collapse::detail {

void check_structure(const Scenario& s);
// Weights below kZeroClamp drop to exactly 0; a ruined branch never
// recovers because every pumping term carries its own weight as a factor.
void clamp_weights(std::vector<double>& w);

}  // namespace collapse::detail
