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

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "collapse/error.hpp"
#include "collapse/rng.hpp"

namespace collapse {

enum class StepKind { fixed, uniform, exponential, dynamics_coupled };

std::string to_string(StepKind kind);
// Throws ConfigError on an unknown name.
StepKind parse_step_kind(const std::string& name);

// Law of the pumped amount per step. For dynamics_coupled the base draw is
// exponential with mean `scale` and the amount is w_m * w_n * base.
struct StepDistribution {
    StepKind kind = StepKind::fixed;
    double scale = 0.01;
    // dynamics_coupled only: a stake below this is swept to the step partner.
    double absorb_floor = 1e-12;

    void validate() const;
    // Base draw, strictly positive.
    double draw(CounterRng& rng) const;
};

struct GameRules {
    // Probability that a step moves weight toward the lower-indexed player
    // of the chosen pair. 0.5 is the fair game.
    double sign_bias = 0.5;
    // Optional K x K table multiplying the drawn amount for pair (m, n);
    // empty means 1 everywhere. Lets the step law depend on the pair.
    std::vector<std::vector<double>> pair_scale;

    void validate() const;
    // Also checks pair_scale against the player count.
    void validate(std::size_t players) const;
    double scale_for(std::size_t m, std::size_t n) const {
        return pair_scale.empty() ? 1.0 : pair_scale[std::min(m, n)][std::max(m, n)];
    }
};

// Weights are held as integer ticks of 2^-60 so transfers are exact and the
// total never drifts.
class GameState {
public:
    static constexpr std::int64_t kScale = std::int64_t{1} << 60;

    GameState() = default;
    // Rounds to ticks and puts the rounding remainder on the largest stake.
    explicit GameState(const std::vector<double>& weights, std::uint64_t rng_seed = 0);

    // Ticks must be non-negative and sum to kScale.
    static GameState from_ticks(std::vector<std::int64_t> ticks, std::uint64_t rng_seed = 0);

    std::size_t n_players() const noexcept { return ticks_.size(); }
    std::size_t n_active() const noexcept;
    bool active(std::size_t k) const { return ticks_.at(k) > 0; }
    double weight(std::size_t k) const { return static_cast<double>(ticks_.at(k)) / static_cast<double>(kScale); }
    std::vector<double> weights() const;
    const std::vector<std::int64_t>& ticks() const noexcept { return ticks_; }
    std::uint64_t rng_seed() const noexcept { return rng_seed_; }
    std::optional<std::size_t> winner() const;

    // Move up to `amount` from loser to gainer, truncated to min(amount,
    // w_gainer, w_loser). The truncation bound does not depend on direction,
    // which keeps the game fair exactly.
    void transfer(std::size_t gainer, std::size_t loser, double amount);

private:
    std::vector<std::int64_t> ticks_;
    std::uint64_t rng_seed_ = 0;
};

// One step: uniform unordered active pair, amount from dist, direction from
// rules. Throws GameOverError with fewer than two active players.
GameState play_step(const GameState& state, const StepDistribution& dist, CounterRng& rng,
                    const GameRules& rules = {});

struct RuinOutcome {
    std::optional<std::size_t> winner;  // empty when max_steps was reached
    std::uint64_t steps = 0;
};

RuinOutcome play_to_ruin(const std::vector<double>& w0, const StepDistribution& dist, std::uint64_t seed,
                         std::uint64_t max_steps, const GameRules& rules = {});

// Seed of trial `index` under `master_seed`.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

struct ExitEstimate {
    std::uint64_t trials = 0;
    std::vector<std::uint64_t> counts;
    std::vector<double> frequencies;     // counts / decided
    std::vector<double> standard_errors; // binomial, per player
    std::uint64_t undecided = 0;
    double mean_steps = 0.0;             // over decided trials
    std::uint64_t max_steps_seen = 0;
};

struct MonteCarloOptions {
    std::uint64_t max_steps = 100'000'000;
    unsigned threads = 0;  // 0: hardware concurrency
};

ExitEstimate exit_probability_mc(const std::vector<double>& w0, const StepDistribution& dist, std::uint64_t trials,
                                 std::uint64_t master_seed, const GameRules& rules = {},
                                 const MonteCarloOptions& opts = {});

// Exact two-player oracles for a fixed step on the lattice {0, delta, ..., 1}.
// Both solve the absorbing chain as a dense linear system.
double exit_probability_oracle(double w0, double delta, const GameRules& rules = {});
// Vector form: probability that player 0 wins. Only two players are
// supported; other sizes throw StructuralError.
double exit_probability_oracle(const std::vector<double>& w0, double delta, const GameRules& rules = {});
double expected_duration_oracle(double w0, double delta, const GameRules& rules = {});

// Candidate exit-probability map: weights -> per-player probabilities.
using ProbabilityMap = std::function<std::vector<double>(const std::vector<double>&)>;

// Uniform interior points of the (K-1)-simplex.
std::vector<std::vector<double>> sample_interior_points(std::size_t k, std::size_t count, std::uint64_t seed);
// Interior lattice points {i/resolution} with every coordinate >= 1/resolution.
std::vector<std::vector<double>> simplex_grid(std::size_t k, std::size_t resolution);

// max over points and players of |E[p(next)] - p(w)|, with the expectation
// over pair, direction and amount evaluated by 64-point Gauss-Legendre.
double verify_difference_equation(const ProbabilityMap& p, const StepDistribution& dist,
                                  const std::vector<std::vector<double>>& points, const GameRules& rules = {});

// max over players of |p(e_j)_i - delta_ij|.
double boundary_residual(const ProbabilityMap& p, std::size_t k);

// Diffusion operator on the simplex: sum over pairs m<n of D_mn times the
// second derivative along e_m - e_n, by central differences of step h
// (shrunk near the boundary so probes stay in the simplex).
double bfp_residual(const ProbabilityMap& p, const std::vector<std::vector<double>>& diffusion,
                    const std::vector<std::vector<double>>& points, double h = 0.01);

struct MartingaleReport {
    std::vector<double> mean_increment;
    std::vector<double> standard_error;
    bool passed = true;  // every |mean| <= 3 SE
};

// Single steps from independent uniform random states.
MartingaleReport martingale_test(std::size_t k, const StepDistribution& dist, std::uint64_t steps, std::uint64_t seed,
                                 const GameRules& rules = {}, unsigned threads = 0);

}  // namespace collapse
