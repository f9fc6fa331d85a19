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

#include "collapse/ruin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "parallel.hpp"

namespace collapse {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 64>;

constexpr double kTick = 1.0 / static_cast<double>(GameState::kScale);

// Tick-level game shared by play_step and the Monte Carlo loop. `active`
// lists players with a positive stake in increasing index order.
struct Board {
    std::vector<std::int64_t>& ticks;
    std::vector<std::size_t>& active;

    void move(std::size_t gainer, std::size_t loser, double amount) {
        const std::int64_t cap = std::min(ticks[gainer], ticks[loser]);
        std::int64_t t = cap;
        const double scaled = amount * static_cast<double>(GameState::kScale);
        if (scaled < static_cast<double>(cap)) t = std::clamp<std::int64_t>(std::llround(scaled), 1, cap);
        ticks[gainer] += t;
        ticks[loser] -= t;
    }

    void drop_empty() {
        active.erase(std::remove_if(active.begin(), active.end(), [&](std::size_t k) { return ticks[k] == 0; }),
                     active.end());
    }

    void step(const StepDistribution& dist, CounterRng& rng, const GameRules& rules) {
        const std::size_t a = active.size();
        // unordered pair index -> (i < j)
        std::uint64_t r = rng.below(static_cast<std::uint64_t>(a * (a - 1) / 2));
        std::size_t i = 0;
        while (r >= a - 1 - i) {
            r -= a - 1 - i;
            ++i;
        }
        const std::size_t m = active[i];
        const std::size_t n = active[i + 1 + static_cast<std::size_t>(r)];

        double amount = dist.draw(rng) * rules.scale_for(m, n);
        if (dist.kind == StepKind::dynamics_coupled) {
            amount *= static_cast<double>(ticks[m]) * kTick * static_cast<double>(ticks[n]) * kTick;
        }
        const bool toward_m = rng.bernoulli(rules.sign_bias);
        const std::size_t gainer = toward_m ? m : n;
        const std::size_t loser = toward_m ? n : m;
        move(gainer, loser, amount);
        if (dist.kind == StepKind::dynamics_coupled && ticks[loser] > 0 &&
            static_cast<double>(ticks[loser]) * kTick < dist.absorb_floor) {
            ticks[gainer] += ticks[loser];
            ticks[loser] = 0;
        }
        if (ticks[loser] == 0) drop_empty();
    }
};

std::vector<std::size_t> active_list(const std::vector<std::int64_t>& ticks) {
    std::vector<std::size_t> a;
    for (std::size_t k = 0; k < ticks.size(); ++k)
        if (ticks[k] > 0) a.push_back(k);
    return a;
}

// Integral of g(amount) over the step law, split at `kink` (where the
// truncation switches on) so each piece is smooth.
template <class G>
void integrate_amount(const StepDistribution& dist, double coupling, double factor, double kink, G&& g) {
    switch (dist.kind) {
        case StepKind::fixed:
            g(dist.scale * factor, 1.0);
            return;
        case StepKind::uniform: {
            const double top = dist.scale * factor;
            auto piece = [&](double a, double b) {
                if (b <= a) return;
                const double mid = 0.5 * (a + b);
                const double half = 0.5 * (b - a);
                for (std::size_t q = 0; q < Gauss::abscissa().size(); ++q) {
                    const double x = Gauss::abscissa()[q];
                    const double w = Gauss::weights()[q] * half / top;
                    g(mid + half * x, w);
                    g(mid - half * x, w);
                }
            };
            const double c = std::min(kink, top);
            piece(0.0, c);
            piece(c, top);
            return;
        }
        case StepKind::exponential:
        case StepKind::dynamics_coupled: {
            // u = 1 - exp(-amount/mean) is uniform on [0, 1).
            const double mean = dist.scale * factor * (dist.kind == StepKind::dynamics_coupled ? coupling : 1.0);
            auto piece = [&](double a, double b) {
                if (b <= a) return;
                const double mid = 0.5 * (a + b);
                const double half = 0.5 * (b - a);
                for (std::size_t q = 0; q < Gauss::abscissa().size(); ++q) {
                    const double x = Gauss::abscissa()[q];
                    const double w = Gauss::weights()[q] * half;
                    g(-mean * std::log1p(-(mid + half * x)), w);
                    g(-mean * std::log1p(-(mid - half * x)), w);
                }
            };
            const double uc = -std::expm1(-kink / mean);
            piece(0.0, uc);
            piece(uc, 1.0);
            return;
        }
    }
}

void check_map_output(const std::vector<double>& v, std::size_t k) {
    if (v.size() != k) throw StructuralError("probability map returned the wrong number of entries");
}

}  // namespace

std::string to_string(StepKind kind) {
    switch (kind) {
        case StepKind::fixed: return "fixed";
        case StepKind::uniform: return "uniform";
        case StepKind::exponential: return "exponential";
        case StepKind::dynamics_coupled: return "dynamics-coupled";
    }
    return "unknown";
}

StepKind parse_step_kind(const std::string& name) {
    if (name == "fixed") return StepKind::fixed;
    if (name == "uniform") return StepKind::uniform;
    if (name == "exponential") return StepKind::exponential;
    if (name == "dynamics-coupled") return StepKind::dynamics_coupled;
    throw ConfigError("", "unknown step distribution '" + name +
                              "' (expected fixed, uniform, exponential or dynamics-coupled)");
}

void StepDistribution::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("scale", "must be a positive finite number");
    if (!(absorb_floor > 0.0) || !(absorb_floor < 1e-3)) throw ConfigError("absorb_floor", "must lie in (0, 1e-3)");
}

double StepDistribution::draw(CounterRng& rng) const {
    switch (kind) {
        case StepKind::fixed: return scale;
        case StepKind::uniform: return scale * rng.uniform_open_low();
        case StepKind::exponential:
        case StepKind::dynamics_coupled: return -scale * std::log(rng.uniform_open());
    }
    return scale;
}

void GameRules::validate() const {
    if (!(sign_bias > 0.0 && sign_bias < 1.0)) throw ConfigError("sign_bias", "must lie strictly between 0 and 1");
}

void GameRules::validate(std::size_t players) const {
    validate();
    if (pair_scale.empty()) return;
    if (pair_scale.size() != players) throw ConfigError("pair_scale", "must have one row per player");
    for (std::size_t m = 0; m < players; ++m) {
        if (pair_scale[m].size() != players) throw ConfigError("pair_scale", "must be square");
        for (std::size_t n = m + 1; n < players; ++n) {
            const double v = pair_scale[m][n];
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("pair_scale", "entries must be positive");
        }
    }
}

GameState::GameState(const std::vector<double>& weights, std::uint64_t rng_seed) : rng_seed_(rng_seed) {
    if (weights.empty()) throw StructuralError("game needs at least one player");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw StructuralError("stakes must be finite and non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw StructuralError("stakes must sum to 1");
    ticks_.resize(weights.size());
    std::int64_t sum = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        ticks_[k] = std::llround(weights[k] * static_cast<double>(kScale));
        sum += ticks_[k];
    }
    const auto largest = static_cast<std::size_t>(std::max_element(ticks_.begin(), ticks_.end()) - ticks_.begin());
    ticks_[largest] += kScale - sum;
}

GameState GameState::from_ticks(std::vector<std::int64_t> ticks, std::uint64_t rng_seed) {
    std::int64_t sum = 0;
    for (std::int64_t t : ticks) {
        if (t < 0) throw StructuralError("negative stake");
        sum += t;
    }
    if (sum != kScale) throw StructuralError("stakes must sum to 1 exactly");
    GameState g;
    g.ticks_ = std::move(ticks);
    g.rng_seed_ = rng_seed;
    return g;
}

std::size_t GameState::n_active() const noexcept {
    return static_cast<std::size_t>(std::count_if(ticks_.begin(), ticks_.end(), [](std::int64_t t) { return t > 0; }));
}

std::vector<double> GameState::weights() const {
    std::vector<double> w(ticks_.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = weight(k);
    return w;
}

std::optional<std::size_t> GameState::winner() const {
    for (std::size_t k = 0; k < ticks_.size(); ++k)
        if (ticks_[k] == kScale) return k;
    return std::nullopt;
}

void GameState::transfer(std::size_t gainer, std::size_t loser, double amount) {
    if (gainer >= ticks_.size() || loser >= ticks_.size() || gainer == loser)
        throw StructuralError("transfer needs two distinct players");
    if (!(amount > 0.0)) throw StructuralError("transfer amount must be positive");
    std::vector<std::size_t> active = active_list(ticks_);
    Board{ticks_, active}.move(gainer, loser, amount);
}

GameState play_step(const GameState& state, const StepDistribution& dist, CounterRng& rng, const GameRules& rules) {
    if (state.n_active() < 2) throw GameOverError("fewer than two active players");
    std::vector<std::int64_t> ticks = state.ticks();
    std::vector<std::size_t> active = active_list(ticks);
    Board{ticks, active}.step(dist, rng, rules);
    if (std::accumulate(ticks.begin(), ticks.end(), std::int64_t{0}) != GameState::kScale)
        throw Error("zero-sum invariant violated");
    return GameState::from_ticks(std::move(ticks), state.rng_seed());
}

RuinOutcome play_to_ruin(const std::vector<double>& w0, const StepDistribution& dist, std::uint64_t seed,
                         std::uint64_t max_steps, const GameRules& rules) {
    dist.validate();
    rules.validate(w0.size());
    const GameState start(w0, seed);
    std::vector<std::int64_t> ticks = start.ticks();
    std::vector<std::size_t> active = active_list(ticks);
    Board board{ticks, active};
    CounterRng rng(seed);
    RuinOutcome out;
    while (active.size() > 1 && out.steps < max_steps) {
        board.step(dist, rng, rules);
        ++out.steps;
    }
    if (active.size() == 1) out.winner = active.front();
    return out;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
    return mix64(mix64(master_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

ExitEstimate exit_probability_mc(const std::vector<double>& w0, const StepDistribution& dist, std::uint64_t trials,
                                 std::uint64_t master_seed, const GameRules& rules, const MonteCarloOptions& opts) {
    if (trials < 1) throw StructuralError("trials must be at least 1");
    dist.validate();
    rules.validate(w0.size());
    const GameState start(w0);
    std::vector<std::int32_t> winner(trials, -1);
    std::vector<std::uint64_t> steps(trials, 0);

    // Trials are grouped in fixed-size chunks so per-chunk scratch is reused.
    constexpr std::uint64_t kChunk = 256;
    const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
    detail::parallel_for(static_cast<std::size_t>(chunks), opts.threads, [&](std::size_t c) {
        std::vector<std::int64_t> ticks;
        std::vector<std::size_t> active;
        const std::uint64_t end = std::min<std::uint64_t>(trials, (c + 1) * kChunk);
        for (std::uint64_t t = c * kChunk; t < end; ++t) {
            ticks = start.ticks();
            active = active_list(ticks);
            Board board{ticks, active};
            CounterRng rng(trial_seed(master_seed, t));
            std::uint64_t n = 0;
            while (active.size() > 1 && n < opts.max_steps) {
                board.step(dist, rng, rules);
                ++n;
            }
            steps[t] = n;
            if (active.size() == 1) winner[t] = static_cast<std::int32_t>(active.front());
        }
    });

    ExitEstimate est;
    est.trials = trials;
    est.counts.assign(w0.size(), 0);
    double step_sum = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        if (winner[t] < 0) {
            ++est.undecided;
            continue;
        }
        ++est.counts[static_cast<std::size_t>(winner[t])];
        step_sum += static_cast<double>(steps[t]);
        est.max_steps_seen = std::max(est.max_steps_seen, steps[t]);
    }
    const std::uint64_t decided = trials - est.undecided;
    est.frequencies.assign(w0.size(), 0.0);
    est.standard_errors.assign(w0.size(), 0.0);
    if (decided > 0) {
        for (std::size_t k = 0; k < w0.size(); ++k) {
            const double f = static_cast<double>(est.counts[k]) / static_cast<double>(decided);
            est.frequencies[k] = f;
            est.standard_errors[k] = std::sqrt(f * (1.0 - f) / static_cast<double>(decided));
        }
        est.mean_steps = step_sum / static_cast<double>(decided);
    }
    return est;
}

namespace {

struct Lattice {
    std::size_t size;   // L
    std::size_t start;  // i
};

Lattice lattice_point(double w0, double delta) {
    if (!(delta > 0.0) || delta > 0.5) throw StructuralError("lattice step must lie in (0, 1/2]");
    const double l = std::round(1.0 / delta);
    if (std::abs(l * delta - 1.0) > 1e-9) throw StructuralError("lattice step must divide 1");
    if (l > 4000) throw SizeError("lattice too fine for the dense oracle");
    const double i = std::round(w0 / delta);
    if (!(w0 >= 0.0 && w0 <= 1.0) || std::abs(i * delta - w0) > 1e-9)
        throw StructuralError("start weight is not on the lattice");
    return {static_cast<std::size_t>(l), static_cast<std::size_t>(i)};
}

// Solves h_j = p h_{j+1} + q h_{j-1} + c on the interior with h_0 = 0 and
// h_L = top.
double solve_chain(const Lattice& lat, double p, double top, double c) {
    if (lat.start == 0) return 0.0;
    if (lat.start == lat.size) return top;
    const auto n = static_cast<Eigen::Index>(lat.size - 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Constant(n, c);
    for (Eigen::Index j = 0; j < n; ++j) {
        a(j, j) = 1.0;
        if (j + 1 < n) a(j, j + 1) = -p;
        else b(j) += p * top;
        if (j > 0) a(j, j - 1) = -(1.0 - p);
    }
    const Eigen::VectorXd h = a.partialPivLu().solve(b);
    return h(static_cast<Eigen::Index>(lat.start) - 1);
}

}  // namespace

double exit_probability_oracle(double w0, double delta, const GameRules& rules) {
    rules.validate();
    return solve_chain(lattice_point(w0, delta), rules.sign_bias, 1.0, 0.0);
}

double exit_probability_oracle(const std::vector<double>& w0, double delta, const GameRules& rules) {
    if (w0.size() != 2) throw StructuralError("exact oracle supports two players only");
    if (std::abs(w0[0] + w0[1] - 1.0) > 1e-9) throw StructuralError("stakes must sum to 1");
    return exit_probability_oracle(w0[0], delta, rules);
}

double expected_duration_oracle(double w0, double delta, const GameRules& rules) {
    rules.validate();
    return solve_chain(lattice_point(w0, delta), rules.sign_bias, 0.0, 1.0);
}

std::vector<std::vector<double>> sample_interior_points(std::size_t k, std::size_t count, std::uint64_t seed) {
    if (k < 2) throw StructuralError("simplex needs at least two players");
    std::vector<std::vector<double>> pts(count, std::vector<double>(k));
    CounterRng rng(seed);
    for (auto& w : pts) {
        double total = 0.0;
        for (double& x : w) {
            x = -std::log(rng.uniform_open());
            total += x;
        }
        for (double& x : w) x /= total;
    }
    return pts;
}

std::vector<std::vector<double>> simplex_grid(std::size_t k, std::size_t resolution) {
    if (k < 2) throw StructuralError("simplex needs at least two players");
    if (resolution < k) throw StructuralError("resolution too coarse for an interior grid");
    std::vector<std::vector<double>> pts;
    std::vector<std::size_t> parts(k, 1);
    // Enumerate compositions of `resolution` into k positive parts.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t slot, std::size_t left) {
        if (slot + 1 == k) {
            parts[slot] = left;
            std::vector<double> w(k);
            for (std::size_t j = 0; j < k; ++j) w[j] = static_cast<double>(parts[j]) / static_cast<double>(resolution);
            pts.push_back(std::move(w));
            return;
        }
        for (std::size_t v = 1; v + (k - slot - 1) <= left; ++v) {
            parts[slot] = v;
            rec(slot + 1, left - v);
        }
    };
    rec(0, resolution);
    return pts;
}

double verify_difference_equation(const ProbabilityMap& p, const StepDistribution& dist,
                                  const std::vector<std::vector<double>>& points, const GameRules& rules) {
    dist.validate();
    rules.validate();
    double worst = 0.0;
    for (const std::vector<double>& w : points) {
        const std::size_t k = w.size();
        rules.validate(k);
        const std::vector<double> here = p(w);
        check_map_output(here, k);
        std::vector<std::size_t> live;
        for (std::size_t j = 0; j < k; ++j)
            if (w[j] > 0.0) live.push_back(j);
        if (live.size() < 2) continue;
        const double pair_weight = 2.0 / static_cast<double>(live.size() * (live.size() - 1));

        std::vector<double> expect(k, 0.0);
        std::vector<double> probe(k);
        for (std::size_t a = 0; a < live.size(); ++a) {
            for (std::size_t b = a + 1; b < live.size(); ++b) {
                const std::size_t m = live[a];
                const std::size_t n = live[b];
                const double cap = std::min(w[m], w[n]);
                integrate_amount(dist, w[m] * w[n], rules.scale_for(m, n), cap, [&](double amount, double mass) {
                    const double c = std::min(amount, cap);
                    probe = w;
                    probe[m] += c;
                    probe[n] -= c;
                    const std::vector<double> up = p(probe);
                    probe = w;
                    probe[m] -= c;
                    probe[n] += c;
                    const std::vector<double> down = p(probe);
                    check_map_output(up, k);
                    check_map_output(down, k);
                    for (std::size_t i = 0; i < k; ++i) {
                        expect[i] += pair_weight * mass * (rules.sign_bias * up[i] + (1.0 - rules.sign_bias) * down[i]);
                    }
                });
            }
        }
        for (std::size_t i = 0; i < k; ++i) worst = std::max(worst, std::abs(expect[i] - here[i]));
    }
    return worst;
}

double boundary_residual(const ProbabilityMap& p, std::size_t k) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> e(k, 0.0);
        e[j] = 1.0;
        const std::vector<double> v = p(e);
        check_map_output(v, k);
        for (std::size_t i = 0; i < k; ++i) worst = std::max(worst, std::abs(v[i] - (i == j ? 1.0 : 0.0)));
    }
    return worst;
}

double bfp_residual(const ProbabilityMap& p, const std::vector<std::vector<double>>& diffusion,
                    const std::vector<std::vector<double>>& points, double h) {
    if (!(h > 0.0)) throw StructuralError("finite-difference step must be positive");
    double worst = 0.0;
    for (const std::vector<double>& w : points) {
        const std::size_t k = w.size();
        if (diffusion.size() != k) throw StructuralError("diffusion matrix does not match the point dimension");
        const std::vector<double> here = p(w);
        check_map_output(here, k);
        std::vector<double> acc(k, 0.0);
        std::vector<double> probe(k);
        for (std::size_t m = 0; m < k; ++m) {
            if (diffusion[m].size() != k) throw StructuralError("diffusion matrix must be square");
            for (std::size_t n = m + 1; n < k; ++n) {
                const double d = diffusion[m][n];
                if (!(d >= 0.0) || !std::isfinite(d)) throw StructuralError("diffusion coefficients must be non-negative");
                const double step = std::min(h, 0.5 * std::min(w[m], w[n]));
                if (!(step > 0.0)) continue;
                probe = w;
                probe[m] += step;
                probe[n] -= step;
                const std::vector<double> up = p(probe);
                probe = w;
                probe[m] -= step;
                probe[n] += step;
                const std::vector<double> down = p(probe);
                for (std::size_t i = 0; i < k; ++i) acc[i] += d * (up[i] - 2.0 * here[i] + down[i]) / (step * step);
            }
        }
        for (double v : acc) worst = std::max(worst, std::abs(v));
    }
    return worst;
}

MartingaleReport martingale_test(std::size_t k, const StepDistribution& dist, std::uint64_t steps, std::uint64_t seed,
                                 const GameRules& rules, unsigned threads) {
    if (k < 2) throw StructuralError("martingale test needs at least two players");
    if (steps < 2) throw StructuralError("martingale test needs at least two steps");
    dist.validate();
    rules.validate(k);
    // Fixed chunking keeps the floating-point summation order independent
    // of the worker count.
    constexpr std::uint64_t kChunk = 16384;
    const std::uint64_t chunks = (steps + kChunk - 1) / kChunk;
    std::vector<double> sums(chunks * k, 0.0);
    std::vector<double> squares(chunks * k, 0.0);
    detail::parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
        std::vector<std::int64_t> ticks;
        std::vector<std::size_t> active;
        const std::uint64_t end = std::min<std::uint64_t>(steps, (c + 1) * kChunk);
        for (std::uint64_t s = c * kChunk; s < end; ++s) {
            CounterRng rng(trial_seed(seed, s));
            std::vector<double> w(k);
            double total = 0.0;
            for (double& x : w) {
                x = -std::log(rng.uniform_open());
                total += x;
            }
            for (double& x : w) x /= total;
            const GameState start(w);
            ticks = start.ticks();
            active = active_list(ticks);
            Board{ticks, active}.step(dist, rng, rules);
            for (std::size_t j = 0; j < k; ++j) {
                const double inc = static_cast<double>(ticks[j] - start.ticks()[j]) * kTick;
                sums[c * k + j] += inc;
                squares[c * k + j] += inc * inc;
            }
        }
    });
    MartingaleReport rep;
    rep.mean_increment.assign(k, 0.0);
    rep.standard_error.assign(k, 0.0);
    const auto n = static_cast<double>(steps);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        double sq = 0.0;
        for (std::uint64_t c = 0; c < chunks; ++c) {
            s += sums[c * k + j];
            sq += squares[c * k + j];
        }
        const double mean = s / n;
        const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
        rep.mean_increment[j] = mean;
        rep.standard_error[j] = std::sqrt(var / n);
        if (std::abs(mean) > 3.0 * rep.standard_error[j]) rep.passed = false;
    }
    return rep;
}

}  // namespace collapse
