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

#include "collapse/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "parallel.hpp"

namespace collapse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t pair_count(std::size_t k) { return k * (k - 1) / 2; }

// Branch-vector engine for dephasing-free scenarios.
class BranchEngine {
public:
    BranchEngine(const Scenario& s, const DetectorPhases& ph) : model_(s), st_(model_.initial(&ph)) {}
    void step() { model_.step(st_); }
    const std::vector<double>& weights() const { return st_.weights; }
    double time() const { return st_.time; }
    void asymmetries(std::vector<double>& out) const {
        model_.pair_asymmetries(st_, out);
    }
    double purity(std::size_t d) const { return model_.detector_purity(d, st_); }

private:
    BranchModel model_;
    BranchState st_;
};

// Block engine; needed once dephasing makes blocks mixed.
class BlockEngine {
public:
    BlockEngine(const Scenario& s, const DetectorPhases& ph) : model_(s), st_(model_.initial(&ph)) {}
    void step() { st_ = model_.step(st_); }
    const std::vector<double>& weights() const { return st_.weights; }
    double time() const { return st_.time; }
    void asymmetries(std::vector<double>& out) const {
        const RateTable t = model_.rates(st_);
        const std::size_t k = st_.n_outcomes;
        out.clear();
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) {
                double acc = 0.0;
                for (std::size_t d = 0; d < st_.n_detectors; ++d) acc += t(d, a, b) - t(d, b, a);
                out.push_back(acc);
            }
        }
    }
    double purity(std::size_t d) const { return block_purity(st_, d); }

    static double block_purity(const FactoredState& st, std::size_t d) {
        double acc = 0.0;
        for (std::size_t k = 0; k < st.n_outcomes; ++k)
            for (std::size_t l = 0; l < st.n_outcomes; ++l)
                acc += st.weights[k] * st.weights[l] * (st.block(d, k, k) * st.block(d, l, l)).trace().real();
        return acc;
    }

private:
    FactoredModel model_;
    FactoredState st_;
};

std::uint64_t step_count(const Scenario& s) {
    return static_cast<std::uint64_t>(std::ceil(s.t_max / s.dt - 1e-9));
}

template <class Engine, class OnStep>
std::optional<std::size_t> drive(Engine& e, const Scenario& s, OnStep&& on_step) {
    const std::uint64_t n = step_count(s);
    for (std::uint64_t i = 0;; ++i) {
        on_step(i, e);
        if (auto w = detect_collapse(e.weights(), s.collapse_epsilon)) return w;
        if (i >= n) return std::nullopt;
        e.step();
    }
}

template <class Engine>
TrialResult trial_with(const Scenario& s, const DetectorPhases& ph, std::uint64_t thin, Trajectory* traj) {
    Engine e(s, ph);
    const std::size_t k = s.n_outcomes();
    const std::size_t d_count = s.n_detectors();
    std::vector<double> sum(pair_count(k), 0.0);
    std::vector<double> cur;
    std::uint64_t samples = 0;
    if (traj) {
        traj->n_outcomes = k;
        traj->n_detectors = d_count;
        traj->rows.clear();
    }
    auto record = [&](const Engine& en) {
        std::vector<double> row{en.time()};
        row.insert(row.end(), en.weights().begin(), en.weights().end());
        for (std::size_t d = 0; d < d_count; ++d) row.push_back(en.purity(d));
        traj->rows.push_back(std::move(row));
    };
    bool any_recorded = false;
    TrialResult r;
    r.winner = drive(e, s, [&](std::uint64_t i, const Engine& en) {
        en.asymmetries(cur);
        for (std::size_t p = 0; p < cur.size(); ++p) sum[p] += cur[p];
        ++samples;
        if (traj && thin > 0 && i % thin == 0) {
            record(en);
            any_recorded = true;
        }
    });
    // the final state always closes the trajectory
    if (traj && thin > 0 && (!any_recorded || traj->rows.back()[0] != e.time())) record(e);
    r.time = e.time();
    r.final_weights = e.weights();
    r.mean_asymmetry.resize(sum.size());
    for (std::size_t p = 0; p < sum.size(); ++p) r.mean_asymmetry[p] = sum[p] / static_cast<double>(samples);
    return r;
}

bool needs_blocks(const Scenario& s) {
    return std::any_of(s.detectors.begin(), s.detectors.end(),
                       [](const DetectorSpec& d) { return d.dephasing_rate > 0.0; });
}

void fnv(std::uint64_t& h, const std::string& text) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool same_detector(const DetectorSpec& a, const DetectorSpec& b) {
    return a.basis.n_levels() == b.basis.n_levels() && a.omega == b.omega && a.anharmonicity == b.anharmonicity &&
           a.alpha_active == b.alpha_active && a.alpha_quiet == b.alpha_quiet && a.dephasing_rate == b.dephasing_rate &&
           a.model == b.model;
}

std::vector<double> local_marginal(const std::vector<double>& p, const std::vector<std::size_t>& label) {
    std::size_t labels = 0;
    for (std::size_t l : label) labels = std::max(labels, l + 1);
    std::vector<double> m(labels, 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) m[label[k]] += p[k];
    return m;
}

// Fills max_deviation / pooled_sigma / passed from marginals and decided counts.
void finish_comparison(NoSignalingReport& rep, double sigmas) {
    const std::size_t labels = rep.marginals.front().size();
    double worst_ratio = 0.0;
    rep.passed = true;
    for (std::size_t i = 1; i < rep.marginals.size(); ++i) {
        const auto n0 = static_cast<double>(rep.decided[0]);
        const auto ni = static_cast<double>(rep.decided[i]);
        for (std::size_t l = 0; l < labels; ++l) {
            const double pooled = (rep.marginals[0][l] * n0 + rep.marginals[i][l] * ni) / (n0 + ni);
            const double sigma = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n0 + 1.0 / ni));
            const double dev = std::abs(rep.marginals[i][l] - rep.marginals[0][l]);
            if (dev > sigmas * sigma) rep.passed = false;
            const double ratio = sigma > 0.0 ? dev / sigma : (dev > 0.0 ? INFINITY : 0.0);
            if (dev > rep.max_deviation || (dev == rep.max_deviation && ratio > worst_ratio)) {
                rep.max_deviation = dev;
                rep.pooled_sigma = sigma;
                worst_ratio = ratio;
            }
        }
    }
}

}  // namespace

std::string scenario_digest(const Scenario& s) {
    std::string text = "K=" + std::to_string(s.n_outcomes()) + ";D=" + std::to_string(s.n_detectors()) + ";c=";
    for (const cplx& c : s.amplitudes) text += num(c.real()) + "," + num(c.imag()) + ";";
    for (const DetectorSpec& d : s.detectors) {
        text += "det:" + std::to_string(d.basis.n_levels()) + "," + num(d.omega) + "," + num(d.anharmonicity) + "," +
                num(d.alpha_active.real()) + "," + num(d.alpha_active.imag()) + "," + num(d.alpha_quiet.real()) + "," +
                num(d.alpha_quiet.imag()) + "," + num(d.dephasing_rate) + "," +
                (d.model == DetectorModel::kerr ? "kerr" : "inverted") + ";";
    }
    text += "act:";
    for (const auto& row : s.activation)
        for (bool b : row) text += b ? '1' : '0';
    text += ";zeta=" + num(s.zeta) + ";dt=" + num(s.dt) + ";tmax=" + num(s.t_max) + ";eps=" + num(s.collapse_epsilon);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    fnv(h, text);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

DetectorPhases trial_phases(std::size_t n_detectors, std::uint64_t seed) {
    CounterRng rng(seed);
    DetectorPhases ph;
    ph.active.resize(n_detectors);
    ph.quiet.resize(n_detectors);
    for (std::size_t d = 0; d < n_detectors; ++d) {
        ph.active[d] = kTwoPi * rng.uniform();
        ph.quiet[d] = kTwoPi * rng.uniform();
    }
    return ph;
}

TrialResult run_trial(const Scenario& scenario, const DetectorPhases& phases, std::uint64_t thin, Trajectory* traj) {
    if (needs_blocks(scenario)) return trial_with<BlockEngine>(scenario, phases, thin, traj);
    return trial_with<BranchEngine>(scenario, phases, thin, traj);
}

RunReport run_ensemble(const Scenario& scenario, std::uint64_t trials, std::uint64_t master_seed,
                       const EnsembleOptions& opts) {
    scenario.validate();
    if (trials < 1) throw StructuralError("trials must be at least 1");
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t k = scenario.n_outcomes();
    std::vector<TrialResult> results(trials);
    detail::parallel_for(static_cast<std::size_t>(trials), opts.threads, [&](std::size_t t) {
        const DetectorPhases ph = trial_phases(scenario.n_detectors(), trial_seed(master_seed, t));
        if (opts.thin > 0 && opts.trajectory_sink) {
            Trajectory traj;
            results[t] = run_trial(scenario, ph, opts.thin, &traj);
            opts.trajectory_sink(t, traj);
        } else {
            results[t] = run_trial(scenario, ph);
        }
    });

    RunReport rep;
    rep.scenario_digest = scenario_digest(scenario);
    rep.trials = trials;
    rep.master_seed = master_seed;
    rep.counts.assign(k, 0);
    rep.expected = scenario.born_weights();
    rep.mean_final_weights.assign(k, 0.0);
    const std::size_t pairs = pair_count(k);
    std::vector<double> asym_sum(pairs, 0.0);
    std::vector<double> asym_sq(pairs, 0.0);
    double time_sum = 0.0;
    for (const TrialResult& r : results) {
        if (r.winner) {
            ++rep.counts[*r.winner];
            time_sum += r.time;
        } else {
            ++rep.undecided;
        }
        for (std::size_t j = 0; j < k; ++j) rep.mean_final_weights[j] += r.final_weights[j];
        for (std::size_t p = 0; p < pairs; ++p) {
            asym_sum[p] += r.mean_asymmetry[p];
            asym_sq[p] += r.mean_asymmetry[p] * r.mean_asymmetry[p];
        }
    }
    const auto n = static_cast<double>(trials);
    for (double& w : rep.mean_final_weights) w /= n;
    const std::uint64_t decided = trials - rep.undecided;
    rep.undecided_fraction = static_cast<double>(rep.undecided) / n;
    rep.frequencies.assign(k, 0.0);
    if (decided > 0) {
        for (std::size_t j = 0; j < k; ++j)
            rep.frequencies[j] = static_cast<double>(rep.counts[j]) / static_cast<double>(decided);
        rep.mean_collapse_time = time_sum / static_cast<double>(decided);
    }
    std::size_t p = 0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b, ++p) {
            PairDrift d;
            d.k = a;
            d.m = b;
            d.mean = asym_sum[p] / n;
            const double var = trials > 1 ? std::max(0.0, (asym_sq[p] - n * d.mean * d.mean) / (n - 1.0)) : 0.0;
            d.se = std::sqrt(var / n);
            rep.drift_stats.push_back(d);
        }
    }
    if (rep.undecided_fraction > 0.5)
        rep.warnings.push_back("more than half of the trials did not collapse before t_max");
    if (decided >= 100) {
        const BornTest bt = born_test(rep.counts, rep.expected);
        rep.born_tested = true;
        rep.chi_square = bt.chi_square;
        rep.degrees_of_freedom = bt.degrees_of_freedom;
        rep.p_value = bt.p_value;
        rep.born_pass = bt.passed;
        rep.warnings.insert(rep.warnings.end(), bt.warnings.begin(), bt.warnings.end());
    } else {
        rep.warnings.push_back("fewer than 100 decided trials; chi-square not computed");
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

BornTest born_test(const std::vector<std::uint64_t>& counts, const std::vector<double>& expected, double alpha) {
    if (counts.size() != expected.size() || counts.empty()) throw StructuralError("counts and expected differ in size");
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    if (total < 100) throw StructuralError("chi-square needs at least 100 decided trials");
    const auto n = static_cast<double>(total);

    BornTest bt;
    struct Bin {
        double observed, expected;
    };
    std::vector<Bin> bins;
    Bin pooled{0.0, 0.0};
    bool pooled_any = false;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const Bin b{static_cast<double>(counts[k]), n * expected[k]};
        if (b.expected == 0.0) {
            if (b.observed > 0.0) {
                bt.chi_square = INFINITY;
                bt.warnings.push_back("outcome " + std::to_string(k) + " occurred with zero expected probability");
            }
            continue;
        }
        if (b.expected < 5.0) {
            pooled.observed += b.observed;
            pooled.expected += b.expected;
            pooled_any = true;
            bt.warnings.push_back("outcome " + std::to_string(k) + " expects fewer than 5 counts; bin merged");
        } else {
            bins.push_back(b);
        }
    }
    if (pooled_any) {
        if (pooled.expected < 5.0 && !bins.empty()) {
            auto smallest = std::min_element(bins.begin(), bins.end(),
                                             [](const Bin& a, const Bin& b) { return a.expected < b.expected; });
            smallest->observed += pooled.observed;
            smallest->expected += pooled.expected;
        } else {
            bins.push_back(pooled);
        }
    }
    if (std::isinf(bt.chi_square)) {
        bt.degrees_of_freedom = bins.size() > 0 ? bins.size() - 1 : 0;
        bt.p_value = 0.0;
        bt.passed = false;
        return bt;
    }
    for (const Bin& b : bins) bt.chi_square += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
    if (bins.size() < 2) {
        bt.degrees_of_freedom = 0;
        bt.p_value = 1.0;
        bt.passed = true;
        return bt;
    }
    bt.degrees_of_freedom = bins.size() - 1;
    const boost::math::chi_squared dist(static_cast<double>(bt.degrees_of_freedom));
    bt.p_value = boost::math::cdf(boost::math::complement(dist, bt.chi_square));
    bt.passed = bt.p_value >= alpha;
    return bt;
}

BornTest born_test(const RunReport& report, const std::vector<double>& expected, double alpha) {
    return born_test(report.counts, expected, alpha);
}

DriftDiagnostic drift_diagnostic(const Scenario& scenario, double window, std::uint64_t seed) {
    scenario.validate();
    if (!(window > 0.0)) throw StructuralError("drift window must be positive");
    const auto per_window = static_cast<std::uint64_t>(std::llround(window / scenario.dt));
    if (per_window < 1) throw StructuralError("drift window shorter than one step");
    if (2 * per_window > step_count(scenario)) throw StructuralError("t_max must hold at least two drift windows");
    const std::size_t k = scenario.n_outcomes();
    const std::size_t pairs = pair_count(k);
    const DetectorPhases ph = trial_phases(scenario.n_detectors(), seed);

    std::vector<std::vector<double>> blocks(pairs);
    std::vector<double> acc(pairs, 0.0);
    std::vector<double> cur;
    std::uint64_t in_window = 0;
    auto body = [&](std::uint64_t, const auto& en) {
        en.asymmetries(cur);
        for (std::size_t p = 0; p < pairs; ++p) acc[p] += cur[p];
        if (++in_window == per_window) {
            for (std::size_t p = 0; p < pairs; ++p) {
                blocks[p].push_back(acc[p] / static_cast<double>(per_window));
                acc[p] = 0.0;
            }
            in_window = 0;
        }
    };
    if (needs_blocks(scenario)) {
        BlockEngine e(scenario, ph);
        drive(e, scenario, body);
    } else {
        BranchEngine e(scenario, ph);
        drive(e, scenario, body);
    }

    DriftDiagnostic out;
    out.window = window;
    out.windows = blocks.empty() ? 0 : blocks.front().size();
    if (out.windows < 2) {
        out.fair = false;
        out.verdict = "inconclusive";
        return out;
    }
    const auto nw = static_cast<double>(out.windows);
    std::size_t p = 0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b, ++p) {
            PairDrift d;
            d.k = a;
            d.m = b;
            double s = 0.0;
            for (double v : blocks[p]) s += v;
            d.mean = s / nw;
            double sq = 0.0;
            for (double v : blocks[p]) sq += (v - d.mean) * (v - d.mean);
            d.se = std::sqrt(sq / (nw - 1.0) / nw);
            if (std::abs(d.mean) > 3.0 * d.se) out.fair = false;
            out.pairs.push_back(d);
        }
    }
    out.verdict = out.fair ? "fair" : "unfair";
    return out;
}

void check_remote_variants(const Scenario& base, const std::vector<Scenario>& variants, const SiteSplit& split) {
    if (split.local_detector.size() != base.n_detectors() || split.local_outcome.size() != base.n_outcomes())
        throw InvalidComparisonError("site split does not match the scenario");
    const std::vector<double> base_marginal = local_marginal(base.born_weights(), split.local_outcome);
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const Scenario& v = variants[i];
        const std::string tag = "variant " + std::to_string(i) + ": ";
        if (v.n_outcomes() != base.n_outcomes() || v.n_detectors() != base.n_detectors())
            throw InvalidComparisonError(tag + "outcome or detector count differs");
        if (v.activation != base.activation) throw InvalidComparisonError(tag + "activation table differs");
        if (v.zeta != base.zeta || v.dt != base.dt || v.t_max != base.t_max || v.collapse_epsilon != base.collapse_epsilon)
            throw InvalidComparisonError(tag + "coupling or integration parameters differ");
        for (std::size_t d = 0; d < base.n_detectors(); ++d) {
            if (split.local_detector[d] && !same_detector(base.detectors[d], v.detectors[d]))
                throw InvalidComparisonError(tag + "local detector " + std::to_string(d) + " changed");
        }
        const std::vector<double> m = local_marginal(v.born_weights(), split.local_outcome);
        for (std::size_t l = 0; l < m.size(); ++l) {
            if (std::abs(m[l] - base_marginal[l]) > 1e-12)
                throw InvalidComparisonError(tag + "amplitudes change the local marginal");
        }
    }
}

NoSignalingReport nosignaling_test(const Scenario& base, const std::vector<Scenario>& variants, const SiteSplit& split,
                                   std::uint64_t trials, std::uint64_t seed, const EnsembleOptions& opts) {
    check_remote_variants(base, variants, split);
    if (variants.empty()) throw InvalidComparisonError("need at least one remote variant");
    NoSignalingReport rep;
    rep.expected_marginal = local_marginal(base.born_weights(), split.local_outcome);
    EnsembleOptions quiet = opts;
    quiet.thin = 0;
    quiet.trajectory_sink = nullptr;
    for (std::size_t i = 0; i <= variants.size(); ++i) {
        const Scenario& s = i == 0 ? base : variants[i - 1];
        RunReport r = run_ensemble(s, trials, trial_seed(seed, i), quiet);
        rep.decided.push_back(r.trials - r.undecided);
        rep.marginals.push_back(local_marginal(r.frequencies, split.local_outcome));
        rep.runs.push_back(std::move(r));
    }
    if (std::any_of(rep.decided.begin(), rep.decided.end(), [](std::uint64_t d) { return d == 0; })) {
        rep.passed = false;
        return rep;
    }
    finish_comparison(rep, 4.0);
    return rep;
}

NoSignalingReport nosignaling_ruin(const std::vector<double>& w0, const StepDistribution& dist,
                                   const std::vector<GameRules>& settings, const std::vector<std::size_t>& local_outcome,
                                   std::uint64_t trials, std::uint64_t seed, unsigned threads) {
    if (settings.size() < 2) throw InvalidComparisonError("need at least two remote settings");
    if (local_outcome.size() != w0.size()) throw InvalidComparisonError("site split does not match the game");
    NoSignalingReport rep;
    rep.expected_marginal = local_marginal(w0, local_outcome);
    MonteCarloOptions mc;
    mc.threads = threads;
    for (std::size_t i = 0; i < settings.size(); ++i) {
        if (settings[i].sign_bias != settings[0].sign_bias)
            throw InvalidComparisonError("remote settings may only change the pair scales");
        const ExitEstimate e = exit_probability_mc(w0, dist, trials, trial_seed(seed, i), settings[i], mc);
        rep.decided.push_back(e.trials - e.undecided);
        rep.marginals.push_back(local_marginal(e.frequencies, local_outcome));
    }
    finish_comparison(rep, 4.0);
    return rep;
}

Scenario chsh_scenario(double theta_a, double theta_b, const DetectorSpec& a_detector, const DetectorSpec& b_detector) {
    const double half = 0.5 * (theta_a - theta_b);
    const double r = 1.0 / std::sqrt(2.0);
    Scenario s;
    s.amplitudes = {r * std::cos(half), r * std::sin(half), -r * std::sin(half), r * std::cos(half)};
    s.detectors = {a_detector, a_detector, b_detector, b_detector};
    s.activation = {
        {true, false, true, false},
        {true, false, false, true},
        {false, true, true, false},
        {false, true, false, true},
    };
    return s;
}

SiteSplit chsh_split() { return SiteSplit{{true, true, false, false}, {0, 0, 1, 1}}; }

ZetaEstimate estimate_zeta(double charge_carriers, double bias_voltage, double duration) {
    auto check = [](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be a positive finite number");
    };
    check(charge_carriers, "charge_carriers");
    check(bias_voltage, "bias_voltage");
    check(duration, "duration");
    constexpr double kElementaryCharge = 1.602176634e-19;  // C
    constexpr double kHbar = 1.054571817e-34;              // J s
    ZetaEstimate z;
    z.action = charge_carriers * kElementaryCharge * bias_voltage * duration / kHbar;
    z.zeta = 1.0 / (z.action * duration);
    z.note = "zeta = 1/(action * t) is a reconstruction; only the inputs and the resulting order of magnitude are given";
    return z;
}

FullComparison compare_full(const Scenario& scenario, const DetectorPhases& phases, std::uint64_t thin) {
    scenario.validate();
    if (thin < 1) thin = 1;
    const FactoredModel fm(scenario);
    const FullModel full(scenario);
    FactoredState f = fm.initial(&phases);
    JointState j = embed(f, scenario);
    const std::size_t k = scenario.n_outcomes();
    const std::size_t d_count = scenario.n_detectors();

    FullComparison out;
    out.header.push_back("t");
    for (std::size_t i = 1; i <= k; ++i) out.header.push_back("w_" + std::to_string(i));
    for (std::size_t d = 1; d <= d_count; ++d) out.header.push_back("purity_" + std::to_string(d));
    for (std::size_t i = 1; i <= k; ++i) out.header.push_back("full_w_" + std::to_string(i));
    out.header.push_back("deviation");

    const std::uint64_t n = step_count(scenario);
    for (std::uint64_t i = 0;; ++i) {
        const std::vector<double> wf = full.branch_weights(j.rho);
        double dev = 0.0;
        for (std::size_t a = 0; a < k; ++a) dev = std::max(dev, std::abs(wf[a] - f.weights[a]));
        out.max_deviation = std::max(out.max_deviation, dev);
        if (i % thin == 0 || i == n) {
            std::vector<double> row{f.time};
            row.insert(row.end(), f.weights.begin(), f.weights.end());
            for (std::size_t d = 0; d < d_count; ++d) row.push_back(BlockEngine::block_purity(f, d));
            row.insert(row.end(), wf.begin(), wf.end());
            row.push_back(dev);
            out.rows.push_back(std::move(row));
        }
        if (i >= n) break;
        f = fm.step(f);
        j = full.step(j);
    }
    return out;
}

}  // namespace collapse
