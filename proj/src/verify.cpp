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

#include "collapse/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace collapse {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

CheckResult make_check(std::string name, double value, double tolerance, std::string detail = {}) {
    CheckResult c;
    c.name = std::move(name);
    c.value = value;
    c.tolerance = tolerance;
    c.passed = std::isfinite(value) && value <= tolerance;
    c.detail = std::move(detail);
    return c;
}

CheckResult failed_check(std::string name, double tolerance, std::string detail) {
    CheckResult c;
    c.name = std::move(name);
    c.tolerance = tolerance;
    c.passed = false;
    c.detail = std::move(detail);
    return c;
}


void track_blocks(const FactoredState& st, ConservationStats& c) {
    double sum = 0.0;
    for (double w : st.weights) sum += w;
    c.weight_sum = std::max(c.weight_sum, std::abs(sum - 1.0));
    c.block_trace = std::max(c.block_trace, st.last_trace_deficit);
    for (std::size_t d = 0; d < st.n_detectors; ++d) {
        for (std::size_t k = 0; k < st.n_outcomes; ++k) {
            for (std::size_t l = k; l < st.n_outcomes; ++l)
                c.hermiticity = std::max(c.hermiticity, max_abs(Matrix(st.block(d, k, l) - st.block(d, l, k).adjoint())));
        }
    }
}

std::vector<CheckResult> conservation_checks(const std::string& prefix, const ConservationStats& c, bool full) {
    // factored: weight sum, block hermiticity, block trace; full: trace, hermiticity, purity
    struct Item {
        std::string name;
        double value;
        double tolerance;
    };
    std::vector<Item> items;
    if (full) {
        items = {{"_trace", c.weight_sum, 1e-8}, {"_hermiticity", c.hermiticity, 1e-8}, {"_purity", c.purity_drift, 1e-6}};
    } else {
        items = {{"_weight_sum", c.weight_sum, 1e-8},
                 {"_hermiticity", c.hermiticity, 1e-8},
                 {"_block_trace", c.block_trace, 1e-8}};
    }
    std::vector<CheckResult> out;
    for (const Item& it : items) {
        if (c.blowup) {
            out.push_back(failed_check(prefix + it.name, it.tolerance, "integration blew up: " + *c.blowup));
        } else {
            out.push_back(make_check(prefix + it.name, it.value, it.tolerance, "over " + std::to_string(c.steps) + " steps"));
        }
    }
    return out;
}

std::vector<std::vector<double>> random_diffusion(std::size_t k, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<std::vector<double>> d(k, std::vector<double>(k, 0.0));
    for (std::size_t m = 0; m < k; ++m) {
        for (std::size_t n = m + 1; n < k; ++n) {
            d[m][n] = 0.1 + 1.9 * rng.uniform();
            d[n][m] = d[m][n];
        }
    }
    return d;
}

}  // namespace

ConservationStats conservation_factored(const Scenario& scenario, std::uint64_t steps, const DetectorPhases& phases) {
    ConservationStats c;
    const FactoredModel model(scenario);
    FactoredState st = model.initial(&phases);
    track_blocks(st, c);
    try {
        for (; c.steps < steps; ++c.steps) {
            st = model.step(st);
            track_blocks(st, c);
        }
    } catch (const BlowupError& e) {
        c.blowup = e.what();
    }
    return c;
}

ConservationStats conservation_full(const Scenario& scenario, std::uint64_t steps, const DetectorPhases& phases) {
    ConservationStats c;
    const FullModel model(scenario);
    JointState st = embed(build_initial(scenario, &phases), scenario);
    const double purity0 = (st.rho.matrix() * st.rho.matrix()).trace().real();
    auto track = [&] {
        const Matrix& r = st.rho.matrix();
        const double tr = r.trace().real();
        c.weight_sum = std::max(c.weight_sum, std::abs(tr - 1.0));
        c.hermiticity = std::max(c.hermiticity, max_abs(Matrix(r - r.adjoint())));
        c.purity_drift = std::max(c.purity_drift, std::abs((r * r).trace().real() - purity0));
        if (!std::isfinite(c.purity_drift)) throw BlowupError(st.time, "non-finite purity");
    };
    try {
        track();
        for (; c.steps < steps; ++c.steps) {
            st = model.step(st);
            track();
        }
    } catch (const BlowupError& e) {
        c.blowup = e.what();
    }
    return c;
}

Scenario oracle_scenario(double zeta, double dt) {
    Scenario s;
    s.amplitudes = {std::sqrt(0.6), cplx(0.0, std::sqrt(0.4))};
    DetectorSpec d;
    d.basis = ModeBasis(4);
    d.alpha_active = {0.8, 0.3};
    d.alpha_quiet = {-0.4, 0.5};
    s.detectors = {d};
    s.activation = {{true}, {false}};
    s.zeta = zeta;
    s.dt = dt;
    s.t_max = 1.0;
    return s;
}

VerifyReport run_verify(const Config& cfg) {
    cfg.validate();
    VerifyReport rep;
    const std::uint64_t seed = cfg.experiment.master_seed;
    const std::vector<double> w0 = cfg.ruin_start();
    const std::size_t k = w0.size();
    const GameRules& rules = cfg.ruin.rules;

    const ProbabilityMap linear = [](const std::vector<double>& w) { return w; };
    const auto points = sample_interior_points(k, cfg.verify.points, trial_seed(seed, 1));
    for (StepKind kind : {StepKind::fixed, StepKind::uniform, StepKind::exponential, StepKind::dynamics_coupled}) {
        StepDistribution dist = cfg.ruin.distribution;
        dist.kind = kind;
        const double r = verify_difference_equation(linear, dist, points, rules);
        rep.checks.push_back(make_check("difference_equation_" + to_string(kind), r, 1e-12,
                                        std::to_string(points.size()) + " interior points, p = w"));
    }
    rep.checks.push_back(make_check("boundary_values", boundary_residual(linear, k), 1e-15, "p(e_j) = e_j"));

    const auto grid = simplex_grid(k, cfg.verify.grid_resolution);
    const double bfp = bfp_residual(linear, random_diffusion(k, trial_seed(seed, 2)), grid);
    rep.checks.push_back(make_check("diffusion_residual", bfp, 1e-10, std::to_string(grid.size()) + " grid points"));

    const Scenario oracle = oracle_scenario(cfg.scenario.zeta, cfg.scenario.dt);
    try {
        const FullComparison fc = compare_full(oracle, trial_phases(1, trial_seed(seed, 3)), 1u << 30);
        rep.checks.push_back(make_check("factored_vs_full", fc.max_deviation, 1e-4, "max |w_k - tr<k|rho|k>| on [0, 1]"));
    } catch (const BlowupError& e) {
        rep.checks.push_back(failed_check("factored_vs_full", 1e-4, std::string("integration blew up: ") + e.what()));
    }

    const ConservationStats fac = conservation_factored(
        cfg.scenario, cfg.verify.conservation_steps, trial_phases(cfg.scenario.n_detectors(), trial_seed(seed, 4)));
    for (CheckResult& c : conservation_checks("factored", fac, false)) rep.checks.push_back(std::move(c));
    const ConservationStats full =
        conservation_full(oracle, cfg.verify.conservation_steps, trial_phases(1, trial_seed(seed, 5)));
    for (CheckResult& c : conservation_checks("full", full, true)) rep.checks.push_back(std::move(c));

    MonteCarloOptions mc;
    mc.max_steps = cfg.ruin.max_steps;
    mc.threads = cfg.experiment.threads;
    const ExitEstimate est =
        exit_probability_mc(w0, cfg.ruin.distribution, cfg.verify.born_trials, trial_seed(seed, 6), rules, mc);
    const std::uint64_t decided = est.trials - est.undecided;
    if (decided >= 100) {
        const BornTest bt = born_test(est.counts, w0);
        CheckResult c;
        c.name = "ruin_born";
        c.value = bt.p_value;
        c.tolerance = 0.01;
        c.passed = bt.passed;
        c.detail = "chi-square " + fmt(bt.chi_square) + " on " + std::to_string(bt.degrees_of_freedom) +
                   " df, p-value must be >= 0.01";
        rep.checks.push_back(std::move(c));
    } else {
        rep.checks.push_back(failed_check("ruin_born", 0.01, "fewer than 100 games finished"));
    }

    const MartingaleReport mart =
        martingale_test(k, cfg.ruin.distribution, cfg.verify.martingale_steps, trial_seed(seed, 7), rules, mc.threads);
    double worst = 0.0;
    for (std::size_t i = 0; i < mart.mean_increment.size(); ++i) {
        const double se = mart.standard_error[i];
        const double z = se > 0.0 ? std::abs(mart.mean_increment[i]) / se : (mart.mean_increment[i] == 0.0 ? 0.0 : INFINITY);
        worst = std::max(worst, z);
    }
    CheckResult mc_check = make_check("martingale", worst, 3.0, "max |mean increment| / SE over players");
    mc_check.passed = mart.passed;
    rep.checks.push_back(std::move(mc_check));

    rep.passed = std::all_of(rep.checks.begin(), rep.checks.end(), [](const CheckResult& c) { return c.passed; });
    return rep;
}

}  // namespace collapse
