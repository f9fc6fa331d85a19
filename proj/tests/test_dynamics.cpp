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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "collapse/dynamics.hpp"
#include "test_util.hpp"

using namespace collapse;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Factored state with the given rank-one blocks on a single detector.
FactoredState manual_state(const std::vector<Vector>& phi, std::vector<double> w) {
    FactoredState st;
    st.n_outcomes = phi.size();
    st.n_detectors = 1;
    st.weights = std::move(w);
    st.local_weights.assign(phi.size(), 1.0);
    for (const Vector& a : phi)
        for (const Vector& b : phi) st.blocks.push_back(a * b.adjoint());
    return st;
}

Scenario one_detector(int levels, double zeta, std::size_t outcomes) {
    Scenario s;
    s.amplitudes.assign(outcomes, 1.0 / std::sqrt(static_cast<double>(outcomes)));
    DetectorSpec d;
    d.basis = ModeBasis(levels);
    s.detectors = {d};
    s.activation.assign(outcomes, {true});
    s.zeta = zeta;
    return s;
}

}  // namespace

TEST_CASE("scenario validation") {
    Scenario s = testutil::sg_scenario(0.7, 6, 0.1);
    CHECK_NOTHROW(s.validate());

    Scenario bad = s;
    bad.amplitudes[0] *= 1.001;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = s;
    bad.activation[1] = {true, false};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    // one all-quiet outcome is still a distinct reading
    bad = s;
    bad.activation[0] = {false, false};
    CHECK_NOTHROW(bad.validate());
    bad.activation[1] = {false, false};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = s;
    bad.detectors[1].alpha_quiet = bad.detectors[1].alpha_active;
    try {
        bad.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "/scenario/detectors/1/alpha_active");
    }

    bad = s;
    bad.collapse_epsilon = 0.01;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = s;
    bad.detectors[0].dephasing_rate = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("build_initial weights and normalized blocks") {
    Scenario s = testutil::sg_scenario(0.5, 6, 0.1);
    FactoredState st = build_initial(s);
    CHECK(std::abs(st.weights[0] - 0.5) < 1e-15);
    CHECK(std::abs(st.weights[1] - 0.5) < 1e-15);

    s = testutil::sg_scenario(0.7, 6, 0.1);
    st = build_initial(s);
    CHECK(std::abs(st.weights[0] - 0.7) < 1e-15);
    CHECK(std::abs(st.weights[1] - 0.3) < 1e-15);
    for (std::size_t d = 0; d < 2; ++d) {
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(std::abs(st.block(d, k, k).trace() - 1.0) < 1e-14);
            CHECK(st.local_weight(d, k) == 1.0);
        }
    }
}

TEST_CASE("effective Hamiltonian") {
    SUBCASE("linear limit") {
        Scenario s = testutil::small_scenario(4, 0.0);
        FullModel full(s);
        CounterRng rng(1);
        const Operator rho(testutil::random_density(rng, static_cast<int>(full.dim())));
        CHECK(max_abs_diff(full.effective_hamiltonian(rho).matrix(), full.free_hamiltonian().matrix()) == 0.0);
    }
    SUBCASE("Hermitian for random Hermitian rho") {
        Scenario s = testutil::sg_scenario(0.7, 3, 0.3);
        FullModel full(s);
        CounterRng rng(2);
        for (int rep = 0; rep < 10; ++rep) {
            const Operator rho(testutil::random_density(rng, static_cast<int>(full.dim())));
            CHECK(full.effective_hamiltonian(rho).hermiticity_residual() <= 1e-12);
        }
    }
    SUBCASE("hand-expanded N=2 oracle") {
        // rho = |0><0|_spin (x) |0><0|_det. With x|0> = (0, 1/sqrt2) and
        // <0|p = (0, -i/sqrt2): x rho p - p rho x = -i |1><1| on the
        // detector, so the nonlinear term is zeta |0><0| (x) |1><1|.
        const double zeta = 0.37;
        Scenario s = one_detector(2, zeta, 2);
        s.activation = {{true}, {false}};
        FullModel full(s);
        Matrix rho = Matrix::Zero(4, 4);
        rho(0, 0) = 1.0;
        const Matrix dh = full.effective_hamiltonian(Operator(rho)).matrix() - full.free_hamiltonian().matrix();
        Matrix expect = Matrix::Zero(4, 4);
        expect(1, 1) = zeta;
        CHECK(max_abs_diff(dh, expect) < 1e-15);
    }
    SUBCASE("dimension mismatch") {
        FullModel full(testutil::small_scenario());
        CHECK_THROWS_AS(full.effective_hamiltonian(Operator::identity(3)), StructuralError);
    }
}

TEST_CASE("full right-hand side") {
    SUBCASE("stationary eigenprojector in the linear limit") {
        Scenario s = testutil::small_scenario(4, 0.0);
        FullModel full(s);
        Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(full.dim()), static_cast<Eigen::Index>(full.dim()));
        rho(2, 2) = 1.0;  // H0 is diagonal for the Kerr model
        CHECK(max_abs(full.rhs({Operator(rho), 0.0}).matrix()) == 0.0);
    }
    SUBCASE("traceless and Hermitian-preserving") {
        Scenario s = testutil::sg_scenario(0.4, 3, 0.2);
        FullModel full(s);
        CounterRng rng(8);
        for (int rep = 0; rep < 10; ++rep) {
            const Operator rho(testutil::random_density(rng, static_cast<int>(full.dim())));
            const Operator r = full.rhs({rho, 0.0});
            CHECK(std::abs(r.trace()) <= 1e-12);
            CHECK((rho + r * 1e-3).hermiticity_residual() <= 1e-12);
        }
    }
}

TEST_CASE("full step") {
    SUBCASE("populations frozen for diagonal linear evolution") {
        Scenario s = testutil::small_scenario(4, 0.0);
        FullModel full(s);
        JointState st = embed(build_initial(s), s);
        const Eigen::VectorXd pop0 = st.rho.matrix().diagonal().real();
        for (int i = 0; i < 1000; ++i) st = full.step(st, 0.01);
        const Eigen::VectorXd pop = st.rho.matrix().diagonal().real();
        CHECK((pop - pop0).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("zero step is the identity") {
        Scenario s = testutil::small_scenario();
        FullModel full(s);
        const JointState st = embed(build_initial(s), s);
        CHECK(max_abs_diff(full.step(st, 0.0).rho.matrix(), st.rho.matrix()) == 0.0);
    }
    SUBCASE("fourth-order convergence") {
        Scenario s = testutil::small_scenario(4, 0.3);
        FullModel full(s);
        const JointState st0 = embed(build_initial(s), s);
        auto run = [&](double dt) {
            JointState st = st0;
            const int n = static_cast<int>(std::lround(1.0 / dt));
            for (int i = 0; i < n; ++i) st = full.step(st, dt);
            return st.rho.matrix();
        };
        const Matrix a = run(0.1);
        const Matrix b = run(0.05);
        const Matrix c = run(0.025);
        const double order = std::log2(max_abs_diff(a, b) / max_abs_diff(b, c));
        MESSAGE("observed order " << order);
        CHECK(order >= 3.8);
    }
    SUBCASE("blowup is reported with its time") {
        Scenario s = testutil::small_scenario(4, 0.0);
        FullModel full(s);
        Matrix rho = Matrix::Zero(8, 8);
        rho(0, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(full.step({Operator(rho), 2.5}, 0.01), BlowupError);
    }
}

TEST_CASE("coupling tensor") {
    Scenario s = one_detector(6, 0.1, 2);
    FactoredModel model(s);
    SUBCASE("vacuum blocks have traceless coupling") {
        const Vector vac = coherent_state(ModeBasis(6), 0.0);
        const FactoredState st = manual_state({vac, vac}, {0.5, 0.5});
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t m = 0; m < 2; ++m)
                for (std::size_t l = 0; l < 2; ++l) CHECK(std::abs(model.coupling_tensor(0, k, m, l, st).trace()) < 1e-15);
    }
    SUBCASE("trace pairing of the four terms") {
        const ModeBasis b(6);
        const FactoredState st =
            manual_state({coherent_state(b, {0.7, -0.2}), coherent_state(b, {-0.3, 0.9})}, {0.3, 0.7});
        const Matrix& x = model.position(0).matrix();
        const Matrix& p = model.momentum(0).matrix();
        for (std::size_t k = 0; k < 2; ++k) {
            for (std::size_t m = 0; m < 2; ++m) {
                const cplx tr = model.coupling_tensor(0, k, m, k, st).trace();
                const cplx a = (x * st.block(0, k, m) * p * st.block(0, m, k)).trace();
                const cplx c = (p * st.block(0, k, m) * x * st.block(0, m, k)).trace();
                CHECK(std::abs(tr.imag()) < 1e-12);
                CHECK(std::abs(tr.real() - 2.0 * (a - c).real()) < 1e-12);
            }
        }
    }
    SUBCASE("diagonal triple on a pure block cancels") {
        const FactoredState st = manual_state({coherent_state(ModeBasis(6), {0.5, 0.8})}, {1.0});
        Scenario s1 = one_detector(6, 0.1, 1);
        FactoredModel m1(s1);
        CHECK(std::abs(m1.coupling_tensor(0, 0, 0, 0, st).trace()) < 1e-12);
    }
    CHECK_THROWS_AS(model.coupling_tensor(0, 2, 0, 0, model.initial()), StructuralError);
}

TEST_CASE("one-way rates") {
    const ModeBasis b2(2);
    Vector e0 = Vector::Zero(2);
    e0(0) = 1.0;
    Vector e1 = Vector::Zero(2);
    e1(1) = 1.0;

    SUBCASE("linear limit") {
        FactoredModel m(one_detector(2, 0.0, 2));
        const FactoredState st = manual_state({(e0 + e1) / std::sqrt(2.0), (e0 + cplx(0, 1) * e1) / std::sqrt(2.0)}, {0.5, 0.5});
        CHECK(m.oneway_rate(0, 0, 1, st) == 0.0);
    }
    SUBCASE("orthogonal Fock blocks do not pump") {
        FactoredModel m(one_detector(2, 1.0, 2));
        const FactoredState st = manual_state({e0, e1}, {0.5, 0.5});
        CHECK(std::abs(m.oneway_rate(0, 0, 1, st)) <= 1e-6);
        CHECK(std::abs(m.oneway_rate(0, 1, 0, st)) <= 1e-6);
    }
    SUBCASE("N=2 hand oracle") {
        // phi_k = (|0>+|1>)/sqrt2 gives <x> = 1/sqrt2, phi_m = (|0>+i|1>)/sqrt2
        // gives <p> = 1/sqrt2; tr(x R_km p R_mk) = <x>_k <p>_m = 1/2, so T_km = zeta.
        const double zeta = 0.25;
        FactoredModel m(one_detector(2, zeta, 2));
        const FactoredState st = manual_state({(e0 + e1) / std::sqrt(2.0), (e0 + cplx(0, 1) * e1) / std::sqrt(2.0)}, {0.5, 0.5});
        CHECK(std::abs(m.oneway_rate(0, 0, 1, st) - zeta) < 1e-15);
        // reverse direction: <x>_m = 0 so nothing flows back.
        CHECK(std::abs(m.oneway_rate(0, 1, 0, st)) < 1e-15);
    }
}

TEST_CASE("pump rates") {
    Scenario s = testutil::sg_scenario(0.7, 5, 0.2);
    FactoredModel model(s);
    // Mirror-symmetric detectors cancel at t = 0 without phases.
    DetectorPhases ph{{0.3, 1.9}, {-0.8, 0.6}};
    const FactoredState st = model.initial(&ph);

    SUBCASE("linear limit does not pump") {
        Scenario s0 = s;
        s0.zeta = 0.0;
        FactoredModel m0(s0);
        for (std::size_t d = 0; d < 2; ++d)
            for (std::size_t k = 0; k < 2; ++k) CHECK(m0.local_pump_rate(d, k, st) == 0.0);
    }
    SUBCASE("single outcome cannot pump") {
        Scenario s1 = one_detector(5, 0.2, 1);
        s1.detectors[0].alpha_active = {1.0, 0.5};
        FactoredModel m1(s1);
        CHECK(std::abs(m1.local_pump_rate(0, 0, m1.initial())) < 1e-14);
    }
    SUBCASE("local rates add up to the global relative rate") {
        const std::vector<double> dw = global_pump_rates(st.weights, model.rates(st));
        for (std::size_t k = 0; k < 2; ++k) {
            const double local = model.local_pump_rate(0, k, st) + model.local_pump_rate(1, k, st);
            CHECK(std::abs(local - dw[k] / st.weights[k]) <= 1e-10);
        }
        CHECK(std::abs(dw[0]) > 1e-4);
    }
    SUBCASE("global balance") {
        RateTable t{2, 1, {0.0, 0.3, 0.3, 0.0}};
        auto dw = global_pump_rates(std::vector<double>{0.4, 0.6}, t);
        CHECK(dw[0] == 0.0);
        CHECK(dw[1] == 0.0);

        t.values = {0.0, 0.5, 0.2, 0.0};
        dw = global_pump_rates(std::vector<double>{0.4, 0.6}, t);
        CHECK(std::abs(dw[0] - 0.4 * 0.6 * 0.3) < 1e-15);
        CHECK(dw[1] == -dw[0]);

        RateTable t3{3, 1, {0.0, 0.5, 0.1, 0.2, 0.0, 0.7, 0.4, 0.3, 0.0}};
        dw = global_pump_rates(std::vector<double>{0.0, 0.3, 0.7}, t3);
        CHECK(dw[0] == 0.0);
        CHECK(std::abs(dw[1] + dw[2]) < 1e-16);
    }
}

TEST_CASE("factored right-hand side") {
    SUBCASE("linear limit is a pure commutator with frozen weights") {
        Scenario s = testutil::sg_scenario(0.7, 5, 0.0);
        FactoredModel model(s);
        const FactoredState st = model.initial();
        const FactoredDerivative d = model.rhs(st);
        CHECK(d.weights[0] == 0.0);
        CHECK(d.weights[1] == 0.0);
        const Matrix& h = model.hamiltonian(1).matrix();
        const Matrix& r = st.block(1, 0, 1);
        CHECK(max_abs_diff(d.blocks[(1 * 2 + 0) * 2 + 1], cplx(0, -1) * (h * r - r * h)) < 1e-14);
    }
    SUBCASE("traceless diagonal blocks and conjugate pairing") {
        Scenario s = testutil::sg_scenario(0.3, 6, 0.4);
        s.amplitudes = {std::sqrt(0.2), std::sqrt(0.3) * std::polar(1.0, 0.4), std::sqrt(0.5) * std::polar(1.0, -1.1)};
        s.activation = {{true, false}, {false, true}, {true, true}};
        FactoredModel model(s);
        DetectorPhases ph{{0.3, 1.7}, {2.2, -0.6}};
        const FactoredState st = model.initial(&ph);
        const FactoredDerivative d = model.rhs(st);
        for (std::size_t det = 0; det < 2; ++det) {
            for (std::size_t k = 0; k < 3; ++k) {
                CHECK(std::abs(d.blocks[(det * 3 + k) * 3 + k].trace()) <= 1e-12);
                for (std::size_t l = 0; l < 3; ++l) {
                    CHECK(max_abs_diff(d.blocks[(det * 3 + k) * 3 + l], d.blocks[(det * 3 + l) * 3 + k].adjoint()) <= 1e-12);
                }
            }
        }
        CHECK(std::abs(sum(d.weights)) < 1e-15);
    }
}

TEST_CASE("factored step") {
    SUBCASE("no pumping in the linear limit") {
        Scenario s = testutil::sg_scenario(0.7, 4, 0.0);
        FactoredModel model(s);
        FactoredState st = model.initial();
        for (int i = 0; i < 10000; ++i) st = model.step(st, 0.01);
        CHECK(std::abs(st.weights[0] - 0.7) <= 1e-10);
        CHECK(std::abs(st.weights[1] - 0.3) <= 1e-10);
    }
    SUBCASE("matches the full-space oracle") {
        Scenario s = testutil::small_scenario(4, 0.05);
        FactoredModel fm(s);
        FullModel full(s);
        FactoredState f = fm.initial();
        JointState j = embed(f, s);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            f = fm.step(f, 0.005);
            j = full.step(j, 0.005);
            const auto wf = full.branch_weights(j.rho);
            for (std::size_t k = 0; k < 2; ++k) worst = std::max(worst, std::abs(wf[k] - f.weights[k]));
            CHECK(std::abs(sum(f.weights) - 1.0) <= 1e-8);
        }
        MESSAGE("factored vs full max deviation " << worst);
        CHECK(worst <= 1e-4);
        // the comparison is not vacuous
        CHECK(std::abs(f.weights[0] - 0.6) > 1e-5);
    }
    SUBCASE("dephasing shrinks coherences") {
        Scenario s = testutil::sg_scenario(0.5, 4, 0.0);
        s.detectors[0].dephasing_rate = 2.0;
        FactoredModel model(s);
        FactoredState st = model.initial();
        const double c0 = st.block(0, 0, 1).norm();
        for (int i = 0; i < 100; ++i) st = model.step(st, 0.01);
        CHECK(std::abs(st.block(0, 0, 1).norm() - c0 * std::exp(-2.0)) < 1e-9);
        CHECK(std::abs(st.block(1, 0, 1).norm() - build_initial(s).block(1, 0, 1).norm()) < 1e-9);
    }
    SUBCASE("zero clamp absorbs a ruined branch") {
        Scenario s = testutil::sg_scenario(0.7, 4, 0.2);
        FactoredModel model(s);
        FactoredState st = model.initial();
        st.weights = {1.0 - 5e-13, 5e-13};
        st = model.step(st, 0.01);
        CHECK(st.weights[1] == 0.0);
        for (int i = 0; i < 50; ++i) st = model.step(st, 0.01);
        CHECK(st.weights[1] == 0.0);
    }
}

TEST_CASE("embedding") {
    Scenario s = testutil::sg_scenario(0.7, 3, 0.1);
    s.amplitudes[1] *= std::polar(1.0, 0.8);
    DetectorPhases ph{{0.4, 1.0}, {0.1, 2.0}};
    const FactoredState st = build_initial(s, &ph);
    const JointState j = embed(st, s);
    CHECK(std::abs(j.rho.trace() - 1.0) < 1e-14);
    CHECK(std::abs((j.rho.matrix() * j.rho.matrix()).trace() - 1.0) <= 1e-10);
    FullModel full(s);
    const auto w = full.branch_weights(j.rho);
    CHECK(std::abs(w[0] - 0.7) < 1e-14);
    CHECK(std::abs(w[1] - 0.3) < 1e-14);
    // matches the outer product of the ansatz vector
    Vector psi = Vector::Zero(18);
    for (std::size_t k = 0; k < 2; ++k) {
        const Vector a = initial_detector_state(s, 0, k, &ph);
        const Vector b = initial_detector_state(s, 1, k, &ph);
        Vector prod(9);
        for (int i = 0; i < 3; ++i)
            for (int r = 0; r < 3; ++r) prod(i * 3 + r) = a(i) * b(r);
        psi.segment(static_cast<Eigen::Index>(k) * 9, 9) = s.amplitudes[k] * prod;
    }
    CHECK(max_abs_diff(j.rho.matrix(), psi * psi.adjoint()) < 1e-14);
    const JointResiduals r = joint_residuals(j.rho);
    CHECK(r.min_eigenvalue >= -1e-12);
}

TEST_CASE("collapse detection") {
    CHECK(detect_collapse(std::vector<double>{1.0, 0.0}, 1e-6) == std::optional<std::size_t>(0));
    CHECK_FALSE(detect_collapse(std::vector<double>{0.5, 0.5}, 1e-6).has_value());
    CHECK(detect_collapse(std::vector<double>{1.0 - 1e-7, 1e-7}, 1e-6) == std::optional<std::size_t>(0));
    CHECK(detect_collapse(std::vector<double>{0.0, 1.0 - 1e-4, 1e-4}, 1e-3) == std::optional<std::size_t>(1));
}

TEST_CASE("branch engine matches the block integrator") {
    Scenario s = testutil::sg_scenario(0.7, 8, 0.3);
    s.amplitudes = {std::sqrt(0.2), std::sqrt(0.3) * std::polar(1.0, 0.4), std::sqrt(0.5)};
    s.activation = {{true, false}, {false, true}, {true, true}};
    DetectorPhases ph{{0.3, 1.7}, {2.2, -0.6}};
    FactoredModel fm(s);
    BranchModel bm(s);
    FactoredState f = fm.initial(&ph);
    BranchState b = bm.initial(&ph);
    // Both are RK4 on different parameterizations; truncation differs at O(dt^4).
    for (int i = 0; i < 500; ++i) {
        f = fm.step(f, 0.002);
        bm.step(b, 0.002);
    }
    double wdev = 0.0;
    for (std::size_t k = 0; k < 3; ++k) wdev = std::max(wdev, std::abs(f.weights[k] - b.weights[k]));
    CHECK(wdev <= 1e-8);
    const FactoredState fb = bm.to_factored(b);
    double bdev = 0.0;
    for (std::size_t i = 0; i < f.blocks.size(); ++i) bdev = std::max(bdev, max_abs_diff(f.blocks[i], fb.blocks[i]));
    CHECK(bdev <= 1e-8);
    for (std::size_t i = 0; i < f.local_weights.size(); ++i) CHECK(std::abs(f.local_weights[i] - b.local_weights[i]) <= 1e-8);
    const RateTable t = fm.rates(f);
    for (std::size_t d = 0; d < 2; ++d)
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t m = 0; m < 3; ++m)
                if (k != m) CHECK(std::abs(t(d, k, m) - bm.oneway_rate(d, k, m, b)) <= 1e-8);
}

TEST_CASE("pure factored trajectories keep rank-one blocks") {
    Scenario s = testutil::sg_scenario(0.6, 6, 0.3);
    FactoredModel model(s);
    DetectorPhases ph{{0.5, 2.5}, {1.0, 0.2}};
    FactoredState st = model.initial(&ph);
    double worst_purity = 1.0;
    double worst_pair = 0.0;
    for (int i = 0; i < 300; ++i) {
        st = model.step(st, 0.01);
        for (std::size_t d = 0; d < 2; ++d) {
            for (std::size_t k = 0; k < 2; ++k) {
                worst_purity = std::min(worst_purity, (st.block(d, k, k) * st.block(d, k, k)).trace().real());
                for (std::size_t l = 0; l < 2; ++l)
                    worst_pair = std::max(worst_pair, max_abs_diff(st.block(d, k, l), st.block(d, l, k).adjoint()));
            }
        }
    }
    CHECK(worst_purity >= 1.0 - 1e-6);
    CHECK(worst_pair <= 1e-10);
}
