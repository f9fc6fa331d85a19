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

// Nonlinear measurement dynamics on a microsystem entangled with D detector
// modes. Three integrators share one Scenario:
//
//   FullModel      exact density-matrix flow on the joint space
//                  (spin (x) detector_0 (x) ... ); tiny systems only.
//   FactoredModel  per-detector blocks R_kl^d plus weights, the closed
//                  block system; any detector state, including dephased.
//   BranchModel    one normalized vector per (detector, initial-state
//                  class). Equivalent to FactoredModel while blocks stay
//                  rank one (no dephasing); this is what ensembles run.
//
// Units: hbar = 1, mode frequency omega sets the time scale.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "collapse/matcore.hpp"

namespace collapse {

enum class DetectorModel {
    kerr,      // H0 = omega n + lambda n^2
    inverted,  // H0 = (omega/2)(p^2 - x^2) + lambda n^2, unbounded growth toy
};

struct DetectorSpec {
    ModeBasis basis{16};
    double omega = 1.0;
    double anharmonicity = 0.2;
    cplx alpha_active{2.0, 0.0};
    cplx alpha_quiet{0.0, 0.0};
    double dephasing_rate = 0.0;
    DetectorModel model = DetectorModel::kerr;

    void validate() const;
    Operator hamiltonian() const;
};

struct Scenario {
    std::vector<cplx> amplitudes;                // c_k
    std::vector<DetectorSpec> detectors;
    std::vector<std::vector<bool>> activation;   // [k][d]: branch k activates detector d
    double zeta = 0.05;
    double dt = 0.01;
    double t_max = 100.0;
    double collapse_epsilon = 1e-3;

    std::size_t n_outcomes() const noexcept { return amplitudes.size(); }
    std::size_t n_detectors() const noexcept { return detectors.size(); }
    std::vector<double> born_weights() const;
    void validate() const;
};

/// Per-detector rotation of the active and quiet coherent states.
struct DetectorPhases {
    std::vector<double> active;
    std::vector<double> quiet;

    static DetectorPhases zeros(std::size_t n_detectors);
};

/// Initial |phi_k^d>: coherent state chosen by the activation table.
Vector initial_detector_state(const Scenario& s, std::size_t d, std::size_t k, const DetectorPhases* phases);

inline constexpr double kZeroClamp = 1e-12;

struct FactoredState {
    std::size_t n_outcomes = 0;
    std::size_t n_detectors = 0;
    std::vector<double> weights;        // w_k
    std::vector<double> local_weights;  // w_k^d at d*K + k
    std::vector<Matrix> blocks;         // R_kl^d at (d*K + k)*K + l
    double time = 0.0;
    double last_trace_deficit = 0.0;    // block-trace drift removed by the last renormalization

    const Matrix& block(std::size_t d, std::size_t k, std::size_t l) const {
        return blocks[(d * n_outcomes + k) * n_outcomes + l];
    }
    Matrix& block(std::size_t d, std::size_t k, std::size_t l) { return blocks[(d * n_outcomes + k) * n_outcomes + l]; }
    double local_weight(std::size_t d, std::size_t k) const { return local_weights[d * n_outcomes + k]; }
};

struct FactoredDerivative {
    std::vector<double> weights;
    std::vector<double> local_weights;
    std::vector<Matrix> blocks;
};

/// One-way rates T_km^d at (d*K + k)*K + m.
struct RateTable {
    std::size_t n_outcomes = 0;
    std::size_t n_detectors = 0;
    std::vector<double> values;

    double operator()(std::size_t d, std::size_t k, std::size_t m) const {
        return values[(d * n_outcomes + k) * n_outcomes + m];
    }
};

struct JointState {
    Operator rho;
    double time = 0.0;
};

struct JointResiduals {
    double trace_error = 0.0;
    double hermiticity = 0.0;
    double min_eigenvalue = 0.0;
};

JointResiduals joint_residuals(const Operator& rho);

/// w_k*w_m*sum_d (T_km - T_mk); the summand is antisymmetric so the
/// result sums to zero.
std::vector<double> global_pump_rates(std::span<const double> weights, const RateTable& rates);

/// Index k with w_k >= 1 - epsilon, if any.
std::optional<std::size_t> detect_collapse(std::span<const double> weights, double epsilon);

class FactoredModel {
public:
    explicit FactoredModel(Scenario scenario);

    const Scenario& scenario() const noexcept { return s_; }
    const Operator& position(std::size_t d) const { return x_[d]; }
    const Operator& momentum(std::size_t d) const { return p_[d]; }
    const Operator& hamiltonian(std::size_t d) const { return h0_[d]; }

    FactoredState initial(const DetectorPhases* phases = nullptr) const;

    /// C_kml^d = x R_km p R_ml + R_km p R_ml x - p R_km x R_ml - R_km x R_ml p
    Operator coupling_tensor(std::size_t d, std::size_t k, std::size_t m, std::size_t l,
                             const FactoredState& state) const;
    /// T_km^d = 2 zeta Re tr(x R_km p R_mk)
    double oneway_rate(std::size_t d, std::size_t k, std::size_t m, const FactoredState& state) const;
    RateTable rates(const FactoredState& state) const;
    /// (dw_k^d/dt)/w_k^d = zeta sum_m w_m tr C_kmk^d
    double local_pump_rate(std::size_t d, std::size_t k, const FactoredState& state) const;

    FactoredDerivative rhs(const FactoredState& state) const;

    /// RK4 step followed by block renormalization, optional dephasing and
    /// the zero clamp. Throws BlowupError on non-finite values.
    FactoredState step(const FactoredState& state, double dt) const;
    FactoredState step(const FactoredState& state) const { return step(state, s_.dt); }

private:
    Scenario s_;
    std::vector<Operator> x_, p_, h0_;
};

class FullModel {
public:
    explicit FullModel(Scenario scenario, std::size_t max_dim = kDefaultMaxDim);

    const Scenario& scenario() const noexcept { return s_; }
    std::size_t dim() const noexcept { return dim_; }
    const Operator& free_hamiltonian() const noexcept { return h0_; }

    /// H0 + i zeta sum_d (x_d rho p_d - p_d rho x_d)
    Operator effective_hamiltonian(const Operator& rho) const;
    /// -i [H(rho), rho]
    Operator rhs(const JointState& state) const;
    JointState step(const JointState& state, double dt) const;
    JointState step(const JointState& state) const { return step(state, s_.dt); }

    /// tr <k|rho|k> for every outcome k.
    std::vector<double> branch_weights(const Operator& rho) const;

private:
    Scenario s_;
    std::size_t dim_ = 0;
    std::size_t detector_dim_ = 0;
    Operator h0_;
    std::vector<Operator> x_, p_;
};

/// Free-function forms of the two models, for callers holding a Scenario.
FactoredState build_initial(const Scenario& scenario, const DetectorPhases* phases = nullptr);
Operator effective_hamiltonian(const Operator& rho, const Scenario& scenario);

/// Joint density matrix of a factored state: sum_kl |k><l| sqrt(w_k w_l)
/// e^{i(arg c_k - arg c_l)} (x)_d R_kl^d, so that tr<k|rho|k> = w_k.
JointState embed(const FactoredState& state, const Scenario& scenario, std::size_t max_dim = kDefaultMaxDim);

struct BranchState {
    std::size_t n_outcomes = 0;
    std::size_t n_detectors = 0;
    std::vector<double> weights;                // w_k
    std::vector<double> local_weights;          // w_k^d at d*K + k
    std::vector<std::vector<Vector>> vectors;   // [d][class] normalized |phi>
    std::vector<std::vector<std::size_t>> class_of;  // [d][k]
    double time = 0.0;

    const Vector& phi(std::size_t d, std::size_t k) const { return vectors[d][class_of[d][k]]; }
};

/// Branch-vector engine. Branches that start in the same detector state
/// evolve under the same (state-dependent) generator, so each detector
/// carries only one vector per distinct initial state.
class BranchModel {
public:
    explicit BranchModel(Scenario scenario);

    const Scenario& scenario() const noexcept { return s_; }

    BranchState initial(const DetectorPhases* phases = nullptr) const;
    void step(BranchState& state, double dt) const;
    void step(BranchState& state) const { step(state, s_.dt); }

    double oneway_rate(std::size_t d, std::size_t k, std::size_t m, const BranchState& state) const;
    /// sum_d (T_km^d - T_mk^d)
    double pair_asymmetry(std::size_t k, std::size_t m, const BranchState& state) const;
    /// pair_asymmetry for every k < m, in row order.
    void pair_asymmetries(const BranchState& state, std::vector<double>& out) const;
    /// tr(rho_d^2) for the reduced detector state rho_d = sum_k w_k |phi_k><phi_k|.
    double detector_purity(std::size_t d, const BranchState& state) const;
    FactoredState to_factored(const BranchState& state) const;

    struct Moments {
        std::vector<std::vector<double>> x, p;  // [d][class]
        std::vector<double> x_mean, p_mean;     // [d]
    };
    struct Slope {
        std::vector<std::vector<Vector>> dv;
        std::vector<double> dw, dlocal;
    };

private:
    struct Local {
        std::size_t n = 0;
        bool diagonal = true;
        Eigen::VectorXd h_diag;
        Matrix h_dense;
        Eigen::VectorXd sqrt_n;  // sqrt(1..n-1)
    };
    void moments(const BranchState& s, Moments& out) const;
    void derivative(const BranchState& s, Moments& m, Slope& out) const;

    Scenario s_;
    std::vector<Local> local_;
};

}  // namespace collapse
