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
#include <string>

#include <Eigen/Eigenvalues>

#include "collapse/dynamics.hpp"

namespace collapse {

namespace {

std::string det_field(std::size_t d, const char* name) {
    return "/scenario/detectors/" + std::to_string(d) + "/" + name;
}

}  // namespace

void DetectorSpec::validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("omega", "must be > 0");
    if (!(dephasing_rate >= 0.0) || !std::isfinite(dephasing_rate)) throw ConfigError("dephasing_rate", "must be >= 0");
    if (!std::isfinite(anharmonicity)) throw ConfigError("anharmonicity", "must be finite");
    if (alpha_active == alpha_quiet) throw ConfigError("alpha_active", "must differ from alpha_quiet");
}

Operator DetectorSpec::hamiltonian() const {
    const Matrix n = number_operator(basis).matrix();
    Matrix h = anharmonicity * n * n;
    if (model == DetectorModel::kerr) {
        h += omega * n;
    } else {
        const Matrix x = position_operator(basis).matrix();
        const Matrix p = momentum_operator(basis).matrix();
        h += 0.5 * omega * (p * p - x * x);
    }
    // Symmetrize away rounding so the Hermitian tag check is exact.
    Matrix hs = 0.5 * (h + h.adjoint());
    return Operator::hermitian(std::move(hs));
}

std::vector<double> Scenario::born_weights() const {
    std::vector<double> w(amplitudes.size());
    std::transform(amplitudes.begin(), amplitudes.end(), w.begin(), [](cplx c) { return std::norm(c); });
    return w;
}

void Scenario::validate() const {
    const std::size_t k_count = amplitudes.size();
    const std::size_t d_count = detectors.size();
    if (k_count < 2) throw ConfigError("/scenario/amplitudes", "need at least 2 outcomes");
    if (d_count < 1) throw ConfigError("/scenario/detectors", "need at least 1 detector");
    double norm = 0.0;
    for (cplx c : amplitudes) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            throw ConfigError("/scenario/amplitudes", "non-finite amplitude");
        }
        norm += std::norm(c);
    }
    if (std::abs(norm - 1.0) > 1e-10) {
        throw ConfigError("/scenario/amplitudes", "sum |c_k|^2 = " + std::to_string(norm) + ", expected 1");
    }
    for (std::size_t d = 0; d < d_count; ++d) {
        try {
            detectors[d].validate();
        } catch (const ConfigError& e) {
            throw ConfigError(det_field(d, e.field().c_str()), e.message());
        }
    }
    if (activation.size() != k_count) throw ConfigError("/scenario/activation", "needs one row per outcome");
    for (std::size_t k = 0; k < k_count; ++k) {
        if (activation[k].size() != d_count) {
            throw ConfigError("/scenario/activation/" + std::to_string(k), "needs one entry per detector");
        }
    }
    for (std::size_t k = 0; k < k_count; ++k) {
        for (std::size_t l = k + 1; l < k_count; ++l) {
            if (activation[k] == activation[l]) {
                throw ConfigError("/scenario/activation",
                                  "outcomes " + std::to_string(k) + " and " + std::to_string(l) +
                                      " activate the same detectors and cannot be distinguished");
            }
        }
    }
    if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw ConfigError("/scenario/zeta", "must be >= 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("/scenario/dt", "must be > 0");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("/scenario/t_max", "must be > 0");
    if (!(collapse_epsilon > 0.0 && collapse_epsilon <= 1e-3)) {
        throw ConfigError("/scenario/collapse_epsilon", "must lie in (0, 1e-3]");
    }
}

DetectorPhases DetectorPhases::zeros(std::size_t n_detectors) {
    return DetectorPhases{std::vector<double>(n_detectors, 0.0), std::vector<double>(n_detectors, 0.0)};
}

Vector initial_detector_state(const Scenario& s, std::size_t d, std::size_t k, const DetectorPhases* phases) {
    const DetectorSpec& spec = s.detectors[d];
    const bool active = s.activation[k][d];
    cplx alpha = active ? spec.alpha_active : spec.alpha_quiet;
    if (phases != nullptr) alpha *= std::polar(1.0, active ? phases->active[d] : phases->quiet[d]);
    return coherent_state(spec.basis, alpha);
}

JointResiduals joint_residuals(const Operator& rho) {
    JointResiduals r;
    r.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
    r.hermiticity = rho.hermiticity_residual();
    const Matrix herm = 0.5 * (rho.matrix() + rho.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    return r;
}

std::vector<double> global_pump_rates(std::span<const double> w, const RateTable& t) {
    const std::size_t k_count = t.n_outcomes;
    if (w.size() != k_count) throw StructuralError("weights and rate table disagree on outcome count");
    std::vector<double> dw(k_count, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
        if (w[k] == 0.0) continue;
        double acc = 0.0;
        for (std::size_t m = 0; m < k_count; ++m) {
            if (m == k) continue;
            double net = 0.0;
            for (std::size_t d = 0; d < t.n_detectors; ++d) net += t(d, k, m) - t(d, m, k);
            acc += w[m] * net;
        }
        dw[k] = w[k] * acc;
    }
    return dw;
}

std::optional<std::size_t> detect_collapse(std::span<const double> w, double epsilon) {
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] >= 1.0 - epsilon) return k;
    }
    return std::nullopt;
}

FactoredState build_initial(const Scenario& scenario, const DetectorPhases* phases) {
    return FactoredModel(scenario).initial(phases);
}

Operator effective_hamiltonian(const Operator& rho, const Scenario& scenario) {
    return FullModel(scenario).effective_hamiltonian(rho);
}

}  // namespace collapse
