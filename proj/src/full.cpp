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

#include <cmath>

#include "collapse/dynamics.hpp"
#include "dynamics_detail.hpp"

namespace collapse {

FullModel::FullModel(Scenario scenario, std::size_t max_dim) : s_(std::move(scenario)) {
    detail::check_structure(s_);
    std::vector<std::size_t> dims;
    dims.push_back(s_.n_outcomes());
    for (const DetectorSpec& spec : s_.detectors) dims.push_back(static_cast<std::size_t>(spec.basis.n_levels()));

    std::size_t total = 1;
    for (std::size_t d : dims) {
        if (total > max_dim / d) throw SizeError("joint dimension exceeds cap " + std::to_string(max_dim));
        total *= d;
    }
    dim_ = total;
    detector_dim_ = total / s_.n_outcomes();

    Matrix h = Matrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    for (std::size_t d = 0; d < s_.n_detectors(); ++d) {
        const DetectorSpec& spec = s_.detectors[d];
        h += embed_local(spec.hamiltonian(), dims, d + 1, max_dim).matrix();
        x_.push_back(embed_local(position_operator(spec.basis), dims, d + 1, max_dim));
        p_.push_back(embed_local(momentum_operator(spec.basis), dims, d + 1, max_dim));
    }
    h0_ = Operator(std::move(h));
}

Operator FullModel::effective_hamiltonian(const Operator& rho) const {
    if (rho.dim() != dim_) throw StructuralError("density matrix does not match the joint dimension");
    Matrix h = h0_.matrix();
    if (s_.zeta != 0.0) {
        const cplx iz(0.0, s_.zeta);
        for (std::size_t d = 0; d < x_.size(); ++d) {
            const Matrix& x = x_[d].matrix();
            const Matrix& p = p_[d].matrix();
            h += iz * (x * rho.matrix() * p - p * rho.matrix() * x);
        }
    }
    return Operator(std::move(h));
}

Operator FullModel::rhs(const JointState& st) const {
    const Matrix h = effective_hamiltonian(st.rho).matrix();
    const Matrix& r = st.rho.matrix();
    return Operator(cplx(0.0, -1.0) * (h * r - r * h));
}

JointState FullModel::step(const JointState& st, double dt) const {
    if (dt == 0.0) return st;
    const Matrix k1 = rhs(st).matrix();
    const Matrix k2 = rhs({Operator(st.rho.matrix() + 0.5 * dt * k1), st.time}).matrix();
    const Matrix k3 = rhs({Operator(st.rho.matrix() + 0.5 * dt * k2), st.time}).matrix();
    const Matrix k4 = rhs({Operator(st.rho.matrix() + dt * k3), st.time}).matrix();
    Matrix next = st.rho.matrix() + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t = st.time + dt;
    if (!next.allFinite()) throw BlowupError(t, "non-finite joint density matrix");
    return JointState{Operator(std::move(next)), t};
}

std::vector<double> FullModel::branch_weights(const Operator& rho) const {
    std::vector<double> w(s_.n_outcomes());
    const auto n = static_cast<Eigen::Index>(detector_dim_);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto off = static_cast<Eigen::Index>(k) * n;
        w[k] = rho.matrix().block(off, off, n, n).trace().real();
    }
    return w;
}

JointState embed(const FactoredState& st, const Scenario& s, std::size_t max_dim) {
    const std::size_t k_count = st.n_outcomes;
    std::size_t ddim = 1;
    for (const DetectorSpec& spec : s.detectors) {
        const auto n = static_cast<std::size_t>(spec.basis.n_levels());
        if (ddim > max_dim / n) throw SizeError("embedded dimension exceeds cap");
        ddim *= n;
    }
    if (ddim > max_dim / k_count) throw SizeError("embedded dimension exceeds cap");
    const auto n = static_cast<Eigen::Index>(ddim);
    Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(k_count * ddim), static_cast<Eigen::Index>(k_count * ddim));
    for (std::size_t k = 0; k < k_count; ++k) {
        for (std::size_t l = 0; l < k_count; ++l) {
            const double ak = std::arg(s.amplitudes[k]);
            const double al = std::arg(s.amplitudes[l]);
            const cplx coef = std::sqrt(st.weights[k] * st.weights[l]) * std::polar(1.0, ak - al);
            if (coef == cplx(0.0, 0.0)) continue;
            Operator prod(st.block(0, k, l));
            for (std::size_t d = 1; d < st.n_detectors; ++d) prod = kron(prod, Operator(st.block(d, k, l)), max_dim);
            rho.block(static_cast<Eigen::Index>(k) * n, static_cast<Eigen::Index>(l) * n, n, n) = coef * prod.matrix();
        }
    }
    return JointState{Operator(std::move(rho)), st.time};
}

}  // namespace collapse
