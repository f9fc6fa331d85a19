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
#include <string>

#include "collapse/dynamics.hpp"
#include "dynamics_detail.hpp"

namespace collapse {

namespace detail {

void check_structure(const Scenario& s) {
    if (s.amplitudes.empty()) throw StructuralError("scenario has no outcomes");
    if (s.detectors.empty()) throw StructuralError("scenario has no detectors");
    if (s.activation.size() != s.amplitudes.size()) throw StructuralError("activation table needs one row per outcome");
    for (const auto& row : s.activation) {
        if (row.size() != s.detectors.size()) throw StructuralError("activation row needs one entry per detector");
    }
}

void clamp_weights(std::vector<double>& w) {
    for (double& v : w) {
        if (v < kZeroClamp) v = 0.0;
    }
}

}  // namespace detail

namespace {

void axpy(FactoredState& out, const FactoredState& base, const FactoredDerivative& k, double h) {
    for (std::size_t i = 0; i < out.weights.size(); ++i) out.weights[i] = base.weights[i] + h * k.weights[i];
    for (std::size_t i = 0; i < out.local_weights.size(); ++i) {
        out.local_weights[i] = base.local_weights[i] + h * k.local_weights[i];
    }
    for (std::size_t i = 0; i < out.blocks.size(); ++i) out.blocks[i] = base.blocks[i] + h * k.blocks[i];
}

bool all_finite(const FactoredState& s) {
    for (double v : s.weights) {
        if (!std::isfinite(v)) return false;
    }
    for (const Matrix& b : s.blocks) {
        if (!b.allFinite()) return false;
    }
    return true;
}

}  // namespace

FactoredModel::FactoredModel(Scenario scenario) : s_(std::move(scenario)) {
    detail::check_structure(s_);
    for (const DetectorSpec& spec : s_.detectors) {
        x_.push_back(position_operator(spec.basis));
        p_.push_back(momentum_operator(spec.basis));
        h0_.push_back(spec.hamiltonian());
    }
}

FactoredState FactoredModel::initial(const DetectorPhases* phases) const {
    const std::size_t k_count = s_.n_outcomes();
    const std::size_t d_count = s_.n_detectors();
    FactoredState st;
    st.n_outcomes = k_count;
    st.n_detectors = d_count;
    st.weights = s_.born_weights();
    st.local_weights.assign(d_count * k_count, 1.0);
    st.blocks.resize(d_count * k_count * k_count);
    for (std::size_t d = 0; d < d_count; ++d) {
        std::vector<Vector> phi;
        for (std::size_t k = 0; k < k_count; ++k) phi.push_back(initial_detector_state(s_, d, k, phases));
        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t l = 0; l < k_count; ++l) st.block(d, k, l) = phi[k] * phi[l].adjoint();
        }
    }
    return st;
}

Operator FactoredModel::coupling_tensor(std::size_t d, std::size_t k, std::size_t m, std::size_t l,
                                        const FactoredState& st) const {
    const std::size_t k_count = st.n_outcomes;
    if (d >= st.n_detectors || k >= k_count || m >= k_count || l >= k_count) {
        throw StructuralError("coupling_tensor index out of range");
    }
    const Matrix& x = x_[d].matrix();
    const Matrix& p = p_[d].matrix();
    const Matrix& r_km = st.block(d, k, m);
    const Matrix& r_ml = st.block(d, m, l);
    const Matrix u = r_km * p * r_ml;
    const Matrix v = r_km * x * r_ml;
    return Operator(x * u + u * x - p * v - v * p);
}

double FactoredModel::oneway_rate(std::size_t d, std::size_t k, std::size_t m, const FactoredState& st) const {
    const Matrix& x = x_[d].matrix();
    const Matrix& p = p_[d].matrix();
    const cplx tr = (x * st.block(d, k, m) * p * st.block(d, m, k)).trace();
    return 2.0 * s_.zeta * tr.real();
}

RateTable FactoredModel::rates(const FactoredState& st) const {
    RateTable t{st.n_outcomes, st.n_detectors, std::vector<double>(st.n_detectors * st.n_outcomes * st.n_outcomes, 0.0)};
    for (std::size_t d = 0; d < st.n_detectors; ++d) {
        for (std::size_t k = 0; k < st.n_outcomes; ++k) {
            for (std::size_t m = 0; m < st.n_outcomes; ++m) {
                if (m != k) t.values[(d * st.n_outcomes + k) * st.n_outcomes + m] = oneway_rate(d, k, m, st);
            }
        }
    }
    return t;
}

double FactoredModel::local_pump_rate(std::size_t d, std::size_t k, const FactoredState& st) const {
    double acc = 0.0;
    for (std::size_t m = 0; m < st.n_outcomes; ++m) {
        if (st.weights[m] == 0.0) continue;
        acc += st.weights[m] * coupling_tensor(d, k, m, k, st).trace().real();
    }
    return s_.zeta * acc;
}

FactoredDerivative FactoredModel::rhs(const FactoredState& st) const {
    const std::size_t k_count = st.n_outcomes;
    const std::size_t d_count = st.n_detectors;
    const double zeta = s_.zeta;
    const cplx minus_i(0.0, -1.0);

    FactoredDerivative out;
    out.local_weights.assign(d_count * k_count, 0.0);
    out.blocks.resize(st.blocks.size());

    RateTable t{k_count, d_count, std::vector<double>(d_count * k_count * k_count, 0.0)};

    for (std::size_t d = 0; d < d_count; ++d) {
        const Matrix& x = x_[d].matrix();
        const Matrix& p = p_[d].matrix();
        const Matrix& h = h0_[d].matrix();
        const auto n = x.rows();

        // R_km p and R_km x, reused across l.
        std::vector<Matrix> rp(k_count * k_count), rx(k_count * k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t m = 0; m < k_count; ++m) {
                rp[k * k_count + m] = st.block(d, k, m) * p;
                rx[k * k_count + m] = st.block(d, k, m) * x;
            }
        }

        // a_k = sum_m w_m tr C_kmk with tr C_kmk = 2 tr(x R_km p R_mk) - 2 tr(p R_km x R_mk).
        std::vector<double> a(k_count, 0.0);
        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t m = 0; m < k_count; ++m) {
                const double txp = (x * rp[k * k_count + m] * st.block(d, m, k)).trace().real();
                const double tpx = (p * rx[k * k_count + m] * st.block(d, m, k)).trace().real();
                if (m != k) t.values[(d * k_count + k) * k_count + m] = 2.0 * zeta * txp;
                a[k] += st.weights[m] * 2.0 * (txp - tpx);
            }
            out.local_weights[d * k_count + k] = zeta * a[k] * st.local_weight(d, k);
        }

        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t l = 0; l < k_count; ++l) {
                Matrix u = Matrix::Zero(n, n);
                Matrix v = Matrix::Zero(n, n);
                for (std::size_t m = 0; m < k_count; ++m) {
                    if (st.weights[m] == 0.0) continue;
                    u.noalias() += st.weights[m] * rp[k * k_count + m] * st.block(d, m, l);
                    v.noalias() += st.weights[m] * rx[k * k_count + m] * st.block(d, m, l);
                }
                const Matrix& r = st.block(d, k, l);
                Matrix dr = minus_i * (h * r - r * h);
                dr += zeta * (x * u + u * x - p * v - v * p - 0.5 * (a[k] + a[l]) * r);
                out.blocks[(d * k_count + k) * k_count + l] = std::move(dr);
            }
        }
    }
    out.weights = global_pump_rates(st.weights, t);
    return out;
}

FactoredState FactoredModel::step(const FactoredState& st, double dt) const {
    FactoredState next = st;
    if (dt == 0.0) return next;

    const FactoredDerivative k1 = rhs(st);
    FactoredState tmp = st;
    axpy(tmp, st, k1, 0.5 * dt);
    const FactoredDerivative k2 = rhs(tmp);
    axpy(tmp, st, k2, 0.5 * dt);
    const FactoredDerivative k3 = rhs(tmp);
    axpy(tmp, st, k3, dt);
    const FactoredDerivative k4 = rhs(tmp);

    const double h6 = dt / 6.0;
    for (std::size_t i = 0; i < next.weights.size(); ++i) {
        next.weights[i] += h6 * (k1.weights[i] + 2.0 * k2.weights[i] + 2.0 * k3.weights[i] + k4.weights[i]);
    }
    for (std::size_t i = 0; i < next.local_weights.size(); ++i) {
        next.local_weights[i] +=
            h6 * (k1.local_weights[i] + 2.0 * k2.local_weights[i] + 2.0 * k3.local_weights[i] + k4.local_weights[i]);
    }
    for (std::size_t i = 0; i < next.blocks.size(); ++i) {
        next.blocks[i] += h6 * (k1.blocks[i] + 2.0 * k2.blocks[i] + 2.0 * k3.blocks[i] + k4.blocks[i]);
    }
    next.time = st.time + dt;
    if (!all_finite(next)) throw BlowupError(next.time, "non-finite factored state");

    const std::size_t k_count = next.n_outcomes;
    double deficit = 0.0;
    for (std::size_t d = 0; d < next.n_detectors; ++d) {
        std::vector<double> tr(k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            tr[k] = next.block(d, k, k).trace().real();
            deficit = std::max(deficit, std::abs(tr[k] - 1.0));
            if (!(tr[k] > 0.0)) throw BlowupError(next.time, "non-positive block trace");
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t l = 0; l < k_count; ++l) next.block(d, k, l) /= std::sqrt(tr[k] * tr[l]);
            next.local_weights[d * k_count + k] *= tr[k];
        }
        const double gamma = s_.detectors[d].dephasing_rate;
        if (gamma > 0.0) {
            const double f = std::exp(-gamma * dt);
            for (std::size_t k = 0; k < k_count; ++k) {
                for (std::size_t l = 0; l < k_count; ++l) {
                    if (k != l) next.block(d, k, l) *= f;
                }
            }
        }
    }
    next.last_trace_deficit = deficit;
    detail::clamp_weights(next.weights);
    return next;
}

}  // namespace collapse
