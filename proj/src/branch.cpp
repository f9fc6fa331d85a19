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

// With rank-one blocks R_kl = |phi_k><phi_l| the block system reduces to
//
//   d|phi_k>/dt = -i H0 |phi_k> + zeta (Pbar x - Xbar p - G_k) |phi_k>
//   G_k         = X_k Pbar - P_k Xbar
//   dw_k/dt     = 2 zeta w_k sum_d G_k^d
//
// with X_k = <phi_k|x|phi_k>, Xbar = sum_m w_m X_m (same for p). The
// generator in the first line does not depend on k, which is why branches
// sharing an initial detector state share a vector.

namespace collapse {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

}  // namespace

BranchModel::BranchModel(Scenario scenario) : s_(std::move(scenario)) {
    detail::check_structure(s_);
    for (const DetectorSpec& spec : s_.detectors) {
        Local l;
        l.n = static_cast<std::size_t>(spec.basis.n_levels());
        const Matrix h = spec.hamiltonian().matrix();
        l.diagonal = spec.model == DetectorModel::kerr;
        if (l.diagonal) {
            l.h_diag = h.diagonal().real();
        } else {
            l.h_dense = h;
        }
        l.sqrt_n.resize(static_cast<Eigen::Index>(l.n));
        for (std::size_t i = 0; i < l.n; ++i) l.sqrt_n(static_cast<Eigen::Index>(i)) = std::sqrt(static_cast<double>(i));
        local_.push_back(std::move(l));
    }
}

BranchState BranchModel::initial(const DetectorPhases* phases) const {
    const std::size_t k_count = s_.n_outcomes();
    const std::size_t d_count = s_.n_detectors();
    BranchState st;
    st.n_outcomes = k_count;
    st.n_detectors = d_count;
    st.weights = s_.born_weights();
    st.local_weights.assign(d_count * k_count, 1.0);
    st.vectors.resize(d_count);
    st.class_of.assign(d_count, std::vector<std::size_t>(k_count, 0));
    for (std::size_t d = 0; d < d_count; ++d) {
        // class 0: quiet state, class 1: active state (only those present).
        std::size_t quiet = k_count;
        std::size_t active = k_count;
        for (std::size_t k = 0; k < k_count; ++k) {
            std::size_t& slot = s_.activation[k][d] ? active : quiet;
            if (slot == k_count) {
                slot = st.vectors[d].size();
                st.vectors[d].push_back(initial_detector_state(s_, d, k, phases));
            }
            st.class_of[d][k] = slot;
        }
    }
    return st;
}

void BranchModel::moments(const BranchState& st, Moments& m) const {
    m.x.resize(st.n_detectors);
    m.p.resize(st.n_detectors);
    m.x_mean.assign(st.n_detectors, 0.0);
    m.p_mean.assign(st.n_detectors, 0.0);
    for (std::size_t d = 0; d < st.n_detectors; ++d) {
        const Local& l = local_[d];
        m.x[d].resize(st.vectors[d].size());
        m.p[d].resize(st.vectors[d].size());
        for (std::size_t c = 0; c < st.vectors[d].size(); ++c) {
            const Vector& v = st.vectors[d][c];
            // <v|x|v> uses only the upper off-diagonal: sqrt(2) Re sum sqrt(i) conj(v_{i-1}) v_i.
            double xs = 0.0;
            double ps = 0.0;
            const auto* a = reinterpret_cast<const double*>(v.data());
            for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(l.n); ++i) {
                const double s = l.sqrt_n(i);
                xs += s * (a[2 * i - 2] * a[2 * i] + a[2 * i - 1] * a[2 * i + 1]);
                ps += s * (a[2 * i - 2] * a[2 * i + 1] - a[2 * i - 1] * a[2 * i]);
            }
            m.x[d][c] = std::sqrt(2.0) * xs;
            m.p[d][c] = std::sqrt(2.0) * ps;
        }
        for (std::size_t k = 0; k < st.n_outcomes; ++k) {
            const std::size_t c = st.class_of[d][k];
            m.x_mean[d] += st.weights[k] * m.x[d][c];
            m.p_mean[d] += st.weights[k] * m.p[d][c];
        }
    }
}

void BranchModel::derivative(const BranchState& st, Moments& m, Slope& out) const {
    const double zeta = s_.zeta;
    moments(st, m);
    out.dv.resize(st.n_detectors);
    out.dw.assign(st.n_outcomes, 0.0);
    out.dlocal.assign(st.n_detectors * st.n_outcomes, 0.0);
    for (std::size_t d = 0; d < st.n_detectors; ++d) {
        const Local& l = local_[d];
        const auto n = static_cast<Eigen::Index>(l.n);
        out.dv[d].resize(st.vectors[d].size());
        for (std::size_t c = 0; c < st.vectors[d].size(); ++c) {
            const Vector& v = st.vectors[d][c];
            const double g = m.x[d][c] * m.p_mean[d] - m.p[d][c] * m.x_mean[d];
            Vector& dv = out.dv[d][c];
            dv.resize(n);
            if (!l.diagonal) dv.noalias() = cplx(0.0, -1.0) * (l.h_dense * v);
            // Real arithmetic in the inner loop: complex products here go
            // through the slow NaN-checking path otherwise.
            const auto* vin = reinterpret_cast<const double*>(v.data());
            auto* vout = reinterpret_cast<double*>(dv.data());
            // zeta (pbar x - xbar p - g) v with x, p tridiagonal:
            // x v_i = (s_i v_{i-1} + s_{i+1} v_{i+1}) / sqrt2, p v_i = i (s_i v_{i-1} - s_{i+1} v_{i+1}) / sqrt2
            const double cz = zeta * kInvSqrt2;
            const double pr = cz * m.p_mean[d];
            const double xi = cz * m.x_mean[d];
            const double gz = zeta * g;
            const bool diag = l.diagonal;
            const double* hd = diag ? l.h_diag.data() : nullptr;
            const double* sq = l.sqrt_n.data();
            auto entry = [&](Eigen::Index i, bool lo, bool hi) {
                const double re = vin[2 * i];
                const double im = vin[2 * i + 1];
                double ar = -gz * re;
                double ai = -gz * im;
                if (diag) {
                    ar += hd[i] * im;
                    ai -= hd[i] * re;
                }
                if (lo) {
                    // (pr - i xi) s_i v_{i-1}
                    const double br = vin[2 * i - 2];
                    const double bi = vin[2 * i - 1];
                    ar += sq[i] * (pr * br + xi * bi);
                    ai += sq[i] * (pr * bi - xi * br);
                }
                if (hi) {
                    // (pr + i xi) s_{i+1} v_{i+1}
                    const double br = vin[2 * i + 2];
                    const double bi = vin[2 * i + 3];
                    ar += sq[i + 1] * (pr * br - xi * bi);
                    ai += sq[i + 1] * (pr * bi + xi * br);
                }
                if (diag) {
                    vout[2 * i] = ar;
                    vout[2 * i + 1] = ai;
                } else {
                    vout[2 * i] += ar;
                    vout[2 * i + 1] += ai;
                }
            };
            entry(0, false, n > 1);
            for (Eigen::Index i = 1; i + 1 < n; ++i) entry(i, true, true);
            if (n > 1) entry(n - 1, true, false);
        }
        for (std::size_t k = 0; k < st.n_outcomes; ++k) {
            const std::size_t c = st.class_of[d][k];
            const double g = m.x[d][c] * m.p_mean[d] - m.p[d][c] * m.x_mean[d];
            out.dw[k] += 2.0 * zeta * g;
            out.dlocal[d * st.n_outcomes + k] = 2.0 * zeta * g * st.local_weights[d * st.n_outcomes + k];
        }
    }
    for (std::size_t k = 0; k < st.n_outcomes; ++k) out.dw[k] *= st.weights[k];
}

namespace {

// Integration scratch reused across steps on the same thread.
struct BranchWork {
    BranchModel::Slope s1, s2, s3, s4;
    BranchModel::Moments mo;
    BranchState tmp;
};

}  // namespace

void BranchModel::step(BranchState& st, double dt) const {
    if (dt == 0.0) return;
    thread_local BranchWork work;
    BranchWork& wk = work;
    wk.tmp = st;
    BranchState& tmp = wk.tmp;
    auto stage = [&](const Slope& sl, double h) {
        for (std::size_t d = 0; d < st.n_detectors; ++d) {
            for (std::size_t c = 0; c < st.vectors[d].size(); ++c)
                tmp.vectors[d][c] = st.vectors[d][c] + h * sl.dv[d][c];
        }
        for (std::size_t k = 0; k < st.n_outcomes; ++k) tmp.weights[k] = st.weights[k] + h * sl.dw[k];
        for (std::size_t i = 0; i < st.local_weights.size(); ++i)
            tmp.local_weights[i] = st.local_weights[i] + h * sl.dlocal[i];
    };

    derivative(st, wk.mo, wk.s1);
    stage(wk.s1, 0.5 * dt);
    derivative(tmp, wk.mo, wk.s2);
    stage(wk.s2, 0.5 * dt);
    derivative(tmp, wk.mo, wk.s3);
    stage(wk.s3, dt);
    derivative(tmp, wk.mo, wk.s4);

    const double h6 = dt / 6.0;
    bool finite = true;
    for (std::size_t d = 0; d < st.n_detectors; ++d) {
        for (std::size_t c = 0; c < st.vectors[d].size(); ++c) {
            Vector& v = st.vectors[d][c];
            v += h6 * (wk.s1.dv[d][c] + 2.0 * wk.s2.dv[d][c] + 2.0 * wk.s3.dv[d][c] + wk.s4.dv[d][c]);
            const double nrm2 = v.squaredNorm();
            if (!std::isfinite(nrm2) || !(nrm2 > 0.0)) {
                finite = false;
                continue;
            }
            v /= std::sqrt(nrm2);
            for (std::size_t k = 0; k < st.n_outcomes; ++k) {
                if (st.class_of[d][k] == c) st.local_weights[d * st.n_outcomes + k] *= nrm2;
            }
        }
    }
    for (std::size_t k = 0; k < st.n_outcomes; ++k) {
        st.weights[k] += h6 * (wk.s1.dw[k] + 2.0 * wk.s2.dw[k] + 2.0 * wk.s3.dw[k] + wk.s4.dw[k]);
        finite = finite && std::isfinite(st.weights[k]);
    }
    for (std::size_t i = 0; i < st.local_weights.size(); ++i) {
        st.local_weights[i] +=
            h6 * (wk.s1.dlocal[i] + 2.0 * wk.s2.dlocal[i] + 2.0 * wk.s3.dlocal[i] + wk.s4.dlocal[i]);
    }
    st.time += dt;
    if (!finite) throw BlowupError(st.time, "non-finite branch state");
    detail::clamp_weights(st.weights);
}

double BranchModel::oneway_rate(std::size_t d, std::size_t k, std::size_t m, const BranchState& st) const {
    Moments mo;
    moments(st, mo);
    return 2.0 * s_.zeta * mo.x[d][st.class_of[d][k]] * mo.p[d][st.class_of[d][m]];
}

double BranchModel::pair_asymmetry(std::size_t k, std::size_t m, const BranchState& st) const {
    Moments mo;
    moments(st, mo);
    double acc = 0.0;
    for (std::size_t d = 0; d < st.n_detectors; ++d) {
        const std::size_t ck = st.class_of[d][k];
        const std::size_t cm = st.class_of[d][m];
        acc += mo.x[d][ck] * mo.p[d][cm] - mo.x[d][cm] * mo.p[d][ck];
    }
    return 2.0 * s_.zeta * acc;
}

void BranchModel::pair_asymmetries(const BranchState& st, std::vector<double>& out) const {
    thread_local Moments mo;
    moments(st, mo);
    out.clear();
    for (std::size_t k = 0; k < st.n_outcomes; ++k) {
        for (std::size_t m = k + 1; m < st.n_outcomes; ++m) {
            double acc = 0.0;
            for (std::size_t d = 0; d < st.n_detectors; ++d) {
                const std::size_t ck = st.class_of[d][k];
                const std::size_t cm = st.class_of[d][m];
                acc += mo.x[d][ck] * mo.p[d][cm] - mo.x[d][cm] * mo.p[d][ck];
            }
            out.push_back(2.0 * s_.zeta * acc);
        }
    }
}

double BranchModel::detector_purity(std::size_t d, const BranchState& st) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < st.n_outcomes; ++k) {
        for (std::size_t l = 0; l < st.n_outcomes; ++l) {
            acc += st.weights[k] * st.weights[l] * std::norm(st.phi(d, k).dot(st.phi(d, l)));
        }
    }
    return acc;
}

FactoredState BranchModel::to_factored(const BranchState& st) const {
    FactoredState f;
    f.n_outcomes = st.n_outcomes;
    f.n_detectors = st.n_detectors;
    f.weights = st.weights;
    f.local_weights = st.local_weights;
    f.time = st.time;
    f.blocks.resize(st.n_detectors * st.n_outcomes * st.n_outcomes);
    for (std::size_t d = 0; d < st.n_detectors; ++d) {
        for (std::size_t k = 0; k < st.n_outcomes; ++k) {
            for (std::size_t l = 0; l < st.n_outcomes; ++l) f.block(d, k, l) = st.phi(d, k) * st.phi(d, l).adjoint();
        }
    }
    return f;
}

}  // namespace collapse
