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

#include "collapse/matcore.hpp"

#include <cmath>
#include <string>

namespace collapse {

Operator::Operator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
        throw StructuralError("operator must be square, got " + std::to_string(m_.rows()) + "x" +
                              std::to_string(m_.cols()));
    }
}

Operator Operator::hermitian(Matrix m) {
    Operator op(std::move(m));
    const double r = op.hermiticity_residual();
    if (r > kHermitianTol) {
        throw StructuralError("operator tagged Hermitian has residual " + std::to_string(r));
    }
    op.hermitian_ = true;
    return op;
}

Operator Operator::identity(std::size_t dim) {
    return hermitian(Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
}

Operator Operator::zero(std::size_t dim) {
    return hermitian(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
}

Operator Operator::projector(const Vector& v) { return hermitian(v * v.adjoint()); }

Operator Operator::outer(const Vector& ket, const Vector& bra) {
    if (ket.size() != bra.size()) throw StructuralError("outer product of vectors with different sizes");
    return Operator(ket * bra.adjoint());
}

double Operator::hermiticity_residual() const { return max_abs_diff(m_, m_.adjoint()); }

Operator Operator::operator+(const Operator& o) const {
    if (dim() != o.dim()) throw StructuralError("dimension mismatch in operator sum");
    return Operator(m_ + o.m_);
}

Operator Operator::operator-(const Operator& o) const {
    if (dim() != o.dim()) throw StructuralError("dimension mismatch in operator difference");
    return Operator(m_ - o.m_);
}

Operator Operator::operator*(const Operator& o) const {
    if (dim() != o.dim()) throw StructuralError("dimension mismatch in operator product");
    return Operator(m_ * o.m_);
}

Operator Operator::operator*(cplx s) const { return Operator(m_ * s); }

ModeBasis::ModeBasis(int n_levels) : n_(n_levels) {
    if (n_levels < 2) throw StructuralError("mode basis needs n_levels >= 2, got " + std::to_string(n_levels));
}

Operator kron(const Operator& a, const Operator& b, std::size_t max_dim) {
    const std::size_t na = a.dim();
    const std::size_t nb = b.dim();
    if (na != 0 && nb > max_dim / na) {
        throw SizeError("kron dimension " + std::to_string(na) + "*" + std::to_string(nb) + " exceeds cap " +
                        std::to_string(max_dim));
    }
    const auto n = static_cast<Eigen::Index>(na * nb);
    Matrix out(n, n);
    const auto ib = static_cast<Eigen::Index>(nb);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(na); ++i) {
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(na); ++j) {
            out.block(i * ib, j * ib, ib, ib) = a.matrix()(i, j) * b.matrix();
        }
    }
    return Operator(std::move(out));
}

Operator lowering_operator(const ModeBasis& basis) {
    const int n = basis.n_levels();
    Matrix a = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return Operator(std::move(a));
}

Operator number_operator(const ModeBasis& basis) {
    const int n = basis.n_levels();
    Matrix m = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) m(k, k) = static_cast<double>(k);
    return Operator::hermitian(std::move(m));
}

Operator position_operator(const ModeBasis& basis) {
    const Matrix a = lowering_operator(basis).matrix();
    Matrix x = (a + a.adjoint()) / std::sqrt(2.0);
    return Operator::hermitian(std::move(x));
}

Operator momentum_operator(const ModeBasis& basis) {
    const Matrix a = lowering_operator(basis).matrix();
    Matrix p = cplx(0.0, 1.0) * (a.adjoint() - a) / std::sqrt(2.0);
    return Operator::hermitian(std::move(p));
}

Vector coherent_state(const ModeBasis& basis, cplx alpha) {
    const int n = basis.n_levels();
    Vector v(n);
    // alpha^k / sqrt(k!) by recurrence; the overall e^{-|alpha|^2/2} is
    // dropped because we renormalize anyway.
    cplx term = 1.0;
    for (int k = 0; k < n; ++k) {
        v(k) = term;
        term *= alpha / std::sqrt(static_cast<double>(k + 1));
    }
    return v / v.norm();
}

bool coherent_truncation_risky(const ModeBasis& basis, cplx alpha) {
    return std::norm(alpha) > basis.n_levels() / 4.0;
}

Operator embed_local(const Operator& local, std::span<const std::size_t> dims, std::size_t slot,
                     std::size_t max_dim) {
    if (slot >= dims.size()) throw StructuralError("embed slot out of range");
    if (dims[slot] != local.dim()) throw StructuralError("embedded operator does not match its factor dimension");
    std::size_t before = 1;
    std::size_t after = 1;
    for (std::size_t i = 0; i < slot; ++i) before *= dims[i];
    for (std::size_t i = slot + 1; i < dims.size(); ++i) after *= dims[i];
    Operator out = kron(Operator::identity(before), local, max_dim);
    return kron(out, Operator::identity(after), max_dim);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw StructuralError("shape mismatch in max_abs_diff");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace collapse
