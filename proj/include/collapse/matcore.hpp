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

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "collapse/error.hpp"

namespace collapse {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr std::size_t kDefaultMaxDim = 4096;
inline constexpr double kHermitianTol = 1e-12;

/// Dense complex square matrix. Immutable once built; every operation
/// returns a fresh value, so instances can be shared between trial workers.
class Operator {
public:
    Operator() = default;
    explicit Operator(Matrix m);

    /// Builds an operator tagged Hermitian; throws StructuralError if
    /// max|A - A^dagger| exceeds kHermitianTol.
    static Operator hermitian(Matrix m);
    static Operator identity(std::size_t dim);
    static Operator zero(std::size_t dim);
    static Operator projector(const Vector& bra_ket);
    static Operator outer(const Vector& ket, const Vector& bra);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& matrix() const noexcept { return m_; }
    cplx operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    bool tagged_hermitian() const noexcept { return hermitian_; }

    cplx trace() const { return m_.trace(); }
    Operator adjoint() const { return Operator(m_.adjoint()); }
    double hermiticity_residual() const;

    Operator operator+(const Operator& o) const;
    Operator operator-(const Operator& o) const;
    Operator operator*(const Operator& o) const;
    Operator operator*(cplx s) const;

private:
    Matrix m_;
    bool hermitian_ = false;
};

/// Fock truncation of a single detector mode.
class ModeBasis {
public:
    explicit ModeBasis(int n_levels);
    int n_levels() const noexcept { return n_; }

private:
    int n_;
};

/// Tensor product, row index i*b.dim + k. Throws SizeError past max_dim.
Operator kron(const Operator& a, const Operator& b, std::size_t max_dim = kDefaultMaxDim);

Operator lowering_operator(const ModeBasis& basis);
Operator number_operator(const ModeBasis& basis);
/// x = (a + a^dagger)/sqrt(2)
Operator position_operator(const ModeBasis& basis);
/// p = i(a^dagger - a)/sqrt(2)
Operator momentum_operator(const ModeBasis& basis);

/// Truncated coherent state, renormalized after truncation.
Vector coherent_state(const ModeBasis& basis, cplx alpha);
/// True when |alpha|^2 > n_levels/4, i.e. truncation is likely visible.
bool coherent_truncation_risky(const ModeBasis& basis, cplx alpha);

/// Lifts `local` to the slot-th factor of a product space with factor
/// dimensions `dims` (identity on every other factor).
Operator embed_local(const Operator& local, std::span<const std::size_t> dims, std::size_t slot,
                     std::size_t max_dim = kDefaultMaxDim);

double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& a);

}  // namespace collapse
