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

#include "doctest.h"

#include "collapse/matcore.hpp"
#include "collapse/rng.hpp"
#include "test_util.hpp"

using namespace collapse;

TEST_CASE("kron of identities is identity") {
    const Operator i4 = kron(Operator::identity(2), Operator::identity(2));
    CHECK(i4.dim() == 4);
    CHECK(max_abs_diff(i4.matrix(), Matrix::Identity(4, 4)) == 0.0);
}

TEST_CASE("kron expands the definition") {
    Matrix z = Matrix::Zero(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    const Operator out = kron(Operator(z), Operator::identity(2));
    Matrix expect = Matrix::Zero(4, 4);
    expect.diagonal() << 1.0, 1.0, -1.0, -1.0;
    CHECK(max_abs_diff(out.matrix(), expect) == 0.0);
}

TEST_CASE("kron index layout and trace multiplicativity") {
    CounterRng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix a = testutil::random_matrix(rng, 2);
        const Matrix b = testutil::random_matrix(rng, 3);
        const Operator k = kron(Operator(a), Operator(b));
        CHECK(std::abs(k.trace() - a.trace() * b.trace()) < 1e-12);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) CHECK(k(i * 3 + r, j * 3 + c) == a(i, j) * b(r, c));
    }
}

TEST_CASE("kron rejects dimensions past the cap") {
    CHECK_THROWS_AS(kron(Operator::identity(64), Operator::identity(65)), SizeError);
    CHECK_NOTHROW(kron(Operator::identity(64), Operator::identity(64)));
    CHECK_THROWS_AS(kron(Operator::identity(4), Operator::identity(4), 8), SizeError);
}

TEST_CASE("kron associativity and trace cyclicity on random inputs") {
    CounterRng rng(5);
    for (int rep = 0; rep < 25; ++rep) {
        const Operator a(testutil::random_matrix(rng, 2));
        const Operator b(testutil::random_matrix(rng, 3));
        const Operator c(testutil::random_matrix(rng, 2));
        CHECK(max_abs_diff(kron(kron(a, b), c).matrix(), kron(a, kron(b, c)).matrix()) <= 1e-12);

        const Operator p(testutil::random_matrix(rng, 5));
        const Operator q(testutil::random_matrix(rng, 5));
        CHECK(std::abs((p * q).trace() - (q * p).trace()) <= 1e-12);
    }
}

TEST_CASE("operator construction checks") {
    CHECK_THROWS_AS(Operator(Matrix::Zero(2, 3)), StructuralError);
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(Operator::hermitian(m), StructuralError);
    CHECK_THROWS_AS(ModeBasis(1), StructuralError);
    CHECK_THROWS_AS(Operator::identity(2) * Operator::identity(3), StructuralError);
}

TEST_CASE("position operator at N=2") {
    const Operator x = position_operator(ModeBasis(2));
    CHECK(std::abs(x(0, 0)) == 0.0);
    CHECK(std::abs(x(0, 1) - 0.70710678118654752) < 1e-15);
    CHECK(std::abs(x(1, 0) - 0.70710678118654752) < 1e-15);
    CHECK(std::abs(x(1, 1)) == 0.0);
    CHECK(x.tagged_hermitian());
}

TEST_CASE("momentum operator at N=2") {
    const Operator p = momentum_operator(ModeBasis(2));
    CHECK(std::abs(p(0, 1) - cplx(0.0, -0.70710678118654752)) < 1e-15);
    CHECK(std::abs(p(1, 0) - cplx(0.0, 0.70710678118654752)) < 1e-15);
    CHECK(std::abs(p(0, 0)) == 0.0);
}

TEST_CASE("quadratures are Hermitian for N in 2..64") {
    for (int n = 2; n <= 64; ++n) {
        CHECK(position_operator(ModeBasis(n)).hermiticity_residual() <= 1e-12);
        CHECK(momentum_operator(ModeBasis(n)).hermiticity_residual() <= 1e-12);
    }
}

TEST_CASE("vacuum expectations vanish by parity") {
    const ModeBasis b(4);
    const Vector vac = coherent_state(b, 0.0);
    CHECK(std::abs(vac.dot(position_operator(b).matrix() * vac)) == 0.0);
    CHECK(std::abs(vac.dot(momentum_operator(b).matrix() * vac)) == 0.0);
}

TEST_CASE("canonical commutator up to the truncation artifact") {
    for (int n : {2, 4, 9, 16}) {
        const ModeBasis b(n);
        const Matrix x = position_operator(b).matrix();
        const Matrix p = momentum_operator(b).matrix();
        Matrix dev = x * p - p * x - cplx(0.0, 1.0) * Matrix::Identity(n, n);
        // [a, a^dagger] = 1 - N |N-1><N-1| on the truncated space, so the
        // top diagonal entry carries -iN.
        CHECK(std::abs(dev(n - 1, n - 1) - cplx(0.0, -static_cast<double>(n))) < 1e-12);
        dev(n - 1, n - 1) = 0.0;
        CHECK(max_abs(dev) < 1e-12);
    }
}

TEST_CASE("coherent states") {
    const ModeBasis b(8);
    const Vector vac = coherent_state(b, 0.0);
    CHECK(vac(0) == cplx(1.0, 0.0));
    CHECK(vac.tail(7).norm() == 0.0);

    CounterRng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const cplx alpha(4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0);
        CHECK(std::abs(coherent_state(ModeBasis(12), alpha).norm() - 1.0) < 1e-14);
    }

    const ModeBasis b16(16);
    const Vector one = coherent_state(b16, 1.0);
    const double nbar = one.dot(number_operator(b16).matrix() * one).real();
    CHECK(std::abs(nbar - 1.0) < 1e-6);

    CHECK_FALSE(coherent_truncation_risky(b16, 2.0));
    CHECK(coherent_truncation_risky(b16, 2.5));
}

TEST_CASE("embed_local places the factor") {
    const std::size_t dims[] = {2, 3, 2};
    const Operator x = position_operator(ModeBasis(3));
    const Operator e = embed_local(x, dims, 1);
    const Operator expect = kron(kron(Operator::identity(2), x), Operator::identity(2));
    CHECK(max_abs_diff(e.matrix(), expect.matrix()) == 0.0);
    CHECK_THROWS_AS(embed_local(x, dims, 0), StructuralError);
}
