#include "helpers.hpp"

#include "vaecme/core/circulant.hpp"
#include "vaecme/core/fft.hpp"

#include <doctest.h>

using namespace vaecme;
using namespace vaecme::test;

TEST_CASE("dft of an impulse is flat")
{
    auto e0 = ComplexTensor::zeros(4);
    e0[0] = 1.0;
    const auto f = dft_apply(e0, Direction::forward);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(f[i] - cplx{0.5, 0.0}) < 1e-15);
}

TEST_CASE("dft matches the naive sum for power-of-two and odd lengths")
{
    Rng rng(11);
    for (std::size_t n : {1u, 2u, 8u, 12u, 17u, 45u, 64u}) {
        const auto x = random_vector(n, rng);
        CHECK(max_abs_diff(dft_apply(x, Direction::forward), naive_dft(x, false)) < 1e-10);
        CHECK(max_abs_diff(dft_apply(x, Direction::adjoint), naive_dft(x, true)) < 1e-10);
    }
}

TEST_CASE("dft roundtrip is the identity")
{
    Rng rng(5);
    for (std::size_t n = 1; n <= 64; ++n) {
        const auto x = random_vector(n, rng);
        const auto back = dft_apply(dft_apply(x, Direction::forward), Direction::adjoint);
        CHECK((back - x).norm() <= 1e-10 * x.norm());
    }
}

TEST_CASE("dft rejects wrong length")
{
    const auto& plan = fft_plan(8);
    std::vector<cplx> x(7);
    CHECK_THROWS_AS(plan.transform(x, Direction::forward), std::invalid_argument);
}

TEST_CASE("kron dft with a single transmit antenna equals the plain dft")
{
    Rng rng(3);
    const auto x = random_vector(16, rng);
    CHECK(max_abs_diff(kron_dft_apply(x, {16, 1}, Direction::forward), dft_apply(x, Direction::forward)) < 1e-14);
}

TEST_CASE("kron dft matches the dense Kronecker product")
{
    Rng rng(8);
    for (KronDims d : {KronDims{4, 2}, KronDims{8, 4}, KronDims{6, 3}, KronDims{3, 5}}) {
        const auto x = random_vector(d.size(), rng);
        const auto dense = kron(dft_matrix(d.n_tx), dft_matrix(d.n_rx));
        CHECK(max_abs_diff(kron_dft_apply(x, d, Direction::forward), matmul(dense, x)) < 1e-10);
        CHECK(max_abs_diff(kron_dft_apply(x, d, Direction::adjoint), matmul(dense.adjoint(), x)) < 1e-10);
        const auto back = kron_dft_apply(kron_dft_apply(x, d, Direction::forward), d, Direction::adjoint);
        CHECK((back - x).norm() <= 1e-10 * x.norm());
    }
    CHECK_THROWS_AS(kron_dft_apply(random_vector(7, rng), {4, 2}, Direction::forward), std::invalid_argument);
}

TEST_CASE("circulant apply")
{
    Rng rng(21);
    std::uniform_real_distribution<double> u(0.1, 3.0);

    SUBCASE("unit spectrum is the identity")
    {
        const auto x = random_vector(8, rng);
        const auto spec = CirculantSpec::simo(std::vector<double>(8, 1.0));
        CHECK(max_abs_diff(circulant_apply(spec, x), x) < 1e-14);
    }

    SUBCASE("matches the dense F^H diag(c) F product")
    {
        std::vector<double> c(8);
        for (auto& v : c)
            v = u(rng);
        const auto spec = CirculantSpec::simo(c);
        const auto f = dft_matrix(8);
        ComplexTensor d({8, 8});
        for (std::size_t i = 0; i < 8; ++i)
            d(i, i) = c[i];
        const auto dense = matmul(matmul(f.adjoint(), d), f);
        const auto x = random_vector(8, rng);
        CHECK(rel_error(circulant_apply(spec, x), matmul(dense, x)) < 1e-10);
    }

    SUBCASE("block-circulant matches the dense Q^H diag(c) Q product")
    {
        const KronDims dims{4, 2};
        std::vector<double> c(8);
        for (auto& v : c)
            v = u(rng);
        const auto q = kron(dft_matrix(2), dft_matrix(4));
        ComplexTensor d({8, 8});
        for (std::size_t i = 0; i < 8; ++i)
            d(i, i) = c[i];
        const auto dense = matmul(matmul(q.adjoint(), d), q);
        const auto x = random_vector(8, rng);
        CHECK(rel_error(circulant_apply(CirculantSpec::block(c, dims), x), matmul(dense, x)) < 1e-10);
    }

    SUBCASE("spectrum and its reciprocal compose to the identity")
    {
        std::vector<double> c(32), inv(32);
        for (std::size_t i = 0; i < 32; ++i) {
            c[i] = u(rng);
            inv[i] = 1.0 / c[i];
        }
        const auto x = random_vector(32, rng);
        const auto y = circulant_apply(CirculantSpec::simo(inv), circulant_apply(CirculantSpec::simo(c), x));
        CHECK((y - x).norm() <= 1e-9 * x.norm());
    }

    SUBCASE("errors")
    {
        CHECK_THROWS_AS(circulant_apply(CirculantSpec::simo({1.0, 0.0}), random_vector(2, rng)),
                        std::invalid_argument);
        CHECK_THROWS_AS(circulant_apply(CirculantSpec::simo({1.0, -2.0}), random_vector(2, rng)),
                        std::invalid_argument);
        CHECK_THROWS_AS(circulant_apply(CirculantSpec::simo({1.0, 1.0}), random_vector(3, rng)),
                        std::invalid_argument);
    }
}

TEST_CASE("toeplitz from first row")
{
    const auto eye = toeplitz_from_first_row(ComplexTensor::vector({1.0, 0.0, 0.0}));
    CHECK(eye == ComplexTensor::identity(3));

    const auto t = toeplitz_from_first_row(ComplexTensor::vector({2.0, cplx{0.0, 1.0}}));
    CHECK(t(0, 0) == cplx{2.0, 0.0});
    CHECK(t(0, 1) == cplx{0.0, 1.0});
    CHECK(t(1, 0) == cplx{0.0, -1.0});
    CHECK(t(1, 1) == cplx{2.0, 0.0});

    Rng rng(2);
    auto r = random_vector(6, rng);
    r[0] = r[0].real();
    const auto m = toeplitz_from_first_row(r);
    CHECK(m == m.adjoint());

    CHECK_THROWS_AS(toeplitz_from_first_row(ComplexTensor::vector({cplx{1.0, 0.5}})), std::invalid_argument);
}
