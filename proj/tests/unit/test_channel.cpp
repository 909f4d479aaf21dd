#include "helpers.hpp"

#include "vaecme/channel/dataset.hpp"
#include "vaecme/channel/observation.hpp"
#include "vaecme/core/dense.hpp"
#include "vaecme/io/binary.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace vaecme;
using namespace vaecme::channel;
using namespace vaecme::test;
using std::numbers::pi;

namespace {

double integrate(const AngularSpectrum& g, const Quadrature& q)
{
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        s += q.weights[i] * g(q.nodes[i]);
    return s;
}

double frob(const ComplexTensor& a)
{
    return a.norm();
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("vaecme_" + name + "_" + std::to_string(::getpid()));
}

} // namespace

TEST_CASE("cluster parameter sampling")
{
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto d = sample_cluster_params(rng, 1, 1);
        CHECK(d.gains == std::vector<double>{1.0});
    }

    std::array<double, 3> mean{};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const auto d = sample_cluster_params(rng, 3, 2);
        d.validate();
        for (int p = 0; p < 3; ++p)
            mean[static_cast<std::size_t>(p)] += d.gains[static_cast<std::size_t>(p)] / draws;
        for (double a : d.rx_angles)
            REQUIRE(std::abs(a) <= pi / 3);
        for (double a : d.tx_angles)
            REQUIRE(std::abs(a) <= pi / 3);
    }
    for (double m : mean)
        CHECK(std::abs(m - 1.0 / 3.0) < 0.01);

    ClusterParams bad{{0.5, 0.4}, {0.0, 0.1}, {}, {0.1, 0.1}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("steering vector")
{
    const auto a0 = steering_vector(0.0, 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(std::abs(a0[i] - cplx{1.0, 0.0}) < 1e-15);
    const auto a = steering_vector(pi / 6, 2);
    CHECK(std::abs(a[0] - cplx{1.0, 0.0}) < 1e-15);
    CHECK(std::abs(a[1] - cplx{0.0, -1.0}) < 1e-15);
    const auto b = steering_vector(0.7, 16);
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(std::abs(std::abs(b[i]) - 1.0) < 1e-15);
}

TEST_CASE("angular power spectrum")
{
    SUBCASE("integrates to one")
    {
        // a wide spread is resolved by the uniform 4096-point trapezoid rule
        const AngularSpectrum wide({0.3, 0.7}, {-0.4, 0.6}, {deg_to_rad(40.0), deg_to_rad(40.0)});
        CHECK(std::abs(integrate(wide, trapezoid_rule(4096)) - 1.0) < 1e-6);
        // narrow spreads need the graded rule: the cusp costs ~(h/b)^2/12 on a uniform grid
        for (double spread : {2.0, 0.5, 1e-2}) {
            const AngularSpectrum g({0.2, 0.5, 0.3}, {-0.9, 0.1, 0.95}, std::vector<double>(3, deg_to_rad(spread)));
            CHECK(std::abs(integrate(g, spectrum_rule(g)) - 1.0) < 1e-10);
        }
        // truncation: a cluster near the edge still integrates to one
        const AngularSpectrum edge({1.0}, {3.0}, {deg_to_rad(30.0)});
        CHECK(std::abs(integrate(edge, spectrum_rule(edge)) - 1.0) < 1e-10);
    }

    SUBCASE("single cluster peaks at the nearest grid point and is nonnegative")
    {
        const double center = 0.4321;
        const AngularSpectrum g({1.0}, {center}, {deg_to_rad(2.0)});
        const auto grid = trapezoid_rule(4096);
        std::size_t arg = 0, nearest = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(g(grid.nodes[i]) >= 0.0);
            if (g(grid.nodes[i]) > g(grid.nodes[arg]))
                arg = i;
            if (std::abs(grid.nodes[i] - center) < std::abs(grid.nodes[nearest] - center))
                nearest = i;
        }
        CHECK(arg == nearest);
    }
}

TEST_CASE("channel covariance matrix")
{
    SUBCASE("rank-one limit for a vanishing spread")
    {
        const double theta = 0.3;
        const AngularSpectrum g({1.0}, {theta}, {1e-4});
        const std::size_t n = 16;
        const auto c = build_ccm(g, n);
        Eigen::SelfAdjointEigenSolver<MatrixXc> es(to_eigen(c));
        CHECK(es.eigenvalues().maxCoeff() >= 0.99 * n);
        const auto a = steering_vector(theta, n);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                err = std::max(err, std::abs(c(i, j) - a[i] * std::conj(a[j])));
        CHECK(err < 0.02);
    }

    SUBCASE("unit diagonal, Hermitian, PSD")
    {
        Rng rng(3);
        for (int rep = 0; rep < 5; ++rep) {
            const auto d = sample_cluster_params(rng, 3, 1);
            const auto c = build_ccm(AngularSpectrum::rx_side(d), 32);
            for (std::size_t i = 0; i < 32; ++i)
                CHECK(std::abs(c(i, i) - cplx{1.0, 0.0}) < 1e-12);
            CHECK(c == c.adjoint());
        }
    }

    SUBCASE("quadrature refinement changes C by less than 1e-6")
    {
        for (double spread : {2.0, 10.0, 1e-3}) {
            const AngularSpectrum g({0.6, 0.4}, {-0.5, 0.8}, {deg_to_rad(spread), deg_to_rad(spread)});
            const auto c0 = toeplitz_from_first_row(ccm_first_row(g, 64, 0));
            const auto c1 = toeplitz_from_first_row(ccm_first_row(g, 64, 1));
            CHECK(frob(c1 - c0) < 1e-6);
        }
    }

    SUBCASE("first row matches a direct dense quadrature of a a^H")
    {
        const AngularSpectrum g({1.0}, {0.2}, {deg_to_rad(5.0)});
        const auto rule = spectrum_rule(g);
        const std::size_t n = 6;
        ComplexTensor dense({n, n});
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto a = steering_vector(rule.nodes[q], n);
            const double w = rule.weights[q] * g(rule.nodes[q]);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    dense(i, j) += w * a[i] * std::conj(a[j]);
        }
        const auto c = toeplitz_from_first_row(ccm_first_row(g, n));
        CHECK(max_abs_diff(c, (1.0 / dense(0, 0).real()) * dense) < 1e-12);
    }
}

TEST_CASE("channel sampling")
{
    SUBCASE("sample covariance matches the MIMO Kronecker covariance")
    {
        Rng rng(5);
        const auto d = sample_cluster_params(rng, 2, 2, deg_to_rad(10.0));
        const auto kc = build_kron_ccm(d, {4, 2});
        const auto c = kc.dense();
        const std::size_t n = 8, draws = 100000;
        ComplexTensor acc({n, n});
        ComplexTensor mean = ComplexTensor::zeros(n);
        for (std::size_t t = 0; t < draws; ++t) {
            const auto h = sample_channel(kc, rng);
            for (std::size_t i = 0; i < n; ++i) {
                mean[i] += h[i];
                for (std::size_t j = 0; j < n; ++j)
                    acc(i, j) += h[i] * std::conj(h[j]);
            }
        }
        acc = (1.0 / draws) * acc;
        mean = (1.0 / draws) * mean;
        CHECK(frob(acc - c) / frob(c) < 0.05);
        CHECK(mean.norm() < 0.05 * std::sqrt(8.0));
    }

    SUBCASE("identity covariance gives unit variance entries")
    {
        Rng rng(6);
        KronCovariance kc{ComplexTensor::identity(8), ComplexTensor::identity(1)};
        std::vector<double> var(8, 0.0);
        const int draws = 100000;
        for (int t = 0; t < draws; ++t) {
            const auto h = sample_channel(kc, rng);
            for (std::size_t i = 0; i < 8; ++i)
                var[i] += std::norm(h[i]) / draws;
        }
        for (double v : var)
            CHECK(std::abs(v - 1.0) < 0.05);
    }

    SUBCASE("narrow spreads need the regularized Cholesky but still sample")
    {
        Rng rng(7);
        const auto d = sample_cluster_params(rng, 1, 1, deg_to_rad(2.0));
        const auto h = sample_channel(build_kron_ccm(d, {64, 1}), rng);
        CHECK(h.all_finite());
    }
}

TEST_CASE("observation model")
{
    Rng rng(8);
    SUBCASE("noiseless observation is A h")
    {
        auto m = make_model({4, 2}, 0.0);
        const auto h = random_vector(8, rng);
        CHECK(make_observation(h, m, rng) == matmul(m.dense(), h));
        CHECK(max_abs_diff(m.apply_adjoint(m.apply(h)), h) < 1e-12);
    }

    SUBCASE("noise power")
    {
        auto m = make_model({16, 1}, 0.3);
        const auto h = ComplexTensor::zeros(16);
        double acc = 0.0;
        const int draws = 100000;
        for (int t = 0; t < draws; ++t)
            acc += make_observation(h, m, rng).squared_norm() / 16.0;
        CHECK(std::abs(acc / draws - 0.3) < 0.03 * 0.3);
    }

    SUBCASE("snr definition")
    {
        CHECK(noise_variance_from_snr_db(10.0, 1) == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(noise_variance_from_snr_db(0.0, 4) == doctest::Approx(4.0).epsilon(1e-14));
    }

    SUBCASE("dft pilots")
    {
        const auto one = dft_pilots(1, 3, true);
        CHECK(one.x == ComplexTensor::identity(1));
        CHECK(max_abs_diff(one.a, ComplexTensor::identity(3)) == 0.0);

        const auto p = dft_pilots(4, 8, true);
        CHECK(max_abs_diff(matmul(p.a.adjoint(), p.a), ComplexTensor::identity(32)) < 1e-10);
        const auto q = UnitaryTransform::kron({8, 4}).dense();
        const auto at = matmul(p.a, q.adjoint());
        CHECK(max_abs_diff(matmul(at, at.adjoint()), ComplexTensor::identity(32)) < 1e-10);

        // the structured adjoint agrees with the dense one
        auto m = make_model({8, 4}, 1.0);
        const auto y = random_vector(32, rng);
        CHECK(max_abs_diff(m.apply_adjoint(y), matmul(p.a.adjoint(), y)) < 1e-12);
    }
}

TEST_CASE("dataset generation and persistence")
{
    DatasetConfig cfg;
    cfg.dims = {16, 1};
    cfg.clusters = 2;
    cfg.seed = 42;
    cfg.n_train = 600;
    cfg.n_val = 100;
    cfg.n_test = 300;

    const auto d = generate_dataset(cfg);
    CHECK(d.size() == 1000);
    CHECK(std::abs(d.mean_power(Split::train) - 1.0) < 1e-6);
    CHECK(std::abs(d.mean_power(Split::test) - 1.0) < 0.1);
    CHECK(d.range(Split::val) == std::pair<std::size_t, std::size_t>{600, 700});

    SUBCASE("reproducible and round trips bit-exactly")
    {
        const auto again = generate_dataset(cfg);
        CHECK(again == d);
        const auto path = temp_file("ds");
        save_dataset(d, path);
        const auto back = load_dataset(path);
        CHECK(back == d);
        const auto path2 = temp_file("ds2");
        save_dataset(back, path2);
        std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
        std::filesystem::remove(path);
        std::filesystem::remove(path2);
    }

    SUBCASE("version mismatch is rejected")
    {
        const auto path = temp_file("dsv");
        save_dataset(d, path);
        {
            std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
            f.seekp(8);
            const std::uint32_t v = 99;
            f.write(reinterpret_cast<const char*>(&v), 4);
        }
        CHECK_THROWS_AS(load_dataset(path), io::FormatError);
        std::filesystem::remove(path);
        CHECK_THROWS(load_dataset(path));
    }

    SUBCASE("defaults and desk scale")
    {
        DatasetConfig def;
        CHECK(def.n_train == 180000);
        CHECK(def.n_val == 10000);
        CHECK(def.n_test == 10000);
        def.apply_desk_scale();
        CHECK(def.total() == 24000);
    }

    SUBCASE("stored covariance describes the stored channels")
    {
        const auto c = d.covariance(5);
        CHECK(std::abs(c.rx(0, 0).real() - d.scale * d.scale) < 1e-12);
    }

    SUBCASE("toy scenario")
    {
        DatasetConfig t = cfg;
        t.scenario = Scenario::toy;
        t.dims = {32, 1};
        const auto toy = generate_dataset(t);
        CHECK(toy.deltas.empty());
        CHECK(toy.toy_spectrum.size() == 32);
        CHECK(std::abs(toy.mean_power(Split::train) - 1.0) < 1e-6);
        toy.toy_covariance().validate();
    }
}
