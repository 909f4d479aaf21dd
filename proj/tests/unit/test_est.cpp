#include "helpers.hpp"

#include "vaecme/channel/dataset.hpp"
#include "vaecme/est/lmmse.hpp"

#include <doctest.h>

#include <cmath>

using namespace vaecme;
using namespace vaecme::est;
using namespace vaecme::test;

namespace {

// random Hermitian positive definite matrix with a condition number of a few hundred
ComplexTensor random_hpd(std::size_t n, Rng& rng)
{
    const auto g = random_matrix(n, n, rng);
    MatrixXc m = to_eigen(g) * to_eigen(g).adjoint() / static_cast<double>(n);
    m += 0.05 * MatrixXc::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    return from_eigen(m);
}

ComplexTensor scaled_identity(std::size_t n, double s)
{
    return cplx{s, 0.0} * ComplexTensor::identity(n);
}

std::vector<double> random_spectrum(std::size_t n, Rng& rng)
{
    std::vector<double> c(n);
    for (auto& v : c)
        v = std::exp(2.0 * standard_normal(rng));
    return c;
}

ComplexTensor add_noise(const ComplexTensor& y, double nv, Rng& rng)
{
    ComplexTensor out = y;
    for (auto& v : out.data())
        v += std::sqrt(nv) * standard_complex_normal(rng);
    return out;
}

} // namespace

TEST_CASE("dense LMMSE: scalar Wiener filter and noiseless limit")
{
    Rng rng(3);
    const std::size_t n = 6;
    const auto y = random_vector(n, rng);
    const auto eye = ComplexTensor::identity(n);
    const auto h = cond_lmmse_dense(ComplexTensor::zeros(n), eye, eye, eye, y);
    CHECK(max_abs_diff(h, cplx{0.5, 0.0} * y) < 1e-14);

    // A unitary, noise -> 0 returns A^H y
    const auto obs = channel::make_model({3, 2}, 0.0);
    const auto a = obs.dense();
    const auto c = random_hpd(n, rng);
    const auto mu = random_vector(n, rng);
    const auto h0 = cond_lmmse_dense(mu, c, a, scaled_identity(n, 1e-12), y);
    CHECK(rel_error(h0, obs.apply_adjoint(y)) < 1e-9);
}

TEST_CASE("dense LMMSE agrees with the information form")
{
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 8;
        const auto c = random_hpd(n, rng);
        const auto sigma = random_hpd(n, rng);
        const auto a = random_matrix(n, n, rng);
        const auto mu = random_vector(n, rng);
        const auto y = random_vector(n, rng);
        const auto d = cond_lmmse_dense(mu, c, a, sigma, y);
        const auto f = cond_lmmse_information_form(mu, c, a, sigma, y);
        CHECK(rel_error(f, d) < 1e-8);
    }
}

TEST_CASE("dense LMMSE flags regularization of a singular system")
{
    const std::size_t n = 4;
    bool reg = false;
    const auto zero = ComplexTensor({n, n});
    const auto eye = ComplexTensor::identity(n);
    Rng rng(1);
    const auto y = random_vector(n, rng);
    const auto h = cond_lmmse_dense(ComplexTensor::zeros(n), zero, eye, zero, y, &reg);
    CHECK(reg);
    CHECK(h.all_finite());
}

TEST_CASE("fast path equals the dense conditional mean")
{
    Rng rng(11);
    const std::vector<KronDims> shapes{{8, 1}, {16, 1}, {64, 1}, {4, 4}, {8, 2}, {2, 8}, {16, 4}};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto dims = shapes[static_cast<std::size_t>(trial) % shapes.size()];
        const auto n = dims.size();
        const auto obs = channel::make_model(dims, 0.0);
        const auto spec = dims.n_tx == 1 ? CirculantSpec::simo(random_spectrum(n, rng))
                                         : CirculantSpec::block(random_spectrum(n, rng), dims);
        const double s2 = std::exp(2.0 * standard_normal(rng));
        const auto mu = random_vector(n, rng);
        const auto y = random_vector(n, rng);
        const auto fast = cond_lmmse_fast(mu, spec, s2, y, obs);
        const auto dense = cond_lmmse_dense(mu, spec.dense(), obs.dense(), scaled_identity(n, s2), y);
        worst = std::max(worst, rel_error(fast, dense));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("fast path: shrinkage, prior-mean limit and errors")
{
    Rng rng(2);
    const std::size_t n = 16;
    const auto obs = channel::make_model({n, 1}, 0.0);
    const auto y = random_vector(n, rng);
    const double gamma = 3.0, s2 = 0.5;
    const auto h = cond_lmmse_fast(ComplexTensor::zeros(n), CirculantSpec::simo(std::vector<double>(n, gamma)), s2,
                                   y, obs);
    CHECK(max_abs_diff(h, cplx{gamma / (gamma + s2), 0.0} * y) < 1e-13);

    const auto mu = random_vector(n, rng);
    const auto spec = CirculantSpec::simo(random_spectrum(n, rng));
    CHECK(rel_error(cond_lmmse_fast(mu, spec, 1e12, y, obs), mu) < 1e-9);
    CHECK_THROWS_AS(cond_lmmse_fast(mu, spec, 0.0, y, obs), std::invalid_argument);
    CHECK_THROWS_AS(cond_lmmse_fast(mu, spec, -1.0, y, obs), std::invalid_argument);
}

TEST_CASE("LS estimate")
{
    Rng rng(7);
    const auto obs = channel::make_model({4, 4}, 0.0);
    const auto h = random_vector(16, rng);
    CHECK(max_abs_diff(ls_estimate(obs.apply(h), obs), h) < 1e-14);
    const auto simo = channel::make_model({32, 1}, 0.0);
    CHECK(max_abs_diff(ls_estimate(h, channel::make_model({16, 1}, 0.0)), h) == 0.0);

    // NMSE = 1/SNR for unit-power channels
    const double nv = channel::noise_variance_from_snr_db(10.0, 1);
    double err = 0.0, pow = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto x = random_vector(32, rng);
        const auto est = ls_estimate(add_noise(simo.apply(x), nv, rng), simo);
        err += (est - x).squared_norm();
        pow += 32.0;
    }
    CHECK(std::abs(err / pow - 0.1) < 0.003);
}

TEST_CASE("genie-cov estimate")
{
    Rng rng(13);
    {
        const KronDims dims{6, 1};
        const auto obs = channel::make_model(dims, 0.0);
        const channel::KronCovariance eye{ComplexTensor::identity(6), ComplexTensor::identity(1)};
        const auto y = random_vector(6, rng);
        CHECK(max_abs_diff(genie_cov_estimate(y, eye, obs, 0.25), cplx{1.0 / 1.25, 0.0} * y) < 1e-14);
    }

    // structured filter vs the dense formula on a 3GPP Kronecker covariance
    const KronDims dims{8, 4};
    const auto obs = channel::make_model(dims, 0.0);
    for (int t = 0; t < 5; ++t) {
        const auto d = channel::sample_cluster_params(rng, 3, 2);
        const auto kc = channel::build_kron_ccm(d, dims);
        const auto y = random_vector(dims.size(), rng);
        const double s2 = 0.3;
        const auto g = genie_cov_estimate(y, kc, obs, s2);
        const auto ref = cond_lmmse_dense(ComplexTensor::zeros(dims.size()), kc.dense(), obs.dense(),
                                          scaled_identity(dims.size(), s2), y);
        CHECK(rel_error(g, ref) < 1e-9);
    }

    // Monte-Carlo MSE against tr(C - C A^H (A C A^H + s2 I)^-1 A C) / N
    const auto d = channel::sample_cluster_params(rng, 2, 2, channel::deg_to_rad(10.0));
    const auto kc = channel::build_kron_ccm(d, dims);
    const double s2 = channel::noise_variance_from_snr_db(5.0, dims.n_tx);
    const MatrixXc c = to_eigen(kc.dense());
    const MatrixXc a = to_eigen(obs.dense());
    const auto n = static_cast<Eigen::Index>(dims.size());
    const MatrixXc s = a * c * a.adjoint() + s2 * MatrixXc::Identity(n, n);
    const MatrixXc post = c - c * a.adjoint() * s.ldlt().solve(a * c);
    const double mmse = post.trace().real() / static_cast<double>(n);
    const KronLmmse filt(kc);
    double err = 0.0;
    const int samples = 10000;
    for (int i = 0; i < samples; ++i) {
        const auto h = channel::sample_channel(kc, rng);
        const auto y = add_noise(obs.apply(h), s2, rng);
        err += (filt.apply(obs.apply_adjoint(y), s2) - h).squared_norm();
    }
    CHECK(std::abs(err / (samples * static_cast<double>(n)) / mmse - 1.0) < 0.03);
}

TEST_CASE("global sample covariance")
{
    Rng rng(17);
    const auto h0 = random_vector(5, rng);
    const auto g = fit_global_cov(std::vector<ComplexTensor>(7, h0));
    CHECK(g.count == 7);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(std::abs(g.c(i, j) - h0[i] * std::conj(h0[j])) < 1e-13);
    CHECK_THROWS_AS(fit_global_cov({}), std::invalid_argument);

    // sample covariance of N_C(0, C), N = 8
    const auto c = random_hpd(8, rng);
    const MatrixXc l = hpd_cholesky(to_eigen(c), 0.0);
    std::vector<ComplexTensor> xs;
    for (int i = 0; i < 100000; ++i)
        xs.push_back(from_eigen_vector(l * to_eigen_vector(random_vector(8, rng))));
    const auto fit = fit_global_cov(xs);
    CHECK((fit.c - c).norm() / c.norm() < 0.05);
    // exact Hermitian symmetry
    CHECK(max_abs_diff(fit.c, fit.c.adjoint()) == 0.0);

    // filter equals the dense formula
    const auto obs = channel::make_model({8, 1}, 0.0);
    const auto y = random_vector(8, rng);
    const auto ref = cond_lmmse_dense(ComplexTensor::zeros(8), fit.c, obs.dense(), scaled_identity(8, 0.2), y);
    CHECK(rel_error(global_cov_estimate(y, fit, obs, 0.2), ref) < 1e-9);
}

TEST_CASE("global-cov never beats genie-cov on 3GPP data")
{
    channel::DatasetConfig cfg;
    cfg.dims = {16, 1};
    cfg.clusters = 3;
    cfg.n_train = 3000;
    cfg.n_val = 10;
    cfg.n_test = 500;
    cfg.seed = 4;
    const auto data = channel::generate_dataset(cfg);
    std::vector<ComplexTensor> train;
    const auto [tb, te] = data.range(channel::Split::train);
    for (auto i = tb; i < te; ++i)
        train.push_back(data.channel(i));
    const GlobalLmmse global(fit_global_cov(train));
    const auto obs = channel::make_model(cfg.dims, 0.0);
    const auto [b, e] = data.range(channel::Split::test);
    Rng rng(9);
    for (double snr : {-10.0, 0.0, 10.0, 20.0, 30.0}) {
        const double s2 = channel::noise_variance_from_snr_db(snr, 1);
        double eg = 0.0, eo = 0.0;
        for (auto i = b; i < e; ++i) {
            const auto h = data.channel(i);
            const auto ls = obs.apply_adjoint(add_noise(obs.apply(h), s2, rng));
            eg += (global.apply(ls, s2) - h).squared_norm();
            eo += (KronLmmse(data.covariance(i)).apply(ls, s2) - h).squared_norm();
        }
        CHECK_MESSAGE(eg >= eo, "snr " << snr);
    }
}
