#include "vaecme/channel/model.hpp"

#include "vaecme/core/circulant.hpp"
#include "vaecme/core/dense.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vaecme::channel {

using std::numbers::pi;

void ClusterParams::validate(double sector) const
{
    const auto p = gains.size();
    if (p == 0)
        throw std::invalid_argument("cluster params: no clusters");
    if (rx_angles.size() != p || spreads.size() != p || !(tx_angles.empty() || tx_angles.size() == p))
        throw std::invalid_argument("cluster params: inconsistent cluster counts");
    double s = 0.0;
    for (double g : gains) {
        if (!(g >= 0.0))
            throw std::invalid_argument("cluster params: negative gain");
        s += g;
    }
    if (std::abs(s - 1.0) > 1e-12)
        throw std::invalid_argument("cluster params: gains sum to " + std::to_string(s));
    for (double sp : spreads)
        if (!(sp > 0.0) || !std::isfinite(sp))
            throw std::invalid_argument("cluster params: angular spread must be positive");
    for (const auto* v : {&rx_angles, &tx_angles})
        for (double a : *v)
            if (!(std::abs(a) <= sector))
                throw std::invalid_argument("cluster params: angle outside the sector");
}

ClusterParams sample_cluster_params(Rng& rng, std::size_t clusters, std::size_t sides, double spread_rad,
                                    double sector)
{
    if (clusters == 0)
        throw std::invalid_argument("sample_cluster_params: need at least one cluster");
    if (sides != 1 && sides != 2)
        throw std::invalid_argument("sample_cluster_params: side count must be 1 or 2");
    std::uniform_real_distribution<double> angle(-sector, sector);
    std::exponential_distribution<double> expo(1.0);
    ClusterParams d;
    // flat Dirichlet via normalized unit exponentials
    double total = 0.0;
    for (std::size_t p = 0; p < clusters; ++p) {
        d.gains.push_back(clusters == 1 ? 1.0 : expo(rng));
        total += d.gains.back();
    }
    for (auto& g : d.gains)
        g /= total;
    for (std::size_t p = 0; p < clusters; ++p) {
        d.rx_angles.push_back(angle(rng));
        if (sides == 2)
            d.tx_angles.push_back(angle(rng));
        d.spreads.push_back(spread_rad);
    }
    return d;
}

ComplexTensor steering_vector(double theta, std::size_t n)
{
    if (n == 0)
        throw std::invalid_argument("steering_vector: n must be positive");
    std::vector<cplx> a(n);
    const double s = std::sin(theta);
    for (std::size_t m = 0; m < n; ++m)
        a[m] = std::polar(1.0, -pi * static_cast<double>(m) * s);
    return ComplexTensor::vector(std::move(a));
}

AngularSpectrum::AngularSpectrum(std::vector<double> gains, std::vector<double> angles, std::vector<double> spreads)
    : gains_(std::move(gains)), angles_(std::move(angles))
{
    if (gains_.empty() || angles_.size() != gains_.size() || spreads.size() != gains_.size())
        throw std::invalid_argument("AngularSpectrum: inconsistent component counts");
    double mass = 0.0;
    for (std::size_t p = 0; p < gains_.size(); ++p) {
        if (!(spreads[p] > 0.0))
            throw std::invalid_argument("AngularSpectrum: spread must be positive");
        if (std::abs(angles_[p]) > pi)
            throw std::invalid_argument("AngularSpectrum: angle outside [-pi, pi]");
        const double b = spreads[p] / std::numbers::sqrt2;
        scales_.push_back(b);
        // Laplace mass inside [-pi, pi]
        mass += gains_[p] * (1.0 - 0.5 * std::exp(-(pi - angles_[p]) / b) - 0.5 * std::exp(-(pi + angles_[p]) / b));
    }
    if (!(mass > 0.0))
        throw std::invalid_argument("AngularSpectrum: zero total gain");
    norm_ = 1.0 / mass;
}

AngularSpectrum AngularSpectrum::rx_side(const ClusterParams& d) { return {d.gains, d.rx_angles, d.spreads}; }

AngularSpectrum AngularSpectrum::tx_side(const ClusterParams& d)
{
    if (d.tx_angles.empty())
        throw std::invalid_argument("AngularSpectrum: cluster params have no transmit side");
    return {d.gains, d.tx_angles, d.spreads};
}

double AngularSpectrum::operator()(double theta) const
{
    if (theta < -pi || theta > pi)
        return 0.0;
    double g = 0.0;
    for (std::size_t p = 0; p < gains_.size(); ++p)
        g += gains_[p] / (2.0 * scales_[p]) * std::exp(-std::abs(theta - angles_[p]) / scales_[p]);
    return g * norm_;
}

double AngularSpectrum::min_scale() const { return *std::min_element(scales_.begin(), scales_.end()); }

Quadrature trapezoid_rule(std::size_t points)
{
    if (points < 2)
        throw std::invalid_argument("trapezoid_rule: need at least two points");
    Quadrature q;
    const double h = 2.0 * pi / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        q.nodes.push_back(-pi + h * static_cast<double>(i));
        q.weights.push_back((i == 0 || i + 1 == points) ? 0.5 * h : h);
    }
    return q;
}

namespace {

constexpr std::array<double, 8> kGlX{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                     -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                     0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlW{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                     0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                     0.2223810344533745, 0.1012285362903763};

constexpr double kMaxPanel = 2.0 * pi / 512.0;
constexpr double kGrowth = 1.2;

// Panel edges on [a, b], fine near both ends.
void graded_edges(double a, double b, double first, std::vector<double>& edges)
{
    std::vector<double> left{a}, right{b};
    double w = first;
    while (true) {
        const double gap = right.back() - left.back();
        if (gap <= 2.0 * w) {
            if (gap > w)
                left.push_back(left.back() + 0.5 * gap);
            break;
        }
        left.push_back(left.back() + w);
        right.push_back(right.back() - w);
        w = std::min(w * kGrowth, kMaxPanel);
    }
    edges.insert(edges.end(), left.begin(), left.end());
    edges.insert(edges.end(), right.rbegin(), right.rend());
}

} // namespace

Quadrature spectrum_rule(const AngularSpectrum& g, unsigned refine)
{
    std::vector<double> breaks{-pi, pi};
    for (double a : g.angles())
        breaks.push_back(a);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(), [](double x, double y) { return y - x < 1e-14; }),
                 breaks.end());
    const double first = std::min(0.25 * g.min_scale(), kMaxPanel);

    std::vector<double> edges;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        std::vector<double> e;
        graded_edges(breaks[i], breaks[i + 1], first, e);
        if (!edges.empty())
            e.erase(e.begin());
        edges.insert(edges.end(), e.begin(), e.end());
    }
    const std::size_t split = std::size_t{1} << refine;
    Quadrature q;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double h = (edges[i + 1] - edges[i]) / static_cast<double>(split);
        for (std::size_t s = 0; s < split; ++s) {
            const double lo = edges[i] + h * static_cast<double>(s);
            for (std::size_t k = 0; k < 8; ++k) {
                q.nodes.push_back(lo + 0.5 * h * (kGlX[k] + 1.0));
                q.weights.push_back(0.5 * h * kGlW[k]);
            }
        }
    }
    return q;
}

ComplexTensor ccm_first_row(const AngularSpectrum& g, std::size_t n, unsigned refine)
{
    return ccm_first_row(g, n, spectrum_rule(g, refine));
}

ComplexTensor ccm_first_row(const AngularSpectrum& g, std::size_t n, const Quadrature& rule)
{
    if (n == 0)
        throw std::invalid_argument("ccm_first_row: n must be positive");
    std::vector<double> wg(rule.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        wg[i] = rule.weights[i] * g(rule.nodes[i]);
        peak = std::max(peak, wg[i]);
    }
    std::vector<cplx> r(n, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < rule.size(); ++i) {
        if (wg[i] <= 1e-20 * peak)
            continue;
        const cplx step = std::polar(1.0, pi * std::sin(rule.nodes[i]));
        cplx e{1.0, 0.0};
        for (std::size_t k = 0; k < n; ++k) {
            r[k] += wg[i] * e;
            e *= step;
        }
    }
    const double r0 = r[0].real();
    for (auto& v : r)
        v /= r0;
    r[0] = 1.0;
    return ComplexTensor::vector(std::move(r));
}

ComplexTensor build_ccm(const AngularSpectrum& g, std::size_t n, unsigned refine)
{
    auto c = toeplitz_from_first_row(ccm_first_row(g, n, refine));
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(to_eigen(c), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-8)
        throw NumericalError("build_ccm: quadrature produced an indefinite covariance");
    return c;
}

ComplexTensor KronCovariance::dense() const
{
    const auto nr = rx.rows(), nt = tx.rows();
    ComplexTensor out({nr * nt, nr * nt});
    for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t b = 0; b < nt; ++b)
            for (std::size_t i = 0; i < nr; ++i)
                for (std::size_t j = 0; j < nr; ++j)
                    out(a * nr + i, b * nr + j) = tx(a, b) * rx(i, j);
    return out;
}

KronCovariance build_kron_ccm(const ClusterParams& d, KronDims dims)
{
    KronCovariance c;
    c.rx = toeplitz_from_first_row(ccm_first_row(AngularSpectrum::rx_side(d), dims.n_rx));
    if (dims.n_tx == 1) {
        c.tx = ComplexTensor::identity(1);
    } else {
        c.tx = toeplitz_from_first_row(ccm_first_row(AngularSpectrum::tx_side(d), dims.n_tx));
    }
    return c;
}

ComplexTensor sample_channel(const KronCovariance& c, Rng& rng)
{
    const auto nr = static_cast<Eigen::Index>(c.rx.rows());
    const auto nt = static_cast<Eigen::Index>(c.tx.rows());
    MatrixXc w(nr, nt);
    // column-major fill keeps the draw order equal to vec order
    for (Eigen::Index t = 0; t < nt; ++t)
        for (Eigen::Index r = 0; r < nr; ++r)
            w(r, t) = standard_complex_normal(rng);
    const MatrixXc lr = hpd_cholesky(to_eigen(c.rx), 1e-10);
    MatrixXc h = lr.triangularView<Eigen::Lower>() * w;
    if (nt > 1) {
        const MatrixXc lt = hpd_cholesky(to_eigen(c.tx), 1e-10);
        h = (h * lt.transpose()).eval();
    }
    std::vector<cplx> out(h.data(), h.data() + h.size());
    return ComplexTensor::vector(std::move(out));
}

} // namespace vaecme::channel
