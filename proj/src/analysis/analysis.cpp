#include "vaecme/analysis/analysis.hpp"

#include "vaecme/est/vae_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace vaecme::analysis {

double nmse(const std::vector<ComplexTensor>& truth, const std::vector<ComplexTensor>& estimates)
{
    if (truth.size() != estimates.size())
        throw std::invalid_argument("nmse: " + std::to_string(truth.size()) + " channels but " +
                                    std::to_string(estimates.size()) + " estimates");
    if (truth.empty())
        throw std::invalid_argument("nmse: empty set");
    double err = 0.0;
    std::size_t dim = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        require_same_size(truth[i].size(), estimates[i].size(), "estimate");
        err += (truth[i] - estimates[i]).squared_norm();
        dim += truth[i].size();
    }
    return err / static_cast<double>(dim);
}

BoundConstants bound_constants(double noise_var, const std::vector<double>& xi_min, std::size_t n)
{
    if (!(noise_var > 0.0))
        throw std::invalid_argument("bound_constants: noise variance must be positive");
    if (xi_min.empty())
        throw std::invalid_argument("bound_constants: no eigenvalue samples");
    const double s4 = noise_var * noise_var;
    double acc = 0.0;
    for (double xi : xi_min) {
        const double d = std::max(xi, 0.0) + noise_var;
        acc += s4 / (d * d);
    }
    return {std::sqrt(acc / static_cast<double>(xi_min.size())), std::sqrt(static_cast<double>(n) / noise_var)};
}

double mean_variance_trace(const std::vector<vae::LatentGaussian>& post)
{
    if (post.empty())
        throw std::invalid_argument("mean_variance_trace: empty set");
    double acc = 0.0;
    for (const auto& p : post)
        for (double v : p.var)
            acc += v;
    return acc / static_cast<double>(post.size());
}

double encoder_variance_trace(vae::VaeModel& model, const std::vector<ComplexTensor>& y,
                              const std::vector<ComplexTensor>* truth, const channel::ObservationModel& obs)
{
    return mean_variance_trace(model.posterior(est::encoder_inputs(model, y, truth, obs)));
}

std::vector<LatentPair> lipschitz_pairs(const std::vector<std::vector<double>>& anchors, std::size_t count, Rng& rng,
                                        double scale)
{
    if (anchors.empty())
        throw std::invalid_argument("lipschitz_pairs: no anchors");
    std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
    std::uniform_real_distribution<double> expo(-2.0, 0.0);
    std::vector<LatentPair> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& a = anchors[pick(rng)];
        if (i % 2 == 0 || anchors.size() == 1) {
            const double s = scale * std::pow(10.0, expo(rng));
            auto b = a;
            for (auto& v : b)
                v += s * standard_normal(rng);
            out.push_back({a, std::move(b)});
        } else {
            out.push_back({a, anchors[pick(rng)]});
        }
    }
    return out;
}

namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b, OutputNorm norm)
{
    require_same_size(a.size(), b.size(), "map output");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        acc = norm == OutputNorm::euclidean ? acc + d * d : std::max(acc, d);
    }
    return norm == OutputNorm::euclidean ? std::sqrt(acc) : acc;
}

// Lipschitz ratios from precomputed outputs; fa/fb hold f(a), f(b) for the used pairs
LipschitzEstimate max_ratio(const std::vector<LatentPair>& pairs, const std::vector<std::size_t>& used,
                            const std::vector<std::vector<double>>& fa, const std::vector<std::vector<double>>& fb,
                            OutputNorm norm)
{
    LipschitzEstimate est;
    est.pairs = used.size();
    est.skipped = pairs.size() - used.size();
    for (std::size_t k = 0; k < used.size(); ++k) {
        const auto& p = pairs[used[k]];
        est.value = std::max(est.value, distance(fa[k], fb[k], norm) / distance(p.a, p.b, OutputNorm::euclidean));
    }
    return est;
}

std::vector<std::size_t> usable(const std::vector<LatentPair>& pairs)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        require_same_size(pairs[i].a.size(), pairs[i].b.size(), "latent pair");
        if (distance(pairs[i].a, pairs[i].b, OutputNorm::euclidean) > 0.0)
            idx.push_back(i);
    }
    return idx;
}

} // namespace

LipschitzEstimate empirical_lipschitz(const VectorMap& f, const std::vector<LatentPair>& pairs, OutputNorm norm)
{
    const auto used = usable(pairs);
    std::vector<std::vector<double>> a, b;
    for (auto i : used) {
        a.push_back(pairs[i].a);
        b.push_back(pairs[i].b);
    }
    if (used.empty())
        return {0.0, 0, pairs.size()};
    return max_ratio(pairs, used, f(a), f(b), norm);
}

DecoderLipschitz decoder_lipschitz(vae::VaeModel& model, const std::vector<LatentPair>& pairs)
{
    const auto used = usable(pairs);
    std::vector<std::vector<double>> za, zb;
    for (auto i : used) {
        za.push_back(pairs[i].a);
        zb.push_back(pairs[i].b);
    }
    DecoderLipschitz out;
    if (used.empty()) {
        out.l1 = out.l2 = {0.0, 0, pairs.size()};
        return out;
    }
    const auto ma = model.moments(za);
    const auto mb = model.moments(zb);
    auto split = [](const std::vector<vae::CondGaussianMoments>& m, std::vector<std::vector<double>>& mean,
                    std::vector<std::vector<double>>& spec) {
        for (const auto& x : m) {
            std::vector<double> v;
            for (const auto& c : x.mu.values()) {
                v.push_back(c.real());
                v.push_back(c.imag());
            }
            mean.push_back(std::move(v));
            spec.push_back(x.c);
        }
    };
    std::vector<std::vector<double>> mean_a, mean_b, spec_a, spec_b;
    split(ma, mean_a, spec_a);
    split(mb, mean_b, spec_b);
    out.l1 = max_ratio(pairs, used, mean_a, mean_b, OutputNorm::euclidean);
    out.l2 = max_ratio(pairs, used, spec_a, spec_b, OutputNorm::max_abs);
    return out;
}

std::vector<std::vector<double>> posterior_mean_is(vae::VaeModel& model, const std::vector<ComplexTensor>& ls,
                                                   const std::vector<vae::LatentGaussian>& q, double noise_var,
                                                   std::size_t samples, Rng& rng)
{
    if (ls.size() != q.size())
        throw std::invalid_argument("posterior_mean_is: observation and posterior counts differ");
    if (samples < 1)
        throw std::invalid_argument("posterior_mean_is: need at least one sample");
    const auto l = model.config().latent_dim;
    const auto qt = model.transform();
    std::vector<std::vector<double>> out;
    out.reserve(ls.size());
    for (std::size_t i = 0; i < ls.size(); ++i) {
        std::vector<std::vector<double>> z(samples, std::vector<double>(l));
        std::vector<double> logw(samples, 0.0);
        for (std::size_t k = 0; k < samples; ++k)
            for (std::size_t d = 0; d < l; ++d) {
                const double e = standard_normal(rng);
                const double s = std::sqrt(q[i].var[d]);
                const double v = q[i].mu[d] + s * e;
                z[k][d] = v;
                // log N(v; 0, 1) - log N(v; mu, s^2), shared constants dropped
                logw[k] += -0.5 * v * v + 0.5 * e * e + std::log(s);
            }
        const auto mom = model.moments(z);
        const auto yq = qt.apply(ls[i], Direction::forward);
        for (std::size_t k = 0; k < samples; ++k) {
            const auto mq = qt.apply(mom[k].mu, Direction::forward);
            double ll = 0.0;
            for (std::size_t j = 0; j < yq.size(); ++j) {
                const double v = mom[k].c[j] + noise_var;
                ll -= std::norm(yq[j] - mq[j]) / v + std::log(v);
            }
            logw[k] += ll;
        }
        const double mx = *std::max_element(logw.begin(), logw.end());
        std::vector<double> mean(l, 0.0);
        double total = 0.0;
        for (std::size_t k = 0; k < samples; ++k) {
            const double w = std::exp(logw[k] - mx);
            total += w;
            for (std::size_t d = 0; d < l; ++d)
                mean[d] += w * z[k][d];
        }
        for (auto& v : mean)
            v /= total;
        out.push_back(std::move(mean));
    }
    return out;
}

double bound_rhs(const BoundConstants& c, double l1, double l2, double trace, double mismatch, double safety)
{
    return safety * (c.c1 * l1 + c.c2 * l2) * (std::sqrt(std::max(trace, 0.0)) + std::sqrt(std::max(mismatch, 0.0)));
}

BoundReport gap_report(vae::VaeModel& model, const std::vector<ComplexTensor>& truth, const GapOptions& opt,
                       const ReferenceCme& reference)
{
    if (truth.empty())
        throw std::invalid_argument("gap_report: no test channels");
    if (opt.snr_db.empty())
        throw std::invalid_argument("gap_report: empty SNR grid");
    const auto dims = model.dims();
    const auto n = dims.size();
    BoundReport rep;
    rep.safety = opt.safety;
    rep.has_reference = static_cast<bool>(reference);
    for (std::size_t s = 0; s < opt.snr_db.size(); ++s) {
        const double snr = opt.snr_db[s];
        const double nv = channel::noise_variance_from_snr_db(snr, dims.n_tx);
        const auto obs = channel::make_model(dims, nv);
        Rng rng = make_stream(opt.seed, s);
        std::vector<ComplexTensor> y, ls;
        for (const auto& h : truth) {
            y.push_back(channel::make_observation(h, obs, rng));
            ls.push_back(obs.apply_adjoint(y.back()));
        }
        const auto post = model.posterior(est::encoder_inputs(model, y, &truth, obs));
        std::vector<std::vector<double>> means;
        for (const auto& p : post)
            means.push_back(p.mu);
        const auto mom = model.moments(means);
        std::vector<double> xi;
        for (const auto& m : mom)
            xi.push_back(*std::min_element(m.c.begin(), m.c.end()));

        BoundRow row;
        row.snr_db = snr;
        const auto bc = bound_constants(nv, xi, n);
        row.c1 = bc.c1;
        row.c2 = bc.c2;
        const auto lip = decoder_lipschitz(model, lipschitz_pairs(means, opt.lipschitz_pairs, rng));
        row.l1_hat = lip.l1.value;
        row.l2_hat = lip.l2.value;
        row.enc_var_trace = mean_variance_trace(post);

        const auto sub = static_cast<std::ptrdiff_t>(std::min(opt.is_subset, ls.size()));
        const auto pm = posterior_mean_is(model, {ls.begin(), ls.begin() + sub}, {post.begin(), post.begin() + sub},
                                          nv, opt.is_samples, rng);
        double mis = 0.0;
        for (std::size_t i = 0; i < pm.size(); ++i)
            for (std::size_t d = 0; d < pm[i].size(); ++d)
                mis += (pm[i][d] - means[i][d]) * (pm[i][d] - means[i][d]);
        row.mean_mu_mismatch = mis / static_cast<double>(pm.size());

        if (reference) {
            double gap = 0.0;
            for (std::size_t i = 0; i < ls.size(); ++i)
                gap += (est::t_theta(mom[i], ls[i], nv, dims) - reference(ls[i], nv)).norm();
            row.lhs_gap = gap / static_cast<double>(ls.size());
        }
        row.rhs_bound = bound_rhs(bc, row.l1_hat, row.l2_hat, row.enc_var_trace, row.mean_mu_mismatch, opt.safety);
        rep.rows.push_back(row);
    }
    return rep;
}

std::string BoundReport::csv() const
{
    std::ostringstream os;
    os << "snr_db,c1,c2,l1_hat,l2_hat,enc_var_trace,mean_mu_mismatch," << (has_reference ? "lhs_gap," : "")
       << "rhs_bound,c1_l1,c2_l2,lipschitz\n";
    os << std::setprecision(10);
    for (const auto& r : rows) {
        os << r.snr_db << ',' << r.c1 << ',' << r.c2 << ',' << r.l1_hat << ',' << r.l2_hat << ',' << r.enc_var_trace
           << ',' << r.mean_mu_mismatch << ',';
        if (has_reference)
            os << r.lhs_gap.value_or(std::numeric_limits<double>::quiet_NaN()) << ',';
        os << r.rhs_bound << ',' << r.c1_l1() << ',' << r.c2_l2() << ",empirical_x" << safety << '\n';
    }
    return os.str();
}

} // namespace vaecme::analysis
