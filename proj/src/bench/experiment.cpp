#include "vaecme/bench/experiment.hpp"

#include "vaecme/core/parallel.hpp"
#include "vaecme/est/lmmse.hpp"
#include "vaecme/est/vae_estimators.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace vaecme::bench {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kBlock = 64;
constexpr std::uint64_t kNoiseDomain = 0x6e6f697365ULL;
constexpr std::uint64_t kSampleDomain = 0x6d63ULL;

// stream index from the SNR value itself, so grids can be reordered or subset
std::uint64_t snr_key(double snr_db) { return static_cast<std::uint64_t>(std::llround((snr_db + 1000.0) * 1000.0)); }

std::string suffix(const std::string& tag) { return tag.empty() ? std::string{} : "_" + tag; }

} // namespace

fs::path dataset_path(const ExperimentConfig& c) { return c.out / "dataset.bin"; }

fs::path checkpoint_path(const ExperimentConfig& c, vae::Variant v, const std::string& tag)
{
    return c.out / ("ckpt_vae_" + vae::to_string(v) + suffix(tag) + ".bin");
}

fs::path history_path(const ExperimentConfig& c, vae::Variant v, const std::string& tag)
{
    return c.out / ("history_vae_" + vae::to_string(v) + suffix(tag) + ".csv");
}

std::string normalization_audit(const channel::ChannelDataset& d)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << "mean |h|^2/N train=" << d.mean_power(channel::Split::train)
       << " val=" << d.mean_power(channel::Split::val) << " test=" << d.mean_power(channel::Split::test)
       << " (scale " << std::setprecision(9) << d.scale << ")";
    return os.str();
}

channel::ChannelDataset load_or_generate(const ExperimentConfig& c, std::ostream& log)
{
    const auto want = c.dataset_config();
    const auto path = dataset_path(c);
    if (fs::exists(path)) {
        try {
            auto d = channel::load_dataset(path);
            if (d.config == want)
                return d;
            log << "dataset at " << path.string() << " was generated with other settings; regenerating\n";
        } catch (const std::exception& e) {
            log << "unreadable dataset at " << path.string() << " (" << e.what() << "); regenerating\n";
        }
    }
    auto d = channel::generate_dataset(want);
    fs::create_directories(c.out);
    channel::save_dataset(d, path);
    log << "generated " << path.string() << ": " << normalization_audit(d) << "\n";
    return d;
}

channel::ChannelDataset subset_train(const channel::ChannelDataset& d, std::size_t n)
{
    if (n < 1 || n > d.config.n_train)
        throw std::invalid_argument("subset_train: size must lie in [1, n_train]");
    channel::ChannelDataset s;
    s.config = d.config;
    s.config.n_train = n;
    s.scale = d.scale;
    s.toy_spectrum = d.toy_spectrum;
    const auto dim = d.n();
    const auto drop = d.config.n_train - n;
    s.channels.assign(d.channels.begin(), d.channels.begin() + static_cast<std::ptrdiff_t>(n * dim));
    s.channels.insert(s.channels.end(), d.channels.begin() + static_cast<std::ptrdiff_t>((n + drop) * dim),
                      d.channels.end());
    if (!d.deltas.empty()) {
        s.deltas.assign(d.deltas.begin(), d.deltas.begin() + static_cast<std::ptrdiff_t>(n));
        s.deltas.insert(s.deltas.end(), d.deltas.begin() + static_cast<std::ptrdiff_t>(n + drop), d.deltas.end());
    }
    return s;
}

vae::TrainResult train_variant(const vae::VaeConfig& cfg, const channel::ChannelDataset& data, std::ostream& log)
{
    const auto name = vae::to_string(cfg.variant);
    auto r = vae::train(cfg, data, [&](const vae::EpochReport& e) {
        log << name << " epoch " << e.epoch << std::setprecision(6) << " rec " << e.rec << " kl " << e.kl
            << " val_rec " << e.val_rec << " val_nmse " << e.val_nmse << (e.improved ? " *" : "") << "\n";
        log.flush();
    });
    if (r.diverged)
        log << name << ": " << r.message << "\n";
    return r;
}

std::vector<vae::Variant> vae_variants(const std::vector<Method>& methods)
{
    std::vector<vae::Variant> out;
    for (const auto& m : methods)
        if (m.is_vae() && std::find(out.begin(), out.end(), m.variant) == out.end())
            out.push_back(m.variant);
    return out;
}

std::vector<ComplexTensor> split_channels(const channel::ChannelDataset& d, channel::Split s)
{
    std::vector<ComplexTensor> out;
    const auto [b, e] = d.range(s);
    out.reserve(e - b);
    for (auto i = b; i < e; ++i)
        out.push_back(d.channel(i));
    return out;
}

analysis::ReferenceCme reference_cme(const channel::ChannelDataset& data)
{
    if (data.config.scenario != channel::Scenario::toy)
        return {};
    return [spec = data.toy_covariance()](const ComplexTensor& ls, double s2) {
        return est::circulant_lmmse(ComplexTensor::zeros(ls.size()), spec, s2, ls);
    };
}

std::vector<EvalRow> evaluate_methods(const channel::ChannelDataset& data, const std::vector<Method>& methods,
                                      ModelSet& models, const EvalOptions& opt)
{
    if (opt.snr_db.empty())
        throw std::invalid_argument("evaluate: empty SNR grid");
    const auto dims = data.config.dims;
    const auto [b0, e0] = data.range(opt.split);
    const std::size_t count = e0 - b0;
    if (count == 0)
        throw std::invalid_argument("evaluate: empty split");
    const auto truth = split_channels(data, opt.split);
    const bool toy = data.config.scenario == channel::Scenario::toy;

    bool need_genie = false, need_global = false;
    for (const auto& m : methods) {
        need_genie |= m.kind == Method::Kind::genie_cov;
        need_global |= m.kind == Method::Kind::global_cov;
        if (m.is_vae()) {
            auto it = models.find(m.variant);
            if (it == models.end())
                throw std::runtime_error("evaluate: no model for " + m.name);
            if (it->second.dims() != dims)
                throw std::runtime_error("evaluate: checkpoint for " + m.name + " does not match the antenna setup");
        }
    }

    // per-sample genie filters are SNR independent, built once
    std::vector<std::optional<est::KronLmmse>> genie;
    std::optional<CirculantSpec> toy_spec;
    if (need_genie) {
        if (toy)
            toy_spec = data.toy_covariance();
        else {
            genie.resize(count);
            parallel_for(count, [&](std::size_t b, std::size_t e) {
                for (auto i = b; i < e; ++i)
                    genie[i].emplace(data.covariance(b0 + i));
            });
        }
    }
    std::optional<est::GlobalLmmse> global;
    if (need_global)
        global.emplace(est::fit_global_cov(split_channels(data, channel::Split::train)));

    const std::size_t blocks = (count + kBlock - 1) / kBlock;
    std::vector<EvalRow> rows;
    std::vector<std::vector<EvalRow>> per_method(methods.size());
    const auto noise_master = mix_seed(opt.seed, kNoiseDomain);

    for (double snr : opt.snr_db) {
        const double nv = channel::noise_variance_from_snr_db(snr, dims.n_tx);
        const auto obs = channel::make_model(dims, nv);
        auto rng = make_stream(noise_master, snr_key(snr));
        std::vector<ComplexTensor> y, ls;
        y.reserve(count);
        ls.reserve(count);
        for (const auto& h : truth) {
            y.push_back(channel::make_observation(h, obs, rng));
            ls.push_back(obs.apply_adjoint(y.back()));
        }

        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const auto& m = methods[mi];
            std::vector<ComplexTensor> est(count);
            const auto t0 = std::chrono::steady_clock::now();
            parallel_for(blocks, [&](std::size_t bb, std::size_t be) {
                for (auto blk = bb; blk < be; ++blk) {
                    const auto lo = blk * kBlock, hi = std::min(count, lo + kBlock);
                    switch (m.kind) {
                    case Method::Kind::ls:
                        for (auto i = lo; i < hi; ++i)
                            est[i] = ls[i];
                        break;
                    case Method::Kind::genie_cov:
                        for (auto i = lo; i < hi; ++i)
                            est[i] = toy ? est::circulant_lmmse(ComplexTensor::zeros(ls[i].size()), *toy_spec, nv, ls[i])
                                         : genie[i]->apply(ls[i], nv);
                        break;
                    case Method::Kind::global_cov:
                        for (auto i = lo; i < hi; ++i)
                            est[i] = global->apply(ls[i], nv);
                        break;
                    case Method::Kind::vae: {
                        auto& model = models.at(m.variant);
                        const std::vector<ComplexTensor> yb(y.begin() + static_cast<std::ptrdiff_t>(lo),
                                                            y.begin() + static_cast<std::ptrdiff_t>(hi));
                        const std::vector<ComplexTensor> hb(truth.begin() + static_cast<std::ptrdiff_t>(lo),
                                                            truth.begin() + static_cast<std::ptrdiff_t>(hi));
                        std::vector<ComplexTensor> out;
                        if (m.mc_samples == 0)
                            out = est::estimate_map(model, yb, &hb, obs, nv);
                        else {
                            auto srng = make_stream(mix_seed(mix_seed(opt.seed, kSampleDomain + m.mc_samples), snr_key(snr)), blk);
                            out = est::estimate_mc(model, yb, &hb, obs, nv, m.mc_samples, srng);
                        }
                        for (auto i = lo; i < hi; ++i)
                            est[i] = std::move(out[i - lo]);
                        break;
                    }
                    }
                }
            });
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            per_method[mi].push_back({m.name, snr, analysis::nmse(truth, est), count, secs});
        }
    }
    for (auto& r : per_method)
        rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

std::string eval_csv(const std::vector<EvalRow>& rows, const std::string& header)
{
    std::ostringstream os;
    os << header << "\nmethod,snr_db,nmse,n_test,seconds\n" << std::setprecision(17);
    for (const auto& r : rows)
        os << r.method << "," << r.snr_db << "," << r.nmse << "," << r.n_test << "," << std::setprecision(6)
           << r.seconds << std::setprecision(17) << "\n";
    return os.str();
}

} // namespace vaecme::bench
