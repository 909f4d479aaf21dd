#include "vaecme/vae/train.hpp"

#include "vaecme/est/vae_estimators.hpp"
#include "vaecme/io/binary.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace vaecme::vae {

namespace {

constexpr char kMagic[9] = "VAECMECK";
constexpr std::size_t kEvalChunk = 512;

// stream indices below the epoch offset are reserved for setup draws
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kValStream = 1;
constexpr std::uint64_t kEpochStream = 1000;

ComplexTensor noisy_observation(const ComplexTensor& h, const channel::ObservationModel& obs, double nv, Rng& rng)
{
    auto y = obs.apply(h);
    const double s = std::sqrt(nv);
    for (auto& v : y.data())
        v += s * standard_complex_normal(rng);
    return y;
}

double draw_snr_db(const VaeConfig& cfg, Rng& rng)
{
    return std::uniform_real_distribution<double>(cfg.snr_min_db, cfg.snr_max_db)(rng);
}

void write_config(io::Writer& w, const VaeConfig& c)
{
    w.str(to_string(c.variant));
    w.u64(c.latent_dim);
    w.u64(c.base_channels);
    w.u64(c.kernel);
    w.u64(c.kernel_2d);
    w.u64(c.blocks);
    w.f64(c.growth);
    w.f64(c.free_bits);
    w.f64(c.snr_min_db);
    w.f64(c.snr_max_db);
    w.f64(c.val_snr_db);
    w.u64(c.batch_size);
    w.f64(c.learning_rate);
    w.u64(c.patience);
    w.u64(c.max_epochs);
    w.f64(c.bn_momentum);
    w.f64(c.bn_eps);
    w.f64(c.clamp);
    w.u64(c.seed);
}

VaeConfig read_config(io::Reader& r)
{
    VaeConfig c;
    c.variant = variant_from_string(r.str());
    c.latent_dim = r.u64();
    c.base_channels = r.u64();
    c.kernel = r.u64();
    c.kernel_2d = r.u64();
    c.blocks = r.u64();
    c.growth = r.f64();
    c.free_bits = r.f64();
    c.snr_min_db = r.f64();
    c.snr_max_db = r.f64();
    c.val_snr_db = r.f64();
    c.batch_size = r.u64();
    c.learning_rate = r.f64();
    c.patience = r.u64();
    c.max_epochs = r.u64();
    c.bn_momentum = r.f64();
    c.bn_eps = r.f64();
    c.clamp = r.f64();
    c.seed = r.u64();
    c.validate();
    return c;
}

void write_u64s(io::Writer& w, const std::vector<std::size_t>& v)
{
    w.u64(v.size());
    for (auto x : v)
        w.u64(x);
}

std::vector<std::size_t> read_u64s(io::Reader& r)
{
    const auto n = r.u64();
    if (n > (1u << 30))
        throw io::FormatError("implausible history length");
    std::vector<std::size_t> v(n);
    for (auto& x : v)
        x = r.u64();
    return v;
}

} // namespace

std::string snapshot_model(const VaeModel& m)
{
    std::ostringstream os(std::ios::binary);
    io::Writer w(os);
    m.encoder().save(w);
    m.decoder().save(w);
    return os.str();
}

void restore_model(VaeModel& m, const std::string& blob)
{
    std::istringstream is(blob, std::ios::binary);
    io::Reader r(is);
    m.encoder() = nn::Sequential::load(r);
    m.decoder() = nn::Sequential::load(r);
}

std::string TrainingHistory::csv() const
{
    std::ostringstream os;
    os << "epoch,elbo,rec,kl,val_nmse,enc_var_trace,val_rec\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < size(); ++i)
        os << epoch[i] << ',' << elbo[i] << ',' << rec[i] << ',' << kl[i] << ',' << val_nmse[i] << ','
           << enc_var_trace[i] << ',' << val_rec[i] << '\n';
    return os.str();
}

void write_checkpoint(const Checkpoint& c, std::ostream& os)
{
    io::Writer w(os);
    w.magic(kMagic);
    w.u32(kCheckpointVersion);
    write_config(w, c.model.config());
    w.u64(c.model.dims().n_rx);
    w.u64(c.model.dims().n_tx);
    w.str(c.init_scheme);
    c.model.encoder().save(w);
    c.model.decoder().save(w);
    c.adam.save(w);
    write_u64s(w, c.history.epoch);
    w.f64s(c.history.elbo);
    w.f64s(c.history.rec);
    w.f64s(c.history.kl);
    w.f64s(c.history.val_nmse);
    w.f64s(c.history.enc_var_trace);
    w.f64s(c.history.val_rec);
    w.u64(c.best_epoch);
}

Checkpoint read_checkpoint(std::istream& is)
{
    io::Reader r(is);
    r.expect_magic(kMagic);
    const auto version = r.u32();
    if (version != kCheckpointVersion)
        throw io::FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto cfg = read_config(r);
    KronDims dims;
    dims.n_rx = r.u64();
    dims.n_tx = r.u64();
    Checkpoint c{VaeModel(cfg, dims), {}, {}, 0, ""};
    c.init_scheme = r.str();
    auto enc = nn::Sequential::load(r);
    auto dec = nn::Sequential::load(r);
    if (enc.specs() != c.model.encoder().specs() || dec.specs() != c.model.decoder().specs())
        throw io::FormatError("checkpoint layers do not match its configuration");
    c.model.encoder() = std::move(enc);
    c.model.decoder() = std::move(dec);
    c.adam = nn::AdamState::load(r);
    c.history.epoch = read_u64s(r);
    c.history.elbo = r.f64s();
    c.history.rec = r.f64s();
    c.history.kl = r.f64s();
    c.history.val_nmse = r.f64s();
    c.history.enc_var_trace = r.f64s();
    c.history.val_rec = r.f64s();
    const auto n = c.history.size();
    for (const auto* v : {&c.history.elbo, &c.history.rec, &c.history.kl, &c.history.val_nmse,
                          &c.history.enc_var_trace, &c.history.val_rec})
        if (v->size() != n)
            throw io::FormatError("history arrays of unequal length");
    c.best_epoch = r.u64();
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_checkpoint(c, os);
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open checkpoint " + path.string());
    return read_checkpoint(is);
}

ValidationSet make_validation_set(const VaeConfig& cfg, const channel::ChannelDataset& data)
{
    const auto [b, e] = data.range(channel::Split::val);
    if (b == e)
        throw std::invalid_argument("train: dataset has an empty validation split");
    const auto dims = data.config.dims;
    const auto obs = channel::make_model(dims, 0.0);
    Rng rng = make_stream(cfg.seed, kValStream);
    ValidationSet v;
    v.eval_noise_var = channel::noise_variance_from_snr_db(cfg.val_snr_db, dims.n_tx);
    for (std::size_t i = b; i < e; ++i) {
        v.h.push_back(data.channel(i));
        const double nv = channel::noise_variance_from_snr_db(draw_snr_db(cfg, rng), dims.n_tx);
        v.noise_var.push_back(nv);
        v.y.push_back(noisy_observation(v.h.back(), obs, nv, rng));
        v.y_eval.push_back(noisy_observation(v.h.back(), obs, v.eval_noise_var, rng));
    }
    v.eps.resize((e - b) * cfg.latent_dim);
    for (auto& x : v.eps)
        x = standard_normal(rng);
    return v;
}

ValidationMetrics validate(VaeModel& model, const ValidationSet& v)
{
    const auto& cfg = model.config();
    const auto obs = channel::make_model(model.dims(), 0.0);
    const auto count = v.h.size();
    const auto l = cfg.latent_dim;
    ValidationMetrics out;
    {
        nn::NoGradGuard guard;
        for (std::size_t b = 0; b < count; b += kEvalChunk) {
            const auto e = std::min(count, b + kEvalChunk);
            Batch batch;
            batch.h.assign(v.h.begin() + static_cast<std::ptrdiff_t>(b), v.h.begin() + static_cast<std::ptrdiff_t>(e));
            batch.y.assign(v.y.begin() + static_cast<std::ptrdiff_t>(b), v.y.begin() + static_cast<std::ptrdiff_t>(e));
            batch.noise_var.assign(v.noise_var.begin() + static_cast<std::ptrdiff_t>(b),
                                   v.noise_var.begin() + static_cast<std::ptrdiff_t>(e));
            const std::vector<double> eps(v.eps.begin() + static_cast<std::ptrdiff_t>(b * l),
                                          v.eps.begin() + static_cast<std::ptrdiff_t>(e * l));
            out.rec += variant_loss(model, batch, obs, eps, nn::Mode::eval).rec * static_cast<double>(e - b);
        }
    }
    out.rec /= static_cast<double>(count);

    const auto est = est::estimate_map(model, v.y_eval, &v.h, obs, v.eval_noise_var);
    double err = 0.0, pow = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        err += (est[i] - v.h[i]).squared_norm();
        pow += static_cast<double>(v.h[i].size());
    }
    out.nmse = err / pow;

    const auto post = model.posterior(est::encoder_inputs(model, v.y_eval, &v.h, obs));
    for (const auto& p : post)
        out.enc_var_trace += std::accumulate(p.var.begin(), p.var.end(), 0.0);
    out.enc_var_trace /= static_cast<double>(count);
    return out;
}

TrainResult train(const VaeConfig& cfg, const channel::ChannelDataset& data,
                  const std::function<void(const EpochReport&)>& on_epoch)
{
    cfg.validate();
    const auto dims = data.config.dims;
    const auto [tb, te] = data.range(channel::Split::train);
    if (te - tb < 2)
        throw std::invalid_argument("train: need at least two training samples");

    TrainResult result{Checkpoint{VaeModel(cfg, dims), {}, {}, 0, "fan_in_uniform"}, false, {}};
    auto& ck = result.best;
    VaeModel& model = ck.model;
    {
        Rng init = make_stream(cfg.seed, kInitStream);
        model.initialize(init);
    }
    auto params = model.parameters();
    nn::AdamState adam;
    adam.lr = cfg.learning_rate;

    const auto val = make_validation_set(cfg, data);
    const auto obs = channel::make_model(dims, 0.0);
    const auto l = cfg.latent_dim;

    std::vector<std::size_t> order(te - tb);
    std::iota(order.begin(), order.end(), tb);

    double best_rec = std::numeric_limits<double>::infinity();
    std::string best_blob = snapshot_model(model);
    nn::AdamState best_adam = adam;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng rng = make_stream(cfg.seed, kEpochStream + epoch);
        std::shuffle(order.begin(), order.end(), rng);

        double rec_sum = 0.0, kl_sum = 0.0;
        std::size_t seen = 0;
        bool bad = false;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const auto e = std::min(order.size(), b + cfg.batch_size);
            if (e - b < 2)
                break; // batch norm needs two samples
            Batch batch;
            for (std::size_t i = b; i < e; ++i) {
                batch.h.push_back(data.channel(order[i]));
                const double nv = channel::noise_variance_from_snr_db(draw_snr_db(cfg, rng), dims.n_tx);
                batch.noise_var.push_back(nv);
                batch.y.push_back(noisy_observation(batch.h.back(), obs, nv, rng));
            }
            std::vector<double> eps((e - b) * l);
            for (auto& x : eps)
                x = standard_normal(rng);

            for (auto& p : params)
                p.zero_grad();
            const auto loss = variant_loss(model, batch, obs, eps, nn::Mode::train);
            if (!std::isfinite(loss.total.item())) {
                bad = true;
                result.message = "non-finite loss in epoch " + std::to_string(epoch);
                break;
            }
            loss.total.backward();
            try {
                nn::adam_step(adam, params);
            } catch (const nn::NonFiniteGradient& ex) {
                bad = true;
                result.message = "epoch " + std::to_string(epoch) + ": " + ex.what();
                break;
            }
            rec_sum += loss.rec * static_cast<double>(e - b);
            kl_sum += loss.kl * static_cast<double>(e - b);
            seen += e - b;
        }
        if (bad) {
            result.diverged = true;
            break;
        }

        const auto vm = validate(model, val);
        if (!std::isfinite(vm.rec)) {
            result.diverged = true;
            result.message = "non-finite validation loss in epoch " + std::to_string(epoch);
            break;
        }
        const double rec = rec_sum / static_cast<double>(seen);
        const double kl = kl_sum / static_cast<double>(seen);
        auto& h = ck.history;
        h.epoch.push_back(epoch);
        h.rec.push_back(rec);
        h.kl.push_back(kl);
        h.elbo.push_back(-rec - kl);
        h.val_nmse.push_back(vm.nmse);
        h.enc_var_trace.push_back(vm.enc_var_trace);
        h.val_rec.push_back(vm.rec);

        const bool improved = vm.rec < best_rec;
        if (improved) {
            best_rec = vm.rec;
            best_blob = snapshot_model(model);
            best_adam = adam;
            ck.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (on_epoch)
            on_epoch({epoch, rec, kl, vm.rec, vm.nmse, vm.enc_var_trace, improved, secs, &model});
        if (since_best >= cfg.patience)
            break;
    }

    restore_model(model, best_blob);
    ck.adam = best_adam;
    if (result.message.empty())
        result.message = "best epoch " + std::to_string(ck.best_epoch) + " of " + std::to_string(ck.history.size());
    return result;
}

} // namespace vaecme::vae
