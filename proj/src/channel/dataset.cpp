#include "vaecme/channel/dataset.hpp"

#include "vaecme/core/parallel.hpp"
#include "vaecme/io/binary.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace vaecme::channel {

namespace {
constexpr char kMagic[9] = "VAECMEDS";
}

std::string to_string(Scenario s) { return s == Scenario::toy ? "toy" : "3gpp"; }

Scenario scenario_from_string(const std::string& s)
{
    if (s == "3gpp")
        return Scenario::threegpp;
    if (s == "toy")
        return Scenario::toy;
    throw std::invalid_argument("unknown scenario '" + s + "' (expected 3gpp or toy)");
}

void DatasetConfig::validate() const
{
    if (dims.n_rx == 0 || dims.n_tx == 0)
        throw std::invalid_argument("dataset: antenna counts must be positive");
    if (scenario == Scenario::threegpp && clusters == 0)
        throw std::invalid_argument("dataset: need at least one cluster");
    if (!(spread_deg > 0.0))
        throw std::invalid_argument("dataset: angular spread must be positive");
    if (!(sector_half_width > 0.0) || sector_half_width > std::numbers::pi)
        throw std::invalid_argument("dataset: sector half width must lie in (0, pi]");
    if (n_train == 0)
        throw std::invalid_argument("dataset: empty training split");
    if (!(toy_decay > 0.0) || !(toy_floor >= 0.0))
        throw std::invalid_argument("dataset: invalid toy spectrum parameters");
}

void DatasetConfig::apply_desk_scale()
{
    n_train = 20000;
    n_val = 2000;
    n_test = 2000;
}

std::vector<double> toy_spectrum(const DatasetConfig& cfg)
{
    auto profile = [&](std::size_t n) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double kw = k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(n - k);
            p[k] = std::exp(-kw / cfg.toy_decay) + cfg.toy_floor;
        }
        return p;
    };
    const auto pr = profile(cfg.dims.n_rx);
    const auto pt = cfg.dims.n_tx > 1 ? profile(cfg.dims.n_tx) : std::vector<double>{1.0};
    std::vector<double> c;
    c.reserve(cfg.dims.size());
    for (double t : pt)
        for (double r : pr)
            c.push_back(t * r);
    double mean = 0.0;
    for (double v : c)
        mean += v;
    mean /= static_cast<double>(c.size());
    for (auto& v : c)
        v /= mean;
    return c;
}

std::pair<std::size_t, std::size_t> ChannelDataset::range(Split s) const
{
    const auto& c = config;
    switch (s) {
    case Split::train:
        return {0, c.n_train};
    case Split::val:
        return {c.n_train, c.n_train + c.n_val};
    case Split::test:
        return {c.n_train + c.n_val, c.total()};
    }
    return {0, 0};
}

ComplexTensor ChannelDataset::channel(std::size_t i) const
{
    if (i >= size())
        throw std::out_of_range("dataset sample index out of range");
    const auto first = channels.begin() + static_cast<std::ptrdiff_t>(i * n());
    return ComplexTensor::vector(std::vector<cplx>(first, first + static_cast<std::ptrdiff_t>(n())));
}

KronCovariance ChannelDataset::covariance(std::size_t i) const
{
    if (config.scenario != Scenario::threegpp)
        throw std::logic_error("per-sample covariances exist for 3gpp data only");
    if (i >= deltas.size())
        throw std::out_of_range("dataset sample index out of range");
    auto c = build_kron_ccm(deltas[i], config.dims);
    c.rx = (scale * scale) * c.rx;
    return c;
}

CirculantSpec ChannelDataset::toy_covariance() const
{
    if (config.scenario != Scenario::toy)
        throw std::logic_error("toy covariance requested for a 3gpp dataset");
    return CirculantSpec::block(toy_spectrum, config.dims);
}

double ChannelDataset::mean_power(Split s) const
{
    const auto [b, e] = range(s);
    if (b == e)
        return 0.0;
    double acc = 0.0;
    for (std::size_t i = b * n(); i < e * n(); ++i)
        acc += std::norm(channels[i]);
    return acc / static_cast<double>((e - b) * n());
}

ChannelDataset generate_dataset(const DatasetConfig& cfg)
{
    cfg.validate();
    ChannelDataset d;
    d.config = cfg;
    const auto n = cfg.dims.size();
    const auto total = cfg.total();
    d.channels.resize(total * n);
    const bool toy = cfg.scenario == Scenario::toy;
    std::vector<double> sqrt_c;
    if (toy) {
        d.toy_spectrum = toy_spectrum(cfg);
        for (double v : d.toy_spectrum)
            sqrt_c.push_back(std::sqrt(v));
    } else {
        d.deltas.resize(total);
    }
    const auto q = UnitaryTransform::for_dims(cfg.dims);

    parallel_for(total, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng = make_stream(cfg.seed, i);
            ComplexTensor h;
            if (toy) {
                // h = Q^H diag(sqrt(c)) w
                h = ComplexTensor::zeros(n);
                for (std::size_t k = 0; k < n; ++k)
                    h[k] = sqrt_c[k] * standard_complex_normal(rng);
                q.apply_inplace(h.data(), Direction::adjoint);
            } else {
                d.deltas[i] = sample_cluster_params(rng, cfg.clusters, cfg.dims.n_tx > 1 ? 2 : 1,
                                                    deg_to_rad(cfg.spread_deg), cfg.sector_half_width);
                h = sample_channel(build_kron_ccm(d.deltas[i], cfg.dims), rng);
            }
            std::copy(h.values().begin(), h.values().end(), d.channels.begin() + static_cast<std::ptrdiff_t>(i * n));
        }
    });

    const double p = d.mean_power(Split::train);
    if (!(p > 0.0))
        throw std::runtime_error("generate_dataset: training split has zero power");
    d.scale = 1.0 / std::sqrt(p);
    for (auto& v : d.channels)
        v *= d.scale;
    for (auto& v : d.toy_spectrum)
        v *= d.scale * d.scale;
    return d;
}

void save_dataset(const ChannelDataset& d, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    io::Writer w(os);
    const auto& c = d.config;
    w.magic(kMagic);
    w.u32(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(c.scenario));
    w.u64(c.dims.n_rx);
    w.u64(c.dims.n_tx);
    w.u64(c.clusters);
    w.f64(c.spread_deg);
    w.f64(c.sector_half_width);
    w.u64(c.seed);
    w.u64(c.n_train);
    w.u64(c.n_val);
    w.u64(c.n_test);
    w.f64(c.toy_decay);
    w.f64(c.toy_floor);
    w.f64(d.scale);
    w.f64s(d.toy_spectrum);
    w.u64(d.channels.size());
    w.raw(d.channels.data(), d.channels.size() * sizeof(cplx));
    w.u64(d.deltas.size());
    for (const auto& delta : d.deltas) {
        w.u64(delta.clusters());
        w.u32(static_cast<std::uint32_t>(delta.sides()));
        for (std::size_t p = 0; p < delta.clusters(); ++p) {
            w.f64(delta.gains[p]);
            w.f64(delta.rx_angles[p]);
            if (delta.sides() == 2)
                w.f64(delta.tx_angles[p]);
            w.f64(delta.spreads[p]);
        }
    }
    os.flush();
    if (!os)
        throw std::runtime_error("failed writing " + path.string());
}

ChannelDataset load_dataset(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open dataset " + path.string());
    io::Reader r(is);
    r.expect_magic(kMagic);
    const auto version = r.u32();
    if (version != kDatasetVersion)
        throw io::FormatError("dataset version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kDatasetVersion) + ")");
    ChannelDataset d;
    auto& c = d.config;
    const auto sc = r.u32();
    if (sc > 1)
        throw io::FormatError("unknown scenario code in dataset");
    c.scenario = static_cast<Scenario>(sc);
    c.dims.n_rx = r.u64();
    c.dims.n_tx = r.u64();
    c.clusters = r.u64();
    c.spread_deg = r.f64();
    c.sector_half_width = r.f64();
    c.seed = r.u64();
    c.n_train = r.u64();
    c.n_val = r.u64();
    c.n_test = r.u64();
    c.toy_decay = r.f64();
    c.toy_floor = r.f64();
    d.scale = r.f64();
    d.toy_spectrum = r.f64s();
    const auto count = r.u64();
    if (count != c.total() * c.dims.size())
        throw io::FormatError("dataset channel count does not match its config");
    d.channels.resize(count);
    r.raw(d.channels.data(), count * sizeof(cplx));
    const auto nd = r.u64();
    if (nd != 0 && nd != c.total())
        throw io::FormatError("dataset parameter record count does not match its config");
    d.deltas.resize(nd);
    for (auto& delta : d.deltas) {
        const auto p = r.u64();
        const auto sides = r.u32();
        if (p > 1024 || sides < 1 || sides > 2)
            throw io::FormatError("corrupt cluster record");
        for (std::uint64_t k = 0; k < p; ++k) {
            delta.gains.push_back(r.f64());
            delta.rx_angles.push_back(r.f64());
            if (sides == 2)
                delta.tx_angles.push_back(r.f64());
            delta.spreads.push_back(r.f64());
        }
    }
    return d;
}

} // namespace vaecme::channel
