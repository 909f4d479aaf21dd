#include "vaecme/vae/model.hpp"

#include <cmath>
#include <stdexcept>

namespace vaecme::vae {

using nn::LayerSpec;
using nn::Mode;
using nn::Tensor;

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::genie:
        return "genie";
    case Variant::noisy:
        return "noisy";
    case Variant::real:
        return "real";
    }
    return "?";
}

Variant variant_from_string(const std::string& s)
{
    if (s == "genie")
        return Variant::genie;
    if (s == "noisy")
        return Variant::noisy;
    if (s == "real")
        return Variant::real;
    throw std::invalid_argument("unknown variant '" + s + "' (expected genie, noisy or real)");
}

void VaeConfig::validate() const
{
    if (latent_dim < 1)
        throw std::invalid_argument("vae config: latent_dim must be >= 1");
    if (patience < 1)
        throw std::invalid_argument("vae config: patience must be >= 1");
    if (!(snr_max_db > snr_min_db))
        throw std::invalid_argument("vae config: SNR training range is degenerate");
    if (batch_size < 2)
        throw std::invalid_argument("vae config: batch_size must be >= 2 (batch norm)");
    if (base_channels < 1 || kernel < 1 || kernel % 2 == 0 || kernel_2d < 1 || kernel_2d % 2 == 0)
        throw std::invalid_argument("vae config: kernels must be odd and channels positive");
    if (!(growth > 0.0) || !(free_bits >= 0.0) || !(learning_rate >= 0.0) || !(clamp > 0.0))
        throw std::invalid_argument("vae config: invalid numeric hyperparameter");
    if (max_epochs < 1)
        throw std::invalid_argument("vae config: max_epochs must be >= 1");
}

std::size_t block_channels(const VaeConfig& c, std::size_t i)
{
    const double v = static_cast<double>(c.base_channels) * std::pow(c.growth, static_cast<double>(i + 1));
    return static_cast<std::size_t>(std::floor(v + 0.5));
}

Tensor stack_complex(const std::vector<ComplexTensor>& xs)
{
    if (xs.empty())
        throw std::invalid_argument("stack_complex: empty batch");
    const auto n = xs[0].size();
    std::vector<double> v(xs.size() * 2 * n);
    for (std::size_t b = 0; b < xs.size(); ++b) {
        require_same_size(n, xs[b].size(), "stack_complex");
        for (std::size_t k = 0; k < n; ++k) {
            v[b * 2 * n + k] = xs[b][k].real();
            v[b * 2 * n + n + k] = xs[b][k].imag();
        }
    }
    return Tensor::constant({xs.size(), 2 * n}, std::move(v));
}

ComplexTensor unstack_complex(std::span<const double> row, std::size_t n)
{
    ComplexTensor out = ComplexTensor::zeros(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = {row[k], row[n + k]};
    return out;
}

namespace {

struct Stage {
    std::size_t channels;
    std::array<std::size_t, 2> extent; // (tx, rx) for 2D, (len, 1) for 1D
    std::array<std::size_t, 2> stride;
};

std::size_t halve_stride(std::size_t extent) { return (extent >= 2 && extent % 2 == 0) ? 2 : 1; }

} // namespace

VaeModel::VaeModel(VaeConfig cfg, KronDims dims) : cfg_(std::move(cfg)), dims_(dims)
{
    cfg_.validate();
    if (dims_.size() == 0)
        throw std::invalid_argument("VaeModel: empty dimensions");
    const bool mimo = dims_.n_tx > 1;
    const std::size_t n = dims_.size();
    const std::size_t k = mimo ? cfg_.kernel_2d : cfg_.kernel;
    const std::size_t pad = k / 2;

    // downsampling schedule; blocks stop halving an axis once it is odd or 1
    std::vector<Stage> stages;
    std::array<std::size_t, 2> ext = mimo ? std::array<std::size_t, 2>{dims_.n_tx, dims_.n_rx}
                                          : std::array<std::size_t, 2>{dims_.n_rx, 1};
    for (std::size_t i = 0; i < cfg_.blocks; ++i) {
        std::array<std::size_t, 2> s{halve_stride(ext[0]), mimo ? halve_stride(ext[1]) : 1};
        if (s[0] == 1 && s[1] == 1)
            break;
        ext = {ext[0] / s[0], ext[1] / s[1]};
        stages.push_back({block_channels(cfg_, i), ext, s});
    }
    const std::size_t last_ch = stages.empty() ? cfg_.base_channels : stages.back().channels;
    const std::size_t last_size = last_ch * ext[0] * ext[1];

    auto conv = [&](std::size_t cin, std::size_t cout, std::size_t kk, std::array<std::size_t, 2> s,
                    std::size_t p) {
        return mimo ? LayerSpec::conv2d(cin, cout, {kk, kk}, s, {p, p}) : LayerSpec::conv1d(cin, cout, kk, s[0], p);
    };
    auto convt = [&](std::size_t cin, std::size_t cout, std::array<std::size_t, 2> s) {
        return mimo ? LayerSpec::transposed_conv2d(cin, cout, {k, k}, s, {pad, pad}, {s[0] - 1, s[1] - 1})
                    : LayerSpec::transposed_conv1d(cin, cout, k, s[0], pad, s[0] - 1);
    };

    std::vector<LayerSpec> enc{conv(2, cfg_.base_channels, 1, {1, 1}, 0)};
    std::size_t ch = cfg_.base_channels;
    for (const auto& st : stages) {
        enc.push_back(conv(ch, st.channels, k, st.stride, pad));
        enc.push_back(LayerSpec::batch_norm(st.channels));
        enc.push_back(LayerSpec::relu());
        ch = st.channels;
    }
    enc.push_back(LayerSpec::reshape({last_size}));
    enc.push_back(LayerSpec::dense(last_size, 2 * cfg_.latent_dim));

    std::vector<LayerSpec> dec{LayerSpec::dense(cfg_.latent_dim, last_size), LayerSpec::relu()};
    dec.push_back(mimo ? LayerSpec::reshape({last_ch, ext[0], ext[1]}) : LayerSpec::reshape({last_ch, ext[0]}));
    for (std::size_t i = stages.size(); i-- > 0;) {
        const std::size_t out = i == 0 ? cfg_.base_channels : stages[i - 1].channels;
        dec.push_back(convt(stages[i].channels, out, stages[i].stride));
        dec.push_back(LayerSpec::batch_norm(out));
        dec.push_back(LayerSpec::relu());
    }
    dec.push_back(conv(cfg_.base_channels, 3, 1, {1, 1}, 0));
    dec.push_back(LayerSpec::reshape({3 * n}));
    dec.push_back(LayerSpec::dense(3 * n, 3 * n));

    const nn::Shape in_shape = mimo ? nn::Shape{2, dims_.n_tx, dims_.n_rx} : nn::Shape{2, dims_.n_rx};
    encoder_ = nn::Sequential(std::move(enc), in_shape);
    decoder_ = nn::Sequential(std::move(dec), {cfg_.latent_dim});
    for (auto* net : {&encoder_, &decoder_})
        for (auto& l : net->layers()) {
            l.bn.momentum = cfg_.bn_momentum;
            l.bn.eps = cfg_.bn_eps;
        }
}

void VaeModel::initialize(Rng& rng)
{
    encoder_.initialize(rng);
    decoder_.initialize(rng);
}

std::vector<Tensor> VaeModel::parameters() const
{
    auto p = encoder_.parameters();
    const auto d = decoder_.parameters();
    p.insert(p.end(), d.begin(), d.end());
    return p;
}

ComplexTensor VaeModel::encoder_input(const ComplexTensor* h, const ComplexTensor* y,
                                      const channel::ObservationModel& model) const
{
    const auto q = transform();
    if (cfg_.variant == Variant::genie) {
        if (!h)
            throw std::invalid_argument("genie encoder input needs the ground-truth channel");
        return q.apply(*h, Direction::forward);
    }
    if (!y)
        throw std::invalid_argument(to_string(cfg_.variant) + " encoder input needs an observation");
    return q.apply(model.apply_adjoint(*y), Direction::forward);
}

Tensor VaeModel::network_input(const std::vector<ComplexTensor>& angular) const
{
    const auto flat = stack_complex(angular);
    nn::Shape s{angular.size()};
    const auto& in = encoder_.input_shape();
    s.insert(s.end(), in.begin(), in.end());
    return Tensor::constant(std::move(s), std::vector<double>(flat.value().begin(), flat.value().end()));
}

VaeModel::Encoded VaeModel::encode(const Tensor& input, Mode mode)
{
    const auto out = encoder_.forward(input, mode);
    const auto l = cfg_.latent_dim;
    return {nn::slice_columns(out, 0, l), nn::clamp(nn::slice_columns(out, l, 2 * l), -cfg_.clamp, cfg_.clamp)};
}

Tensor VaeModel::reparameterize(const Encoded& e, const std::vector<double>& eps) const
{
    const auto& s = e.mu.shape();
    if (eps.size() != e.mu.size())
        throw std::invalid_argument("reparameterize: need one standard normal draw per latent entry");
    const auto sigma = nn::exp(nn::scale(e.logvar, 0.5));
    return nn::add(e.mu, nn::mul(sigma, Tensor::constant(s, eps)));
}

VaeModel::Decoded VaeModel::decode(const Tensor& z, Mode mode)
{
    const auto out = decoder_.forward(z, mode);
    const auto n = this->n();
    return {nn::slice_columns(out, 0, 2 * n), nn::clamp(nn::slice_columns(out, 2 * n, 3 * n), -cfg_.clamp, cfg_.clamp)};
}

namespace {
constexpr std::size_t kInferenceChunk = 512;
}

std::vector<LatentGaussian> VaeModel::posterior(const std::vector<ComplexTensor>& angular)
{
    nn::NoGradGuard ng;
    std::vector<LatentGaussian> out;
    out.reserve(angular.size());
    const auto l = cfg_.latent_dim;
    for (std::size_t b = 0; b < angular.size(); b += kInferenceChunk) {
        const std::vector<ComplexTensor> chunk(angular.begin() + static_cast<std::ptrdiff_t>(b),
                                               angular.begin() +
                                                   static_cast<std::ptrdiff_t>(std::min(angular.size(), b + kInferenceChunk)));
        const auto e = encode(network_input(chunk), Mode::eval);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            LatentGaussian g;
            g.mu.assign(e.mu.value().begin() + static_cast<std::ptrdiff_t>(i * l),
                        e.mu.value().begin() + static_cast<std::ptrdiff_t>((i + 1) * l));
            for (std::size_t d = 0; d < l; ++d)
                g.var.push_back(std::exp(e.logvar.value()[i * l + d]));
            out.push_back(std::move(g));
        }
    }
    return out;
}

std::vector<CondGaussianMoments> VaeModel::moments(const std::vector<std::vector<double>>& z)
{
    nn::NoGradGuard ng;
    std::vector<CondGaussianMoments> out;
    out.reserve(z.size());
    const auto l = cfg_.latent_dim;
    const auto n = this->n();
    for (std::size_t b = 0; b < z.size(); b += kInferenceChunk) {
        const std::size_t e = std::min(z.size(), b + kInferenceChunk);
        std::vector<double> flat;
        flat.reserve((e - b) * l);
        for (std::size_t i = b; i < e; ++i) {
            require_same_size(l, z[i].size(), "latent vector");
            flat.insert(flat.end(), z[i].begin(), z[i].end());
        }
        const auto d = decode(Tensor::constant({e - b, l}, std::move(flat)), Mode::eval);
        for (std::size_t i = 0; i < e - b; ++i) {
            CondGaussianMoments m;
            m.mu = unstack_complex(d.mean.value().subspan(i * 2 * n, 2 * n), n);
            for (std::size_t k = 0; k < n; ++k)
                m.c.push_back(std::exp(d.log_c.value()[i * n + k]));
            out.push_back(std::move(m));
        }
    }
    return out;
}

} // namespace vaecme::vae
