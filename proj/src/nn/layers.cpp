#include "vaecme/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace vaecme::nn {

namespace {

constexpr std::array<std::pair<LayerKind, const char*>, 9> kKindNames{{
    {LayerKind::conv1d, "conv1d"},
    {LayerKind::conv2d, "conv2d"},
    {LayerKind::transposed_conv1d, "transposed_conv1d"},
    {LayerKind::transposed_conv2d, "transposed_conv2d"},
    {LayerKind::dense, "dense"},
    {LayerKind::batch_norm, "batch_norm"},
    {LayerKind::relu, "relu"},
    {LayerKind::exp, "exp"},
    {LayerKind::reshape, "reshape"},
}};

bool is_1d(LayerKind k) { return k == LayerKind::conv1d || k == LayerKind::transposed_conv1d; }
bool is_transposed(LayerKind k) { return k == LayerKind::transposed_conv1d || k == LayerKind::transposed_conv2d; }

[[noreturn]] void shape_error(const LayerSpec& s, const Shape& in)
{
    throw std::invalid_argument(to_string(s.kind) + " layer cannot take input of shape " + shape_string(in));
}

} // namespace

std::string to_string(LayerKind k)
{
    for (const auto& [kind, name] : kKindNames)
        if (kind == k)
            return name;
    return "unknown";
}

LayerKind layer_kind_from_string(const std::string& s)
{
    for (const auto& [kind, name] : kKindNames)
        if (s == name)
            return kind;
    throw std::invalid_argument("unknown layer kind '" + s + "'");
}

LayerSpec LayerSpec::conv1d(std::size_t cin, std::size_t cout, std::size_t k, std::size_t s, std::size_t p)
{
    LayerSpec l;
    l.kind = LayerKind::conv1d;
    l.in_channels = cin;
    l.out_channels = cout;
    l.kernel = {k, 1};
    l.stride = {s, 1};
    l.padding = {p, 0};
    return l;
}

LayerSpec LayerSpec::conv2d(std::size_t cin, std::size_t cout, std::array<std::size_t, 2> k,
                            std::array<std::size_t, 2> s, std::array<std::size_t, 2> p)
{
    LayerSpec l;
    l.kind = LayerKind::conv2d;
    l.in_channels = cin;
    l.out_channels = cout;
    l.kernel = k;
    l.stride = s;
    l.padding = p;
    return l;
}

LayerSpec LayerSpec::transposed_conv1d(std::size_t cin, std::size_t cout, std::size_t k, std::size_t s,
                                       std::size_t p, std::size_t op)
{
    auto l = conv1d(cin, cout, k, s, p);
    l.kind = LayerKind::transposed_conv1d;
    l.output_padding = {op, 0};
    return l;
}

LayerSpec LayerSpec::transposed_conv2d(std::size_t cin, std::size_t cout, std::array<std::size_t, 2> k,
                                       std::array<std::size_t, 2> s, std::array<std::size_t, 2> p,
                                       std::array<std::size_t, 2> op)
{
    auto l = conv2d(cin, cout, k, s, p);
    l.kind = LayerKind::transposed_conv2d;
    l.output_padding = op;
    return l;
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out)
{
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.in_channels = in;
    l.out_channels = out;
    return l;
}

LayerSpec LayerSpec::batch_norm(std::size_t channels)
{
    LayerSpec l;
    l.kind = LayerKind::batch_norm;
    l.in_channels = channels;
    l.out_channels = channels;
    return l;
}

LayerSpec LayerSpec::relu() { return {}; }

LayerSpec LayerSpec::exp()
{
    LayerSpec l;
    l.kind = LayerKind::exp;
    return l;
}

LayerSpec LayerSpec::reshape(Shape target)
{
    LayerSpec l;
    l.kind = LayerKind::reshape;
    l.target = std::move(target);
    return l;
}

Conv2dGeometry LayerSpec::geometry() const
{
    Conv2dGeometry g;
    g.kernel = kernel;
    g.stride = stride;
    g.padding = padding;
    g.output_padding = output_padding;
    return g;
}

Shape LayerSpec::output_shape(const Shape& in) const
{
    switch (kind) {
    case LayerKind::relu:
    case LayerKind::exp:
        return in;
    case LayerKind::reshape:
        if (shape_size(target) != shape_size(in))
            shape_error(*this, in);
        return target;
    case LayerKind::dense:
        if (in.size() != 1 || in[0] != in_channels)
            shape_error(*this, in);
        return {out_channels};
    case LayerKind::batch_norm:
        if (in.empty() || in[0] != in_channels)
            shape_error(*this, in);
        return in;
    default:
        break;
    }
    const std::size_t rank = is_1d(kind) ? 2 : 3;
    if (in.size() != rank || in[0] != in_channels)
        shape_error(*this, in);
    const std::size_t w = rank == 3 ? in[2] : 1;
    try {
        const auto g = geometry();
        const auto o = is_transposed(kind) ? g.transposed_out(in[1], w) : g.conv_out(in[1], w);
        if (rank == 2)
            return {out_channels, o[0]};
        return {out_channels, o[0], o[1]};
    } catch (const std::invalid_argument&) {
        shape_error(*this, in);
    }
}

Layer::Layer(LayerSpec s) : spec(std::move(s))
{
    const auto k = spec.kernel[0] * spec.kernel[1];
    switch (spec.kind) {
    case LayerKind::conv1d:
    case LayerKind::conv2d:
        params = {Tensor::parameter({spec.out_channels, spec.in_channels, spec.kernel[0], spec.kernel[1]},
                                    std::vector<double>(spec.out_channels * spec.in_channels * k, 0.0)),
                  Tensor::parameter({spec.out_channels}, std::vector<double>(spec.out_channels, 0.0))};
        break;
    case LayerKind::transposed_conv1d:
    case LayerKind::transposed_conv2d:
        params = {Tensor::parameter({spec.in_channels, spec.out_channels, spec.kernel[0], spec.kernel[1]},
                                    std::vector<double>(spec.out_channels * spec.in_channels * k, 0.0)),
                  Tensor::parameter({spec.out_channels}, std::vector<double>(spec.out_channels, 0.0))};
        break;
    case LayerKind::dense:
        params = {Tensor::parameter({spec.out_channels, spec.in_channels},
                                    std::vector<double>(spec.out_channels * spec.in_channels, 0.0)),
                  Tensor::parameter({spec.out_channels}, std::vector<double>(spec.out_channels, 0.0))};
        break;
    case LayerKind::batch_norm:
        params = {Tensor::parameter({spec.in_channels}, std::vector<double>(spec.in_channels, 1.0)),
                  Tensor::parameter({spec.in_channels}, std::vector<double>(spec.in_channels, 0.0))};
        bn.running_mean.assign(spec.in_channels, 0.0);
        bn.running_var.assign(spec.in_channels, 1.0);
        break;
    default:
        break;
    }
}

void Layer::initialize(Rng& rng)
{
    if (spec.kind == LayerKind::batch_norm) {
        for (auto& v : params[0].mutable_value())
            v = 1.0;
        for (auto& v : params[1].mutable_value())
            v = 0.0;
        bn.running_mean.assign(spec.in_channels, 0.0);
        bn.running_var.assign(spec.in_channels, 1.0);
        return;
    }
    if (params.empty())
        return;
    const double fan_in = static_cast<double>(spec.in_channels * (spec.kind == LayerKind::dense
                                                                      ? 1
                                                                      : spec.kernel[0] * spec.kernel[1]));
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& p : params)
        for (auto& v : p.mutable_value())
            v = u(rng);
}

Tensor Layer::forward(const Tensor& x, Mode mode)
{
    const auto& xs = x.shape();
    if (xs.empty())
        throw std::invalid_argument(to_string(spec.kind) + " layer: input has no batch axis");
    const std::size_t batch = xs[0];
    const Shape per(xs.begin() + 1, xs.end());
    const Shape out = spec.output_shape(per);
    Shape full{batch};
    full.insert(full.end(), out.begin(), out.end());

    switch (spec.kind) {
    case LayerKind::relu:
        return nn::relu(x);
    case LayerKind::exp:
        return nn::exp(x);
    case LayerKind::reshape:
        return nn::reshape(x, full);
    case LayerKind::dense:
        return linear(x, params[0], params[1]);
    case LayerKind::batch_norm:
        return nn::batch_norm(x, params[0], params[1], bn, mode == Mode::train);
    default:
        break;
    }
    const auto g = spec.geometry();
    const bool one_d = is_1d(spec.kind);
    const Tensor x4 = one_d ? nn::reshape(x, {batch, per[0], per[1], 1}) : x;
    Tensor y = is_transposed(spec.kind) ? conv_transpose2d(x4, params[0], params[1], g)
                                        : conv2d(x4, params[0], params[1], g);
    return one_d ? nn::reshape(y, full) : y;
}

Sequential::Sequential(std::vector<LayerSpec> specs, Shape input_shape) : input_shape_(std::move(input_shape))
{
    Shape s = input_shape_;
    layers_.reserve(specs.size());
    for (auto& spec : specs) {
        s = spec.output_shape(s);
        layers_.emplace_back(std::move(spec));
    }
}

Shape Sequential::output_shape() const
{
    Shape s = input_shape_;
    for (const auto& l : layers_)
        s = l.spec.output_shape(s);
    return s;
}

std::vector<LayerSpec> Sequential::specs() const
{
    std::vector<LayerSpec> out;
    for (const auto& l : layers_)
        out.push_back(l.spec);
    return out;
}

void Sequential::initialize(Rng& rng)
{
    for (auto& l : layers_)
        l.initialize(rng);
}

Tensor Sequential::forward(const Tensor& x, Mode mode)
{
    const auto& xs = x.shape();
    if (xs.size() != input_shape_.size() + 1 || !std::equal(input_shape_.begin(), input_shape_.end(), xs.begin() + 1))
        throw std::invalid_argument("network expects per-sample shape " + shape_string(input_shape_) + ", got " +
                                    shape_string(xs));
    Tensor h = x;
    for (auto& l : layers_)
        h = l.forward(h, mode);
    return h;
}

std::vector<Tensor> Sequential::parameters() const
{
    std::vector<Tensor> out;
    for (const auto& l : layers_)
        out.insert(out.end(), l.params.begin(), l.params.end());
    return out;
}

void Sequential::set_bn_momentum(double m)
{
    for (auto& l : layers_)
        l.bn.momentum = m;
}

void Sequential::save(io::Writer& w) const
{
    w.u64(input_shape_.size());
    for (auto d : input_shape_)
        w.u64(d);
    w.u64(layers_.size());
    for (const auto& l : layers_) {
        const auto& s = l.spec;
        w.str(to_string(s.kind));
        w.u64(s.in_channels);
        w.u64(s.out_channels);
        for (const auto* a : {&s.kernel, &s.stride, &s.padding, &s.output_padding})
            for (auto v : *a)
                w.u64(v);
        w.u64(s.target.size());
        for (auto d : s.target)
            w.u64(d);
        w.u64(l.params.size());
        for (const auto& p : l.params)
            w.f64s(std::vector<double>(p.value().begin(), p.value().end()));
        w.f64s(l.bn.running_mean);
        w.f64s(l.bn.running_var);
        w.f64(l.bn.momentum);
        w.f64(l.bn.eps);
    }
}

Sequential Sequential::load(io::Reader& r)
{
    Shape in(r.u64());
    for (auto& d : in)
        d = r.u64();
    const auto count = r.u64();
    std::vector<LayerSpec> specs;
    struct Saved {
        std::vector<std::vector<double>> params;
        BatchNormState bn;
    };
    std::vector<Saved> saved;
    for (std::uint64_t i = 0; i < count; ++i) {
        LayerSpec s;
        s.kind = layer_kind_from_string(r.str());
        s.in_channels = r.u64();
        s.out_channels = r.u64();
        for (auto* a : {&s.kernel, &s.stride, &s.padding, &s.output_padding})
            for (auto& v : *a)
                v = r.u64();
        s.target.resize(r.u64());
        for (auto& d : s.target)
            d = r.u64();
        Saved sv;
        sv.params.resize(r.u64());
        for (auto& p : sv.params)
            p = r.f64s();
        sv.bn.running_mean = r.f64s();
        sv.bn.running_var = r.f64s();
        sv.bn.momentum = r.f64();
        sv.bn.eps = r.f64();
        specs.push_back(std::move(s));
        saved.push_back(std::move(sv));
    }
    Sequential net(std::move(specs), std::move(in));
    for (std::size_t i = 0; i < saved.size(); ++i) {
        auto& l = net.layers_[i];
        if (saved[i].params.size() != l.params.size())
            throw io::FormatError("parameter count mismatch in layer " + std::to_string(i));
        for (std::size_t p = 0; p < l.params.size(); ++p) {
            if (saved[i].params[p].size() != l.params[p].size())
                throw io::FormatError("parameter size mismatch in layer " + std::to_string(i));
            std::copy(saved[i].params[p].begin(), saved[i].params[p].end(), l.params[p].mutable_value().begin());
        }
        if (saved[i].bn.running_mean.size() != l.bn.running_mean.size() ||
            saved[i].bn.running_var.size() != l.bn.running_var.size())
            throw io::FormatError("batch-norm statistics mismatch in layer " + std::to_string(i));
        l.bn = std::move(saved[i].bn);
    }
    return net;
}

} // namespace vaecme::nn
