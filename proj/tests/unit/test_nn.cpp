#include "vaecme/core/rng.hpp"
#include "vaecme/nn/adam.hpp"
#include "vaecme/nn/gradcheck.hpp"
#include "vaecme/nn/layers.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace vaecme;
using namespace vaecme::nn;

namespace {

std::vector<double> randn(std::size_t n, Rng& rng)
{
    std::vector<double> v(n);
    for (auto& x : v)
        x = standard_normal(rng);
    return v;
}

// sum(out * r) with a fixed random r so every output coordinate matters
Tensor weighted_sum(const Tensor& out, const std::vector<double>& r)
{
    return sum(mul(out, Tensor::constant(out.shape(), r)));
}

void check_layer(LayerSpec spec, Shape per_sample, std::size_t batch, Mode mode, std::uint64_t seed)
{
    Rng rng(seed);
    Sequential net({spec}, per_sample);
    net.initialize(rng);
    if (spec.kind == LayerKind::batch_norm) {
        // non-trivial affine and running statistics
        for (auto& p : net.parameters())
            for (auto& v : p.mutable_value())
                v += 0.3 * standard_normal(rng);
        auto& bn = net.layers()[0].bn;
        for (auto& v : bn.running_mean)
            v = standard_normal(rng);
        for (auto& v : bn.running_var)
            v = 0.5 + std::abs(standard_normal(rng));
        bn.momentum = 0.0;
    }
    Shape full{batch};
    full.insert(full.end(), per_sample.begin(), per_sample.end());
    auto x = Tensor::parameter(full, randn(shape_size(full), rng));
    const Shape out_shape = net.output_shape();
    const auto r = randn(batch * shape_size(out_shape), rng);

    auto params = net.parameters();
    params.push_back(x);
    const auto res = gradient_check(params, [&] { return weighted_sum(net.forward(x, mode), r); });
    INFO(to_string(spec.kind), " ", res.first_failure);
    CHECK(res.ok());
    CHECK(res.coordinates > 0);
}

} // namespace

TEST_CASE("relu and exp layers")
{
    Sequential r({LayerSpec::relu()}, {2});
    const auto y = r.forward(Tensor::constant({1, 2}, {-1.0, 2.0}), Mode::eval);
    CHECK(y.value()[0] == 0.0);
    CHECK(y.value()[1] == 2.0);

    Sequential e({LayerSpec::exp()}, {2});
    const auto z = e.forward(Tensor::constant({1, 2}, {0.0, 1.0}), Mode::eval);
    CHECK(z.value()[0] == 1.0);
    CHECK(z.value()[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
}

TEST_CASE("stride-2 unit-kernel conv1d picks even samples")
{
    Sequential net({LayerSpec::conv1d(1, 1, 1, 2, 0)}, {1, 8});
    net.layers()[0].params[0].mutable_value()[0] = 1.0;
    net.layers()[0].params[1].mutable_value()[0] = 0.0;
    std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6};
    const auto y = net.forward(Tensor::constant({1, 1, 8}, x), Mode::eval);
    REQUIRE(y.shape() == Shape{1, 1, 4});
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(y.value()[i] == x[2 * i]);
}

TEST_CASE("conv1d matches a hand-rolled convolution")
{
    Rng rng(4);
    const std::size_t cin = 2, cout = 3, k = 3, len = 9, s = 2, p = 1;
    Sequential net({LayerSpec::conv1d(cin, cout, k, s, p)}, {cin, len});
    net.initialize(rng);
    const auto x = randn(cin * len, rng);
    const auto y = net.forward(Tensor::constant({1, cin, len}, x), Mode::eval);
    const auto w = net.layers()[0].params[0].value();
    const auto b = net.layers()[0].params[1].value();
    const std::size_t lo = (len + 2 * p - k) / s + 1;
    REQUIRE(y.shape() == Shape{1, cout, lo});
    for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t t = 0; t < lo; ++t) {
            double acc = b[o];
            for (std::size_t c = 0; c < cin; ++c)
                for (std::size_t j = 0; j < k; ++j) {
                    const auto src = static_cast<long>(t * s + j) - static_cast<long>(p);
                    if (src >= 0 && src < static_cast<long>(len))
                        acc += w[(o * cin + c) * k + j] * x[c * len + static_cast<std::size_t>(src)];
                }
            CHECK(y.value()[o * lo + t] == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("transposed conv is the adjoint of conv in its input")
{
    Rng rng(12);
    Conv2dGeometry g;
    g.kernel = {3, 3};
    g.stride = {2, 2};
    g.padding = {1, 1};
    g.output_padding = {1, 1};
    const std::size_t cin = 2, cout = 3;
    const auto w = Tensor::constant({cout, cin, 3, 3}, randn(cout * cin * 9, rng));
    const auto zero_cin = Tensor::zeros({cin});
    const auto zero_cout = Tensor::zeros({cout});
    const auto x = Tensor::constant({2, cin, 8, 6}, randn(2 * cin * 48, rng));
    const auto u = Tensor::constant({2, cout, 4, 3}, randn(2 * cout * 12, rng));
    // <conv(x), u> == <x, convT(u)> with W reinterpreted as [Cout, Cin, k, k] -> [Cin_T = Cout, Cout_T = Cin]
    const auto cx = conv2d(x, w, zero_cout, g);
    const auto tu = conv_transpose2d(u, w, zero_cin, g);
    REQUIRE(tu.shape() == x.shape());
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        lhs += cx.value()[i] * u.value()[i];
    for (std::size_t i = 0; i < x.size(); ++i)
        rhs += x.value()[i] * tu.value()[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("backward basics")
{
    auto p = Tensor::parameter({3}, {1.0, 2.0, 3.0});
    sum(square(p)).backward();
    CHECK(p.grad()[0] == 2.0);
    CHECK(p.grad()[1] == 4.0);
    CHECK(p.grad()[2] == 6.0);

    SUBCASE("constant loss leaves gradients at zero")
    {
        auto q = Tensor::parameter({2}, {1.0, -1.0});
        sum(Tensor::constant({2}, {5.0, 6.0})).backward();
        auto used = Tensor::parameter({1}, {2.0});
        auto unused = Tensor::parameter({1}, {3.0});
        sum(scale(used, 0.0)).backward();
        for (double g : q.grad())
            CHECK(g == 0.0);
        CHECK(used.grad()[0] == 0.0);
        CHECK(unused.grad()[0] == 0.0);
    }

    SUBCASE("errors")
    {
        CHECK_THROWS_AS(Tensor().backward(), std::logic_error);
        CHECK_THROWS_AS(square(p).backward(), std::logic_error);
    }

    SUBCASE("shared subexpression accumulates")
    {
        auto a = Tensor::parameter({}, {3.0});
        const auto b = mul(a, a);
        sum(add(b, b)).backward(); // 2a^2
        CHECK(a.grad()[0] == 12.0);
    }
}

TEST_CASE("gradient check for every layer kind")
{
    check_layer(LayerSpec::dense(5, 4), {5}, 3, Mode::train, 1);
    check_layer(LayerSpec::conv1d(2, 3, 3, 2, 1), {2, 9}, 2, Mode::train, 2);
    check_layer(LayerSpec::conv1d(2, 4, 1), {2, 5}, 2, Mode::train, 3);
    check_layer(LayerSpec::conv2d(2, 3, {3, 3}, {2, 1}, {1, 1}), {2, 6, 4}, 2, Mode::train, 4);
    check_layer(LayerSpec::transposed_conv1d(3, 2, 3, 2, 1, 1), {3, 4}, 2, Mode::train, 5);
    check_layer(LayerSpec::transposed_conv2d(3, 2, {3, 3}, {2, 2}, {1, 1}, {1, 1}), {3, 3, 2}, 2, Mode::train, 6);
    check_layer(LayerSpec::batch_norm(3), {3, 4}, 3, Mode::train, 7);
    check_layer(LayerSpec::batch_norm(3), {3, 4}, 3, Mode::eval, 8);
    check_layer(LayerSpec::batch_norm(4), {4}, 5, Mode::train, 9);
    check_layer(LayerSpec::relu(), {7}, 3, Mode::train, 10);
    check_layer(LayerSpec::exp(), {7}, 3, Mode::train, 11);
    check_layer(LayerSpec::reshape({3, 4}), {12}, 2, Mode::train, 12);
}

TEST_CASE("gradient check for elementwise ops")
{
    Rng rng(31);
    auto a = Tensor::parameter({2, 4}, randn(8, rng));
    auto b = Tensor::parameter({2, 4}, randn(8, rng));
    const auto r = randn(8, rng);
    const auto res = gradient_check({a, b}, [&] {
        const auto pos = add(square(b), Tensor::constant({2, 4}, std::vector<double>(8, 0.5)));
        const auto t = sub(mul(a, log(pos)), clamp(b, -0.4, 0.4));
        const auto s = slice_columns(t, 1, 3);
        return add(weighted_sum(t, r), mean(exp(s)));
    });
    INFO(res.first_failure);
    CHECK(res.ok());
}

TEST_CASE("network stack gradient check")
{
    Rng rng(40);
    Sequential net({LayerSpec::conv1d(2, 4, 3, 2, 1), LayerSpec::batch_norm(4), LayerSpec::relu(),
                    LayerSpec::reshape({16}), LayerSpec::dense(16, 6)},
                   {2, 8});
    net.initialize(rng);
    auto x = Tensor::constant({4, 2, 8}, randn(64, rng));
    const auto r = randn(24, rng);
    const auto res = gradient_check(net.parameters(), [&] { return weighted_sum(net.forward(x, Mode::train), r); });
    INFO(res.first_failure);
    CHECK(res.ok());
}

TEST_CASE("shape mismatch is reported")
{
    CHECK_THROWS_AS(Sequential({LayerSpec::dense(4, 2), LayerSpec::dense(3, 1)}, {4}), std::invalid_argument);
    Sequential net({LayerSpec::dense(4, 2)}, {4});
    CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 5}), Mode::eval), std::invalid_argument);
    CHECK_THROWS_AS(Sequential({LayerSpec::conv1d(2, 2, 7, 1, 0)}, {2, 4}), std::invalid_argument);
}

TEST_CASE("batch norm in eval mode is a fixed affine map")
{
    Rng rng(9);
    Sequential net({LayerSpec::batch_norm(2)}, {2, 3});
    net.initialize(rng);
    // populate running statistics
    for (int i = 0; i < 5; ++i)
        net.forward(Tensor::constant({4, 2, 3}, randn(24, rng)), Mode::train);
    const auto sample = randn(6, rng);
    std::vector<double> batch_a = sample, batch_b = sample;
    const auto other_a = randn(6, rng);
    const auto other_b = randn(18, rng);
    batch_a.insert(batch_a.end(), other_a.begin(), other_a.end());
    batch_b.insert(batch_b.end(), other_b.begin(), other_b.end());
    const auto ya = net.forward(Tensor::constant({2, 2, 3}, batch_a), Mode::eval);
    const auto yb = net.forward(Tensor::constant({4, 2, 3}, batch_b), Mode::eval);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(ya.value()[i] == yb.value()[i]);

    // affine: f(x + t d) - f(x) is linear in t
    const auto x0 = Tensor::constant({1, 2, 3}, sample);
    auto d = randn(6, rng);
    std::vector<double> x1 = sample, x2 = sample;
    for (std::size_t i = 0; i < 6; ++i) {
        x1[i] += d[i];
        x2[i] += 2.0 * d[i];
    }
    const auto f0 = net.forward(x0, Mode::eval);
    const auto f1 = net.forward(Tensor::constant({1, 2, 3}, x1), Mode::eval);
    const auto f2 = net.forward(Tensor::constant({1, 2, 3}, x2), Mode::eval);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(f2.value()[i] - f0.value()[i] == doctest::Approx(2.0 * (f1.value()[i] - f0.value()[i])));
}

TEST_CASE("adam")
{
    SUBCASE("zero gradient leaves parameters unchanged")
    {
        auto p = Tensor::parameter({3}, {1.0, -2.0, 0.5});
        std::vector<Tensor> ps{p};
        AdamState s;
        for (int i = 0; i < 3; ++i)
            adam_step(s, ps);
        CHECK(p.value()[0] == 1.0);
        CHECK(p.value()[1] == -2.0);
        CHECK(p.value()[2] == 0.5);
        CHECK(s.step == 3);
    }

    SUBCASE("first step moves by the learning rate")
    {
        auto p = Tensor::parameter({}, {0.0});
        p.mutable_grad()[0] = 1.0;
        std::vector<Tensor> ps{p};
        AdamState s;
        adam_step(s, ps);
        CHECK(p.value()[0] == doctest::Approx(-7e-4).epsilon(1e-6));
    }

    SUBCASE("quadratic bowl converges")
    {
        auto p = Tensor::parameter({}, {1.0});
        std::vector<Tensor> ps{p};
        AdamState s;
        s.lr = 0.05;
        for (int i = 0; i < 500; ++i) {
            p.zero_grad();
            square(p).backward();
            adam_step(s, ps);
        }
        CHECK(std::abs(p.value()[0]) < 1e-2);
    }

    SUBCASE("non-finite gradient aborts without touching parameters")
    {
        auto p = Tensor::parameter({2}, {1.0, 2.0});
        p.mutable_grad()[1] = std::nan("");
        std::vector<Tensor> ps{p};
        AdamState s;
        CHECK_THROWS_AS(adam_step(s, ps), NonFiniteGradient);
        CHECK(p.value()[0] == 1.0);
        CHECK(s.step == 0);
    }
}

TEST_CASE("forward and backward are deterministic")
{
    auto run = [] {
        Rng rng(77);
        Sequential net({LayerSpec::conv1d(2, 3, 3, 2, 1), LayerSpec::batch_norm(3), LayerSpec::relu(),
                        LayerSpec::transposed_conv1d(3, 2, 3, 2, 1, 1)},
                       {2, 8});
        net.initialize(rng);
        auto x = Tensor::constant({3, 2, 8}, randn(48, rng));
        auto loss = sum(square(net.forward(x, Mode::train)));
        loss.backward();
        std::vector<double> out{loss.item()};
        for (const auto& p : net.parameters())
            out.insert(out.end(), p.grad().begin(), p.grad().end());
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("network save and load round trip")
{
    Rng rng(5);
    Sequential net({LayerSpec::conv1d(2, 3, 3, 2, 1), LayerSpec::batch_norm(3), LayerSpec::relu(),
                    LayerSpec::reshape({12}), LayerSpec::dense(12, 2)},
                   {2, 8});
    net.initialize(rng);
    net.forward(Tensor::constant({4, 2, 8}, randn(64, rng)), Mode::train);
    std::stringstream ss;
    io::Writer w(ss);
    net.save(w);
    io::Reader r(ss);
    auto back = Sequential::load(r);
    CHECK(back.specs() == net.specs());
    const auto x = Tensor::constant({2, 2, 8}, randn(32, rng));
    const auto a = net.forward(x, Mode::eval);
    const auto b = back.forward(x, Mode::eval);
    CHECK(std::equal(a.value().begin(), a.value().end(), b.value().begin()));
}
