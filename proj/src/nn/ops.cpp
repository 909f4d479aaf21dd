#include "vaecme/nn/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace vaecme::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
}

template <class F, class D>
Tensor unary(const Tensor& a, F f, D dfdx)
{
    const auto av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i)
        out[i] = f(av[i]);
    return Tensor::from_op(a.shape(), std::move(out), {a}, [dfdx](Node& n) {
        const auto& x = n.parents[0]->value;
        auto& g = parent_grad(n, 0);
        for (std::size_t i = 0; i < x.size(); ++i)
            g[i] += n.grad[i] * dfdx(x[i], n.value[i]);
    });
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    const auto av = a.value(), bv = b.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i)
        out[i] = av[i] + bv[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](Node& n) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (!n.parents[p]->requires_grad)
                continue;
            auto& g = parent_grad(n, p);
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += n.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "sub");
    const auto av = a.value(), bv = b.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i)
        out[i] = av[i] - bv[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](Node& n) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (!n.parents[p]->requires_grad)
                continue;
            const double s = p == 0 ? 1.0 : -1.0;
            auto& g = parent_grad(n, p);
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += s * n.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "mul");
    const auto av = a.value(), bv = b.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i)
        out[i] = av[i] * bv[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](Node& n) {
        const auto& x = n.parents[0]->value;
        const auto& y = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            auto& g = parent_grad(n, 0);
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += n.grad[i] * y[i];
        }
        if (n.parents[1]->requires_grad) {
            auto& g = parent_grad(n, 1);
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += n.grad[i] * x[i];
        }
    });
}

Tensor scale(const Tensor& a, double s)
{
    return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor square(const Tensor& a)
{
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor exp(const Tensor& a)
{
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a)
{
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor relu(const Tensor& a)
{
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi)
{
    return unary(
        a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a)
{
    double s = 0.0;
    for (double v : a.value())
        s += v;
    return Tensor::from_op({}, {s}, {a}, [](Node& n) {
        auto& g = parent_grad(n, 0);
        for (auto& v : g)
            v += n.grad[0];
    });
}

Tensor mean(const Tensor& a)
{
    const double inv = 1.0 / static_cast<double>(a.size());
    return scale(sum(a), inv);
}

Tensor reshape(const Tensor& a, Shape shape)
{
    if (shape_size(shape) != a.size())
        throw std::invalid_argument("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
    std::vector<double> out(a.value().begin(), a.value().end());
    return Tensor::from_op(std::move(shape), std::move(out), {a}, [](Node& n) {
        auto& g = parent_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += n.grad[i];
    });
}

Tensor slice_columns(const Tensor& a, std::size_t begin, std::size_t end)
{
    const auto& s = a.shape();
    if (s.size() != 2 || begin >= end || end > s[1])
        throw std::invalid_argument("slice_columns: invalid range for shape " + shape_string(s));
    const auto rows = s[0], cols = s[1], width = end - begin;
    const auto av = a.value();
    std::vector<double> out(rows * width);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < width; ++c)
            out[r * width + c] = av[r * cols + begin + c];
    return Tensor::from_op({rows, width}, std::move(out), {a}, [=](Node& n) {
        auto& g = parent_grad(n, 0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < width; ++c)
                g[r * cols + begin + c] += n.grad[r * width + c];
    });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias)
{
    const auto& xs = x.shape();
    const auto& ws = weight.shape();
    if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1] || bias.shape() != Shape{ws[0]})
        throw std::invalid_argument("linear: incompatible shapes x" + shape_string(xs) + " W" + shape_string(ws) +
                                    " b" + shape_string(bias.shape()));
    const auto batch = static_cast<Eigen::Index>(xs[0]);
    const auto in = static_cast<Eigen::Index>(xs[1]);
    const auto outf = static_cast<Eigen::Index>(ws[0]);
    std::vector<double> out(xs[0] * ws[0]);
    ConstRowMap xm(x.value().data(), batch, in);
    ConstRowMap wm(weight.value().data(), outf, in);
    RowMap ym(out.data(), batch, outf);
    ym.noalias() = xm * wm.transpose();
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.value().data(), outf);

    return Tensor::from_op({xs[0], ws[0]}, std::move(out), {x, weight, bias}, [=](Node& n) {
        ConstRowMap dy(n.grad.data(), batch, outf);
        if (n.parents[0]->requires_grad) {
            RowMap dx(parent_grad(n, 0).data(), batch, in);
            dx.noalias() += dy * ConstRowMap(n.parents[1]->value.data(), outf, in);
        }
        if (n.parents[1]->requires_grad) {
            RowMap dw(parent_grad(n, 1).data(), outf, in);
            dw.noalias() += dy.transpose() * ConstRowMap(n.parents[0]->value.data(), batch, in);
        }
        if (n.parents[2]->requires_grad) {
            Eigen::Map<Eigen::RowVectorXd> db(parent_grad(n, 2).data(), outf);
            db += dy.colwise().sum();
        }
    });
}

std::array<std::size_t, 2> Conv2dGeometry::conv_out(std::size_t h, std::size_t w) const
{
    std::array<std::size_t, 2> out{};
    const std::array<std::size_t, 2> in{h, w};
    for (int d = 0; d < 2; ++d) {
        const auto padded = in[d] + 2 * padding[d];
        if (stride[d] == 0 || padded < kernel[d])
            throw std::invalid_argument("conv2d: kernel larger than padded input");
        out[d] = (padded - kernel[d]) / stride[d] + 1;
    }
    return out;
}

std::array<std::size_t, 2> Conv2dGeometry::transposed_out(std::size_t h, std::size_t w) const
{
    std::array<std::size_t, 2> out{};
    const std::array<std::size_t, 2> in{h, w};
    for (int d = 0; d < 2; ++d) {
        const auto full = (in[d] - 1) * stride[d] + kernel[d] + output_padding[d];
        if (in[d] == 0 || full <= 2 * padding[d] || output_padding[d] >= std::max<std::size_t>(stride[d], 1))
            throw std::invalid_argument("conv_transpose2d: invalid geometry");
        out[d] = full - 2 * padding[d];
    }
    return out;
}

namespace {

struct Grid {
    std::size_t batch, channels, ih, iw, oh, ow;
};

// col[(c*kh + i)*kw + j][b*P + y*ow + x] = img[b, c, y*sh - ph + i, x*sw - pw + j]
void im2col(const double* img, double* col, const Grid& gr, const Conv2dGeometry& g)
{
    const auto p = gr.oh * gr.ow;
    const auto cols = gr.batch * p;
    for (std::size_t c = 0; c < gr.channels; ++c)
        for (std::size_t i = 0; i < g.kernel[0]; ++i)
            for (std::size_t j = 0; j < g.kernel[1]; ++j) {
                double* row = col + ((c * g.kernel[0] + i) * g.kernel[1] + j) * cols;
                for (std::size_t b = 0; b < gr.batch; ++b) {
                    const double* src = img + (b * gr.channels + c) * gr.ih * gr.iw;
                    double* dst = row + b * p;
                    for (std::size_t y = 0; y < gr.oh; ++y) {
                        const auto sy = static_cast<std::ptrdiff_t>(y * g.stride[0] + i) -
                                        static_cast<std::ptrdiff_t>(g.padding[0]);
                        for (std::size_t x = 0; x < gr.ow; ++x) {
                            const auto sx = static_cast<std::ptrdiff_t>(x * g.stride[1] + j) -
                                            static_cast<std::ptrdiff_t>(g.padding[1]);
                            const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(gr.ih) &&
                                                sx < static_cast<std::ptrdiff_t>(gr.iw);
                            dst[y * gr.ow + x] =
                                inside ? src[static_cast<std::size_t>(sy) * gr.iw + static_cast<std::size_t>(sx)] : 0.0;
                        }
                    }
                }
            }
}

// Adjoint of im2col: accumulates col entries back into img.
void col2im(const double* col, double* img, const Grid& gr, const Conv2dGeometry& g)
{
    const auto p = gr.oh * gr.ow;
    const auto cols = gr.batch * p;
    for (std::size_t c = 0; c < gr.channels; ++c)
        for (std::size_t i = 0; i < g.kernel[0]; ++i)
            for (std::size_t j = 0; j < g.kernel[1]; ++j) {
                const double* row = col + ((c * g.kernel[0] + i) * g.kernel[1] + j) * cols;
                for (std::size_t b = 0; b < gr.batch; ++b) {
                    double* dst = img + (b * gr.channels + c) * gr.ih * gr.iw;
                    const double* src = row + b * p;
                    for (std::size_t y = 0; y < gr.oh; ++y) {
                        const auto sy = static_cast<std::ptrdiff_t>(y * g.stride[0] + i) -
                                        static_cast<std::ptrdiff_t>(g.padding[0]);
                        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(gr.ih))
                            continue;
                        for (std::size_t x = 0; x < gr.ow; ++x) {
                            const auto sx = static_cast<std::ptrdiff_t>(x * g.stride[1] + j) -
                                            static_cast<std::ptrdiff_t>(g.padding[1]);
                            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(gr.iw))
                                continue;
                            dst[static_cast<std::size_t>(sy) * gr.iw + static_cast<std::size_t>(sx)] +=
                                src[y * gr.ow + x];
                        }
                    }
                }
            }
}

// [B, C, P] <-> [C, B*P]
void batch_to_channel_major(const double* src, double* dst, std::size_t b, std::size_t c, std::size_t p)
{
    for (std::size_t ib = 0; ib < b; ++ib)
        for (std::size_t ic = 0; ic < c; ++ic)
            std::copy_n(src + (ib * c + ic) * p, p, dst + ic * b * p + ib * p);
}

void channel_major_to_batch(const double* src, double* dst, std::size_t b, std::size_t c, std::size_t p)
{
    for (std::size_t ib = 0; ib < b; ++ib)
        for (std::size_t ic = 0; ic < c; ++ic)
            std::copy_n(src + ic * b * p + ib * p, p, dst + (ib * c + ic) * p);
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dGeometry& g)
{
    const auto& xs = x.shape();
    const auto& ws = weight.shape();
    if (xs.size() != 4 || ws.size() != 4 || ws[1] != xs[1] || ws[2] != g.kernel[0] || ws[3] != g.kernel[1] ||
        bias.shape() != Shape{ws[0]})
        throw std::invalid_argument("conv2d: incompatible shapes x" + shape_string(xs) + " W" + shape_string(ws));
    const auto [oh, ow] = g.conv_out(xs[2], xs[3]);
    const Grid gr{xs[0], xs[1], xs[2], xs[3], oh, ow};
    const auto cout = ws[0];
    const auto k = xs[1] * g.kernel[0] * g.kernel[1];
    const auto p = oh * ow;
    const auto bp = xs[0] * p;

    auto col = std::make_shared<std::vector<double>>(k * bp);
    im2col(x.value().data(), col->data(), gr, g);
    std::vector<double> prod(cout * bp);
    RowMap(prod.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(bp)).noalias() =
        ConstRowMap(weight.value().data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(k)) *
        ConstRowMap(col->data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(bp));
    std::vector<double> out(xs[0] * cout * p);
    channel_major_to_batch(prod.data(), out.data(), xs[0], cout, p);
    const auto bv = bias.value();
    for (std::size_t b = 0; b < xs[0]; ++b)
        for (std::size_t c = 0; c < cout; ++c)
            for (std::size_t i = 0; i < p; ++i)
                out[(b * cout + c) * p + i] += bv[c];

    return Tensor::from_op({xs[0], cout, oh, ow}, std::move(out), {x, weight, bias}, [=](Node& n) {
        std::vector<double> dy(cout * bp);
        batch_to_channel_major(n.grad.data(), dy.data(), gr.batch, cout, p);
        ConstRowMap dym(dy.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(bp));
        if (n.parents[0]->requires_grad) {
            std::vector<double> dcol(k * bp);
            RowMap(dcol.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(bp)).noalias() =
                ConstRowMap(n.parents[1]->value.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(k))
                    .transpose() *
                dym;
            col2im(dcol.data(), parent_grad(n, 0).data(), gr, g);
        }
        if (n.parents[1]->requires_grad) {
            RowMap(parent_grad(n, 1).data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(k))
                .noalias() += dym * ConstRowMap(col->data(), static_cast<Eigen::Index>(k),
                                                 static_cast<Eigen::Index>(bp))
                                        .transpose();
        }
        if (n.parents[2]->requires_grad) {
            auto& db = parent_grad(n, 2);
            for (std::size_t c = 0; c < cout; ++c)
                db[c] += dym.row(static_cast<Eigen::Index>(c)).sum();
        }
    });
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dGeometry& g)
{
    const auto& xs = x.shape();
    const auto& ws = weight.shape();
    if (xs.size() != 4 || ws.size() != 4 || ws[0] != xs[1] || ws[2] != g.kernel[0] || ws[3] != g.kernel[1] ||
        bias.shape() != Shape{ws[1]})
        throw std::invalid_argument("conv_transpose2d: incompatible shapes x" + shape_string(xs) + " W" +
                                    shape_string(ws));
    const auto [oh, ow] = g.transposed_out(xs[2], xs[3]);
    const auto batch = xs[0], cin = xs[1], cout = ws[1];
    const auto p = xs[2] * xs[3];
    const auto bp = batch * p;
    const auto k = cout * g.kernel[0] * g.kernel[1];
    // The output image plays the role of the convolution input.
    const Grid gr{batch, cout, oh, ow, xs[2], xs[3]};
    {
        const auto check = g.conv_out(oh, ow);
        if (check[0] != xs[2] || check[1] != xs[3])
            throw std::invalid_argument("conv_transpose2d: geometry is not invertible");
    }

    auto xm = std::make_shared<std::vector<double>>(cin * bp);
    batch_to_channel_major(x.value().data(), xm->data(), batch, cin, p);
    std::vector<double> cols(k * bp);
    RowMap(cols.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(bp)).noalias() =
        ConstRowMap(weight.value().data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(k)).transpose() *
        ConstRowMap(xm->data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(bp));
    std::vector<double> out(batch * cout * oh * ow, 0.0);
    col2im(cols.data(), out.data(), gr, g);
    const auto bv = bias.value();
    const auto op = oh * ow;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < cout; ++c)
            for (std::size_t i = 0; i < op; ++i)
                out[(b * cout + c) * op + i] += bv[c];

    return Tensor::from_op({batch, cout, oh, ow}, std::move(out), {x, weight, bias}, [=](Node& n) {
        std::vector<double> dcols(k * bp);
        im2col(n.grad.data(), dcols.data(), gr, g);
        ConstRowMap dc(dcols.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(bp));
        if (n.parents[0]->requires_grad) {
            std::vector<double> dxm(cin * bp);
            RowMap(dxm.data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(bp)).noalias() =
                ConstRowMap(n.parents[1]->value.data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(k)) *
                dc;
            std::vector<double> dx(batch * cin * p);
            channel_major_to_batch(dxm.data(), dx.data(), batch, cin, p);
            auto& g0 = parent_grad(n, 0);
            for (std::size_t i = 0; i < dx.size(); ++i)
                g0[i] += dx[i];
        }
        if (n.parents[1]->requires_grad) {
            RowMap(parent_grad(n, 1).data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(k))
                .noalias() +=
                ConstRowMap(xm->data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(bp)) * dc.transpose();
        }
        if (n.parents[2]->requires_grad) {
            auto& db = parent_grad(n, 2);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t c = 0; c < cout; ++c)
                    for (std::size_t i = 0; i < op; ++i)
                        db[c] += n.grad[(b * cout + c) * op + i];
        }
    });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, bool training)
{
    const auto& xs = x.shape();
    if (xs.size() < 2 || gamma.shape() != Shape{xs[1]} || beta.shape() != Shape{xs[1]} ||
        state.running_mean.size() != xs[1] || state.running_var.size() != xs[1])
        throw std::invalid_argument("batch_norm: incompatible shapes x" + shape_string(xs));
    const auto batch = xs[0], ch = xs[1];
    const auto spatial = x.size() / (batch * ch);
    const auto count = batch * spatial;
    if (training && count < 2)
        throw std::invalid_argument("batch_norm: training mode needs more than one value per channel");
    const auto xv = x.value();
    const auto gv = gamma.value();
    const auto bv = beta.value();

    auto xhat = std::make_shared<std::vector<double>>(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(ch);
    std::vector<double> out(x.size());
    for (std::size_t c = 0; c < ch; ++c) {
        double mu = 0.0, var = 0.0;
        if (training) {
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t s = 0; s < spatial; ++s)
                    mu += xv[(b * ch + c) * spatial + s];
            mu /= static_cast<double>(count);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t s = 0; s < spatial; ++s) {
                    const double d = xv[(b * ch + c) * spatial + s] - mu;
                    var += d * d;
                }
            var /= static_cast<double>(count);
            const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
            state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mu;
            state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
        } else {
            mu = state.running_mean[c];
            var = state.running_var[c];
        }
        const double is = 1.0 / std::sqrt(var + state.eps);
        (*inv_std)[c] = is;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t s = 0; s < spatial; ++s) {
                const auto i = (b * ch + c) * spatial + s;
                (*xhat)[i] = (xv[i] - mu) * is;
                out[i] = gv[c] * (*xhat)[i] + bv[c];
            }
    }

    return Tensor::from_op(xs, std::move(out), {x, gamma, beta}, [=](Node& n) {
        const auto& gam = n.parents[1]->value;
        std::vector<double> sum_dy(ch, 0.0), sum_dy_xhat(ch, 0.0);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < ch; ++c)
                for (std::size_t s = 0; s < spatial; ++s) {
                    const auto i = (b * ch + c) * spatial + s;
                    sum_dy[c] += n.grad[i];
                    sum_dy_xhat[c] += n.grad[i] * (*xhat)[i];
                }
        if (n.parents[0]->requires_grad) {
            auto& dx = parent_grad(n, 0);
            const double inv_count = 1.0 / static_cast<double>(count);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t c = 0; c < ch; ++c) {
                    const double k = gam[c] * (*inv_std)[c];
                    for (std::size_t s = 0; s < spatial; ++s) {
                        const auto i = (b * ch + c) * spatial + s;
                        if (training)
                            dx[i] += k * (n.grad[i] - inv_count * sum_dy[c] -
                                          (*xhat)[i] * inv_count * sum_dy_xhat[c]);
                        else
                            dx[i] += k * n.grad[i];
                    }
                }
        }
        if (n.parents[1]->requires_grad) {
            auto& dg = parent_grad(n, 1);
            for (std::size_t c = 0; c < ch; ++c)
                dg[c] += sum_dy_xhat[c];
        }
        if (n.parents[2]->requires_grad) {
            auto& db = parent_grad(n, 2);
            for (std::size_t c = 0; c < ch; ++c)
                db[c] += sum_dy[c];
        }
    });
}

} // namespace vaecme::nn
