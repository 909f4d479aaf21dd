#include "vaecme/vae/losses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vaecme::vae {

using nn::Node;
using nn::Tensor;

namespace {

const double kLogPi = std::log(std::numbers::pi);

void transform_rows(std::span<const double> in, std::span<double> out, std::size_t rows, std::size_t n,
                    const UnitaryTransform& q, Direction dir)
{
    std::vector<cplx> buf(n);
    for (std::size_t b = 0; b < rows; ++b) {
        const double* src = in.data() + b * 2 * n;
        for (std::size_t k = 0; k < n; ++k)
            buf[k] = {src[k], src[n + k]};
        q.apply_inplace(buf, dir);
        double* dst = out.data() + b * 2 * n;
        for (std::size_t k = 0; k < n; ++k) {
            dst[k] = buf[k].real();
            dst[n + k] = buf[k].imag();
        }
    }
}

Direction opposite(Direction d) { return d == Direction::forward ? Direction::adjoint : Direction::forward; }

} // namespace

Tensor unitary_transform(const Tensor& x, const UnitaryTransform& q, Direction dir)
{
    const auto& s = x.shape();
    const auto n = q.size();
    if (s.size() != 2 || s[1] != 2 * n)
        throw std::invalid_argument("unitary_transform: expected [B, " + std::to_string(2 * n) + "], got " +
                                    nn::shape_string(s));
    const auto rows = s[0];
    std::vector<double> out(x.size());
    transform_rows(x.value(), out, rows, n, q, dir);
    return Tensor::from_op(s, std::move(out), {x}, [q, dir, rows, n](Node& nd) {
        // real-linear map with orthogonal real form: its transpose is the inverse transform
        std::vector<double> g(nd.grad.size());
        transform_rows(nd.grad, g, rows, n, q, opposite(dir));
        auto& pg = nn::parent_grad(nd, 0);
        for (std::size_t i = 0; i < g.size(); ++i)
            pg[i] += g[i];
    });
}

Tensor gaussian_rec(const Tensor& target, const Tensor& mean, const Tensor& log_c, const std::vector<double>& noise_var)
{
    const auto& ms = mean.shape();
    if (ms.size() != 2 || target.shape() != ms || log_c.shape().size() != 2 || log_c.shape()[0] != ms[0] ||
        2 * log_c.shape()[1] != ms[1] || noise_var.size() != ms[0])
        throw std::invalid_argument("gaussian_rec: inconsistent shapes");
    const auto batch = ms[0], n = log_c.shape()[1];
    const auto t = target.value();
    const auto m = mean.value();
    const auto s = log_c.value();
    double acc = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        if (!(noise_var[b] >= 0.0))
            throw std::invalid_argument("gaussian_rec: negative noise variance");
        for (std::size_t k = 0; k < n; ++k) {
            const double re = t[b * 2 * n + k] - m[b * 2 * n + k];
            const double im = t[b * 2 * n + n + k] - m[b * 2 * n + n + k];
            const double v = std::exp(s[b * n + k]) + noise_var[b];
            acc += (re * re + im * im) / v + std::log(v);
        }
    }
    const double inv_b = 1.0 / static_cast<double>(batch);
    const double value = static_cast<double>(n) * kLogPi + acc * inv_b;
    return Tensor::from_op({}, {value}, {target, mean, log_c}, [=](Node& nd) {
        const double g = nd.grad[0] * inv_b;
        const auto& tv = nd.parents[0]->value;
        const auto& mv = nd.parents[1]->value;
        const auto& sv = nd.parents[2]->value;
        std::vector<double>* gt = nd.parents[0]->requires_grad ? &nn::parent_grad(nd, 0) : nullptr;
        std::vector<double>* gm = nd.parents[1]->requires_grad ? &nn::parent_grad(nd, 1) : nullptr;
        std::vector<double>* gs = nd.parents[2]->requires_grad ? &nn::parent_grad(nd, 2) : nullptr;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t k = 0; k < n; ++k) {
                const auto ir = b * 2 * n + k, ii = ir + n;
                const double re = tv[ir] - mv[ir];
                const double im = tv[ii] - mv[ii];
                const double c = std::exp(sv[b * n + k]);
                const double v = c + noise_var[b];
                if (gm) {
                    (*gm)[ir] -= g * 2.0 * re / v;
                    (*gm)[ii] -= g * 2.0 * im / v;
                }
                if (gt) {
                    (*gt)[ir] += g * 2.0 * re / v;
                    (*gt)[ii] += g * 2.0 * im / v;
                }
                if (gs)
                    (*gs)[b * n + k] += g * c * (1.0 / v - (re * re + im * im) / (v * v));
            }
    });
}

Tensor kl_free_bits(const Tensor& mu, const Tensor& logvar, double floor)
{
    if (mu.shape() != logvar.shape() || mu.shape().size() != 2)
        throw std::invalid_argument("kl_free_bits: mu and logvar must share a [B, L] shape");
    const auto batch = mu.shape()[0], l = mu.shape()[1];
    const auto m = mu.value();
    const auto lv = logvar.value();
    const double inv_b = 1.0 / static_cast<double>(batch);
    std::vector<double> per_dim(l, 0.0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t d = 0; d < l; ++d) {
            const auto i = b * l + d;
            per_dim[d] += 0.5 * (-lv[i] + m[i] * m[i] + std::exp(lv[i]) - 1.0) * inv_b;
        }
    std::vector<bool> active(l);
    double total = 0.0;
    for (std::size_t d = 0; d < l; ++d) {
        active[d] = per_dim[d] >= floor;
        total += active[d] ? per_dim[d] : floor;
    }
    return Tensor::from_op({}, {total}, {mu, logvar}, [=](Node& nd) {
        const double g = nd.grad[0] * inv_b;
        const auto& mv = nd.parents[0]->value;
        const auto& lvv = nd.parents[1]->value;
        std::vector<double>* gm = nd.parents[0]->requires_grad ? &nn::parent_grad(nd, 0) : nullptr;
        std::vector<double>* gl = nd.parents[1]->requires_grad ? &nn::parent_grad(nd, 1) : nullptr;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t d = 0; d < l; ++d) {
                if (!active[d])
                    continue;
                const auto i = b * l + d;
                if (gm)
                    (*gm)[i] += g * mv[i];
                if (gl)
                    (*gl)[i] += g * 0.5 * (std::exp(lvv[i]) - 1.0);
            }
    });
}

double kl_closed_form(const LatentGaussian& q, double floor)
{
    require_same_size(q.mu.size(), q.var.size(), "posterior variance");
    double total = 0.0;
    for (std::size_t d = 0; d < q.mu.size(); ++d) {
        if (!(q.var[d] > 0.0))
            throw std::invalid_argument("kl_closed_form: variance must be positive");
        const double kl = 0.5 * (-std::log(q.var[d]) + q.mu[d] * q.mu[d] + q.var[d] - 1.0);
        total += std::max(kl, floor);
    }
    return total;
}

double recon_nll_diag(const ComplexTensor& h_q, const CondGaussianMoments& m, const UnitaryTransform& q)
{
    const auto n = h_q.size();
    require_same_size(n, m.mu.size(), "decoder mean");
    require_same_size(n, m.c.size(), "decoder spectrum");
    const auto mq = q.apply(m.mu, Direction::forward);
    double acc = static_cast<double>(n) * kLogPi;
    for (std::size_t k = 0; k < n; ++k)
        acc += std::norm(h_q[k] - mq[k]) / m.c[k] + std::log(m.c[k]);
    return acc;
}

LossTerms variant_loss(VaeModel& model, const Batch& batch, const channel::ObservationModel& obs,
                       const std::vector<double>& eps, nn::Mode mode)
{
    const auto& cfg = model.config();
    const auto bsz = batch.size();
    const auto l = cfg.latent_dim;
    if (bsz == 0)
        throw std::invalid_argument("variant_loss: empty batch");
    if (eps.size() != bsz * l)
        throw std::invalid_argument("variant_loss: need one latent draw per batch element");
    const bool needs_obs = cfg.variant != Variant::genie;
    if (needs_obs && (batch.y.size() != bsz || batch.noise_var.size() != bsz))
        throw std::invalid_argument("variant_loss: " + to_string(cfg.variant) +
                                    " variant needs observations and noise variances");

    const auto q = model.transform();
    std::vector<ComplexTensor> enc_in, target;
    enc_in.reserve(bsz);
    target.reserve(bsz);
    std::vector<double> nv(bsz, 0.0);
    for (std::size_t b = 0; b < bsz; ++b) {
        const ComplexTensor* y = needs_obs ? &batch.y[b] : nullptr;
        enc_in.push_back(model.encoder_input(&batch.h[b], y, obs));
        if (cfg.variant == Variant::real) {
            target.push_back(enc_in.back());
            nv[b] = batch.noise_var[b];
        } else if (cfg.variant == Variant::genie) {
            target.push_back(enc_in.back());
        } else {
            target.push_back(q.apply(batch.h[b], Direction::forward));
        }
    }

    const auto enc = model.encode(model.network_input(enc_in), mode);
    const auto z = model.reparameterize(enc, eps);
    const auto dec = model.decode(z, mode);
    const auto mean_q = unitary_transform(dec.mean, q, Direction::forward);
    const auto rec = gaussian_rec(stack_complex(target), mean_q, dec.log_c, nv);
    const auto kl = kl_free_bits(enc.mu, enc.logvar, cfg.free_bits);

    LossTerms out;
    out.total = nn::add(rec, kl);
    out.rec = rec.item();
    // raw KL for reporting
    const auto mv = enc.mu.value();
    const auto lv = enc.logvar.value();
    double raw = 0.0;
    for (std::size_t i = 0; i < mv.size(); ++i)
        raw += 0.5 * (-lv[i] + mv[i] * mv[i] + std::exp(lv[i]) - 1.0);
    out.kl = raw / static_cast<double>(bsz);
    return out;
}

} // namespace vaecme::vae
