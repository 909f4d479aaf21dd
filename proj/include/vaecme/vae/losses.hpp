#pragma once

#include "vaecme/vae/model.hpp"

#include <vector>

namespace vaecme::vae {

/// Graph op: applies Q (or Q^H) row-wise to a stacked complex batch [B, 2N].
nn::Tensor unitary_transform(const nn::Tensor& x, const UnitaryTransform& q, Direction dir);

/// Graph op: batch mean of N log(pi) + sum_k |t_k - m_k|^2 / v_k + log v_k with
/// v = exp(log_c) + noise_var[b]. target and mean are stacked [B, 2N], log_c [B, N].
nn::Tensor gaussian_rec(const nn::Tensor& target, const nn::Tensor& mean, const nn::Tensor& log_c,
                        const std::vector<double>& noise_var);

/// Graph op: sum over latent dims of max(batch-mean KL_d, floor) where
/// KL_d = (-logvar + mu^2 + exp(logvar) - 1) / 2. Floored dimensions get no
/// gradient. floor = 0 gives the plain batch-mean KL.
nn::Tensor kl_free_bits(const nn::Tensor& mu, const nn::Tensor& logvar, double floor);

/// Closed-form KL(q || N(0, I)) of one posterior, optionally floored per dimension.
double kl_closed_form(const LatentGaussian& q, double floor = 0.0);

/// Reference (non-graph) reconstruction NLL including the N log(pi) constant:
/// N log pi + sum (|h_Q - Q mu|^2 / c + log c).
double recon_nll_diag(const ComplexTensor& h_q, const CondGaussianMoments& m, const UnitaryTransform& q);

/// One training batch. y and noise_var are required for the noisy and real
/// variants; genie uses h only.
struct Batch {
    std::vector<ComplexTensor> h;
    std::vector<ComplexTensor> y;
    std::vector<double> noise_var;
    [[nodiscard]] std::size_t size() const { return h.size(); }
};

struct LossTerms {
    nn::Tensor total;   // objective that is minimized (free bits applied)
    double rec = 0.0;   // batch-mean reconstruction NLL with constants
    double kl = 0.0;    // batch-mean raw KL
};

/// Single-sample ELBO loss of the model's variant. eps holds one standard
/// normal latent draw per batch element ([B * L], row-major).
LossTerms variant_loss(VaeModel& model, const Batch& batch, const channel::ObservationModel& obs,
                       const std::vector<double>& eps, nn::Mode mode);

} // namespace vaecme::vae
