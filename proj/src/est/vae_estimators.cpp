#include "vaecme/est/vae_estimators.hpp"

#include "vaecme/est/lmmse.hpp"

#include <cmath>
#include <stdexcept>

namespace vaecme::est {

ComplexTensor t_theta(const vae::CondGaussianMoments& m, const ComplexTensor& ls, double noise_var, KronDims dims)
{
    return circulant_lmmse(m.mu, CirculantSpec::block(m.c, dims), noise_var, ls);
}

std::vector<ComplexTensor> encoder_inputs(const vae::VaeModel& vae, const std::vector<ComplexTensor>& y,
                                          const std::vector<ComplexTensor>* truth,
                                          const channel::ObservationModel& model)
{
    const bool genie = vae.config().variant == vae::Variant::genie;
    if (genie && (!truth || truth->size() != y.size()))
        throw std::invalid_argument("genie estimator needs the ground-truth channels");
    std::vector<ComplexTensor> in;
    in.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        in.push_back(vae.encoder_input(genie ? &(*truth)[i] : nullptr, &y[i], model));
    return in;
}

std::vector<ComplexTensor> estimate_map(vae::VaeModel& vae, const std::vector<ComplexTensor>& y,
                                        const std::vector<ComplexTensor>* truth,
                                        const channel::ObservationModel& model, double noise_var)
{
    if (model.dims != vae.dims())
        throw std::invalid_argument("estimate_map: checkpoint dimensions do not match the observation model");
    const auto post = vae.posterior(encoder_inputs(vae, y, truth, model));
    std::vector<std::vector<double>> z;
    z.reserve(post.size());
    for (const auto& p : post)
        z.push_back(p.mu);
    const auto mom = vae.moments(z);
    std::vector<ComplexTensor> out;
    out.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out.push_back(t_theta(mom[i], model.apply_adjoint(y[i]), noise_var, vae.dims()));
    return out;
}

std::vector<ComplexTensor> estimate_mc(vae::VaeModel& vae, const std::vector<ComplexTensor>& y,
                                       const std::vector<ComplexTensor>* truth,
                                       const channel::ObservationModel& model, double noise_var, std::size_t k,
                                       Rng& rng, double sigma_scale)
{
    if (k < 1)
        throw std::invalid_argument("estimate_mc: K must be >= 1");
    if (model.dims != vae.dims())
        throw std::invalid_argument("estimate_mc: checkpoint dimensions do not match the observation model");
    const auto post = vae.posterior(encoder_inputs(vae, y, truth, model));
    const auto l = vae.config().latent_dim;
    std::vector<std::vector<double>> z;
    z.reserve(y.size() * k);
    for (const auto& p : post)
        for (std::size_t s = 0; s < k; ++s) {
            std::vector<double> v(l);
            for (std::size_t d = 0; d < l; ++d)
                v[d] = p.mu[d] + sigma_scale * std::sqrt(p.var[d]) * standard_normal(rng);
            z.push_back(std::move(v));
        }
    const auto mom = vae.moments(z);
    std::vector<ComplexTensor> out;
    out.reserve(y.size());
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto ls = model.apply_adjoint(y[i]);
        ComplexTensor acc = ComplexTensor::zeros(ls.size());
        for (std::size_t s = 0; s < k; ++s)
            acc = acc + t_theta(mom[i * k + s], ls, noise_var, vae.dims());
        out.push_back(cplx{inv_k, 0.0} * acc);
    }
    return out;
}

} // namespace vaecme::est
