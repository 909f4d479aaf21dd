#pragma once

#include "vaecme/channel/observation.hpp"
#include "vaecme/vae/model.hpp"

#include <vector>

namespace vaecme::est {

/// Conditional LMMSE t_theta(z, y) for decoder moments, given ls = A^H y.
ComplexTensor t_theta(const vae::CondGaussianMoments& m, const ComplexTensor& ls, double noise_var, KronDims dims);

/// Encoder inputs for a set of observations; genie models need `truth`.
std::vector<ComplexTensor> encoder_inputs(const vae::VaeModel& vae, const std::vector<ComplexTensor>& y,
                                          const std::vector<ComplexTensor>* truth,
                                          const channel::ObservationModel& model);

/// MAP-VAE: z = mu_phi(input), one decoder pass, conditional LMMSE.
std::vector<ComplexTensor> estimate_map(vae::VaeModel& vae, const std::vector<ComplexTensor>& y,
                                        const std::vector<ComplexTensor>* truth,
                                        const channel::ObservationModel& model, double noise_var);

/// Average of t_theta over K posterior draws z = mu + sigma_scale * sigma * eps.
/// sigma_scale = 0 collapses to the MAP estimate.
std::vector<ComplexTensor> estimate_mc(vae::VaeModel& vae, const std::vector<ComplexTensor>& y,
                                       const std::vector<ComplexTensor>* truth,
                                       const channel::ObservationModel& model, double noise_var, std::size_t k,
                                       Rng& rng, double sigma_scale = 1.0);

} // namespace vaecme::est
