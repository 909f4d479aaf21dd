#pragma once

#include "vaecme/channel/observation.hpp"
#include "vaecme/core/fft.hpp"
#include "vaecme/nn/layers.hpp"

#include <string>
#include <vector>

namespace vaecme::vae {

enum class Variant { genie, noisy, real };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct VaeConfig {
    Variant variant = Variant::noisy;
    std::size_t latent_dim = 16;
    std::size_t base_channels = 8;
    std::size_t kernel = 7;      // SIMO; MIMO uses kernel_2d
    std::size_t kernel_2d = 3;
    std::size_t blocks = 3;
    double growth = 1.75;
    double free_bits = 0.1;      // nats per latent dimension, 0 disables
    double snr_min_db = -19.0;
    double snr_max_db = 39.0;
    double val_snr_db = 10.0;    // validation NMSE operating point
    std::size_t batch_size = 128;
    double learning_rate = 7e-4;
    std::size_t patience = 100;
    std::size_t max_epochs = 1000;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;
    double clamp = 20.0;         // raw log-variance outputs are clamped to [-clamp, clamp]
    std::uint64_t seed = 1;

    void validate() const;
    bool operator==(const VaeConfig&) const = default;
};

/// Channels of conv block i: round(base * growth^(i+1)), ties up.
std::size_t block_channels(const VaeConfig& c, std::size_t i);

/// Approximate posterior of one sample.
struct LatentGaussian {
    std::vector<double> mu;
    std::vector<double> var;
};

/// Decoder output for one sample: mean in the antenna domain, covariance
/// spectrum in the angular domain (C = Q^H diag(c) Q).
struct CondGaussianMoments {
    ComplexTensor mu;
    std::vector<double> c;
};

/// Complex vectors stacked as [B, 2N] real tensors (real parts then imaginary).
nn::Tensor stack_complex(const std::vector<ComplexTensor>& xs);
ComplexTensor unstack_complex(std::span<const double> row, std::size_t n);

class VaeModel {
public:
    VaeModel() = default;
    VaeModel(VaeConfig cfg, KronDims dims);

    [[nodiscard]] const VaeConfig& config() const { return cfg_; }
    [[nodiscard]] VaeConfig& mutable_config() { return cfg_; }
    [[nodiscard]] KronDims dims() const { return dims_; }
    [[nodiscard]] std::size_t n() const { return dims_.size(); }
    [[nodiscard]] UnitaryTransform transform() const { return UnitaryTransform::for_dims(dims_); }
    nn::Sequential& encoder() { return encoder_; }
    nn::Sequential& decoder() { return decoder_; }
    [[nodiscard]] const nn::Sequential& encoder() const { return encoder_; }
    [[nodiscard]] const nn::Sequential& decoder() const { return decoder_; }

    void initialize(Rng& rng);
    [[nodiscard]] std::vector<nn::Tensor> parameters() const;

    /// Angular-domain encoder input: Q h for genie, Q A^H y otherwise.
    [[nodiscard]] ComplexTensor encoder_input(const ComplexTensor* h, const ComplexTensor* y,
                                              const channel::ObservationModel& model) const;
    /// Per-sample network input tensor [B, 2, N] (SIMO) or [B, 2, N_tx, N_rx].
    [[nodiscard]] nn::Tensor network_input(const std::vector<ComplexTensor>& angular) const;

    struct Encoded {
        nn::Tensor mu;     // [B, L]
        nn::Tensor logvar; // [B, L], clamped
    };
    struct Decoded {
        nn::Tensor mean; // [B, 2N] antenna-domain mean, stacked
        nn::Tensor log_c; // [B, N], clamped
    };
    Encoded encode(const nn::Tensor& input, nn::Mode mode);
    /// z = mu + exp(logvar / 2) * eps, eps row-major [B * L].
    [[nodiscard]] nn::Tensor reparameterize(const Encoded& e, const std::vector<double>& eps) const;
    Decoded decode(const nn::Tensor& z, nn::Mode mode);

    // Inference helpers: evaluation mode, no graph.
    std::vector<LatentGaussian> posterior(const std::vector<ComplexTensor>& angular);
    std::vector<CondGaussianMoments> moments(const std::vector<std::vector<double>>& z);

private:
    VaeConfig cfg_;
    KronDims dims_;
    nn::Sequential encoder_;
    nn::Sequential decoder_;
};

} // namespace vaecme::vae
