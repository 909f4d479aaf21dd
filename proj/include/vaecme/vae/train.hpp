#pragma once

#include "vaecme/channel/dataset.hpp"
#include "vaecme/nn/adam.hpp"
#include "vaecme/vae/losses.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace vaecme::vae {

struct TrainingHistory {
    std::vector<std::size_t> epoch;
    std::vector<double> elbo;          // -rec - kl
    std::vector<double> rec;           // training-epoch mean reconstruction NLL
    std::vector<double> kl;            // training-epoch mean raw KL
    std::vector<double> val_nmse;      // MAP estimator at the validation SNR
    std::vector<double> enc_var_trace; // validation mean of sum sigma^2
    std::vector<double> val_rec;       // early-stopping criterion

    [[nodiscard]] std::size_t size() const { return epoch.size(); }
    /// CSV with columns epoch, elbo, rec, kl, val_nmse, enc_var_trace, val_rec.
    [[nodiscard]] std::string csv() const;
    bool operator==(const TrainingHistory&) const = default;
};

struct Checkpoint {
    VaeModel model;
    nn::AdamState adam;
    TrainingHistory history;
    std::size_t best_epoch = 0;
    std::string init_scheme = "fan_in_uniform";
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
void write_checkpoint(const Checkpoint& c, std::ostream& os);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint read_checkpoint(std::istream& is);

struct TrainResult {
    Checkpoint best; // parameters of the best validation epoch, full history
    bool diverged = false;
    std::string message;
};

/// Fixed validation draws: noise at a uniform SNR per sample plus one latent
/// draw, so that the validation REC only changes with the parameters.
struct ValidationSet {
    std::vector<ComplexTensor> h;
    std::vector<ComplexTensor> y;        // uniform SNR in the training range
    std::vector<double> noise_var;
    std::vector<ComplexTensor> y_eval;   // at the validation SNR
    double eval_noise_var = 0.0;
    std::vector<double> eps;
};

ValidationSet make_validation_set(const VaeConfig& cfg, const channel::ChannelDataset& data);

struct EpochReport {
    std::size_t epoch;
    double rec, kl, val_rec, val_nmse, enc_var_trace;
    bool improved;
    double seconds;
    const VaeModel* model = nullptr; // parameters after this epoch
};

/// Encoder and decoder parameters (with batch-norm statistics) as a blob.
std::string snapshot_model(const VaeModel& m);
void restore_model(VaeModel& m, const std::string& blob);

/// Minibatch training with per-epoch noise redraws, early stopping on the
/// validation REC (strict improvement, `patience` epochs) and a hard cap of
/// max_epochs. Returns the best-validation parameters.
TrainResult train(const VaeConfig& cfg, const channel::ChannelDataset& data,
                  const std::function<void(const EpochReport&)>& on_epoch = {});

/// Validation metrics of a model (evaluation mode).
struct ValidationMetrics {
    double rec = 0.0;
    double nmse = 0.0;
    double enc_var_trace = 0.0;
};
ValidationMetrics validate(VaeModel& model, const ValidationSet& v);

} // namespace vaecme::vae
