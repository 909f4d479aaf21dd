#pragma once

#include "vaecme/analysis/analysis.hpp"
#include "vaecme/bench/config.hpp"
#include "vaecme/vae/train.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace vaecme::bench {

std::filesystem::path dataset_path(const ExperimentConfig& c);
std::filesystem::path checkpoint_path(const ExperimentConfig& c, vae::Variant v, const std::string& tag = {});
std::filesystem::path history_path(const ExperimentConfig& c, vae::Variant v, const std::string& tag = {});

/// "mean |h|^2/N train=... val=... test=..."
std::string normalization_audit(const channel::ChannelDataset& d);

/// Reuses out/dataset.bin when it was generated from the same settings.
channel::ChannelDataset load_or_generate(const ExperimentConfig& c, std::ostream& log);

/// Copy keeping only the first n training samples; validation and test unchanged.
channel::ChannelDataset subset_train(const channel::ChannelDataset& d, std::size_t n);

/// Trains one variant with per-epoch progress lines on `log`.
vae::TrainResult train_variant(const vae::VaeConfig& cfg, const channel::ChannelDataset& data, std::ostream& log);

/// Distinct VAE variants referenced by a method list, in first-use order.
std::vector<vae::Variant> vae_variants(const std::vector<Method>& methods);

using ModelSet = std::map<vae::Variant, vae::VaeModel>;

struct EvalRow {
    std::string method;
    double snr_db = 0.0;
    double nmse = 0.0;
    std::size_t n_test = 0;
    double seconds = 0.0;
};

struct EvalOptions {
    std::uint64_t seed = 1;
    std::vector<double> snr_db;
    channel::Split split = channel::Split::test;
};

/// NMSE of every method at every SNR, rows ordered by method list then grid.
/// All methods see the same observations: the noise stream depends only on
/// (seed, SNR value). Samples are processed in fixed blocks so the result
/// does not depend on the worker count.
std::vector<EvalRow> evaluate_methods(const channel::ChannelDataset& data, const std::vector<Method>& methods,
                                      ModelSet& models, const EvalOptions& opt);

/// method,snr_db,nmse,n_test,seconds
std::string eval_csv(const std::vector<EvalRow>& rows, const std::string& header);

/// Exact LMMSE for toy data (the CME), otherwise empty.
analysis::ReferenceCme reference_cme(const channel::ChannelDataset& data);

std::vector<ComplexTensor> split_channels(const channel::ChannelDataset& d, channel::Split s);

} // namespace vaecme::bench
