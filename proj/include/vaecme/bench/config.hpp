#pragma once

#include "vaecme/channel/dataset.hpp"
#include "vaecme/vae/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace vaecme::bench {

/// Bad configuration or flags; the CLI maps it to the usage exit code.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One estimator in an evaluation: ls, genie_cov, global_cov, vae_<variant>
/// (MAP) or vae_<variant>_mc<K>.
struct Method {
    enum class Kind { ls, genie_cov, global_cov, vae };
    Kind kind = Kind::ls;
    vae::Variant variant = vae::Variant::noisy;
    std::size_t mc_samples = 0; // 0: MAP
    std::string name;

    static Method parse(const std::string& s);
    [[nodiscard]] bool is_vae() const { return kind == Kind::vae; }
    /// vae_<variant>; the checkpoint shared by MAP and Monte-Carlo methods.
    [[nodiscard]] std::string model_name() const;
};

enum class SweepAxis { antennas, train_size, latent_dim, mc_samples };
std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::filesystem::path out = "out";
    std::vector<std::string> methods{"ls", "genie_cov", "global_cov", "vae_genie", "vae_noisy", "vae_real"};
    std::vector<double> snr_grid{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
    bool desk_scale = false;

    channel::DatasetConfig data;
    vae::VaeConfig vae;                               // shared hyperparameters
    std::map<vae::Variant, std::map<std::string, std::string>> vae_overrides; // [vae.<variant>] sections

    SweepAxis sweep_axis = SweepAxis::mc_samples;
    std::vector<double> sweep_values{0, 1, 2, 4, 8, 16};
    std::string sweep_method = "vae_noisy";

    std::size_t lipschitz_pairs = 2000;
    double safety = 2.0;
    std::size_t is_samples = 256;
    std::size_t is_subset = 500;

    /// Applies the desk-scale protocol: 32-antenna SIMO, 20000/2000/2000 split.
    void apply_desk_scale();
    void validate() const;
    [[nodiscard]] std::vector<Method> parsed_methods() const;
    /// Dataset settings with the experiment seed.
    [[nodiscard]] channel::DatasetConfig dataset_config() const;
    /// VAE hyperparameters for one variant, seed and per-variant overrides applied.
    [[nodiscard]] vae::VaeConfig vae_config(vae::Variant v) const;
};

/// Reads an INI file; unknown sections or keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& ini_text);
/// Canonical INI text of the effective configuration.
std::string to_ini(const ExperimentConfig& c);
/// FNV-1a 64 of the canonical INI text.
std::uint64_t config_hash(const ExperimentConfig& c);
/// "# config_hash=<16 hex digits>".
std::string hash_header(const ExperimentConfig& c);

std::vector<double> parse_number_list(const std::string& s);
std::vector<std::string> parse_name_list(const std::string& s);

} // namespace vaecme::bench
