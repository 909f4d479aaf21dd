#pragma once

#include "vaecme/channel/model.hpp"
#include "vaecme/core/circulant.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vaecme::channel {

enum class Scenario : std::uint32_t { threegpp = 0, toy = 1 };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

enum class Split { train, val, test };

struct DatasetConfig {
    Scenario scenario = Scenario::threegpp;
    KronDims dims{32, 1};
    std::size_t clusters = 1;
    double spread_deg = kDefaultSpreadDeg;
    double sector_half_width = kDefaultSectorHalfWidth;
    std::uint64_t seed = 1;
    std::size_t n_train = 180000;
    std::size_t n_val = 10000;
    std::size_t n_test = 10000;
    // toy spectrum c_k ~ exp(-|k|/decay) + floor, k wrapped to [-N/2, N/2)
    double toy_decay = 4.0;
    double toy_floor = 0.01;

    [[nodiscard]] std::size_t total() const { return n_train + n_val + n_test; }
    void validate() const;
    /// 20000/2000/2000 split.
    void apply_desk_scale();

    bool operator==(const DatasetConfig&) const = default;
};

/// Unit-mean toy spectrum; for MIMO the product of per-side profiles.
std::vector<double> toy_spectrum(const DatasetConfig& cfg);

struct ChannelDataset {
    DatasetConfig config;
    double scale = 1.0; // applied normalization factor on h
    std::vector<double> toy_spectrum; // normalized toy covariance spectrum (after scaling); toy only
    std::vector<cplx> channels; // T x N, sample-major
    std::vector<ClusterParams> deltas; // 3GPP only

    [[nodiscard]] std::size_t n() const { return config.dims.size(); }
    [[nodiscard]] std::size_t size() const { return n() ? channels.size() / n() : 0; }
    [[nodiscard]] std::pair<std::size_t, std::size_t> range(Split s) const;
    [[nodiscard]] ComplexTensor channel(std::size_t i) const;
    /// Ground-truth covariance of sample i including the normalization (3GPP).
    [[nodiscard]] KronCovariance covariance(std::size_t i) const;
    /// Toy covariance as a circulant spectrum.
    [[nodiscard]] CirculantSpec toy_covariance() const;
    /// Mean ||h||^2 / N over a split.
    [[nodiscard]] double mean_power(Split s) const;

    bool operator==(const ChannelDataset&) const = default;
};

inline constexpr std::uint32_t kDatasetVersion = 1;

/// Fresh cluster parameters and channel per sample from independent streams
/// of cfg.seed; then scales all samples so the train split has mean power N.
ChannelDataset generate_dataset(const DatasetConfig& cfg);

void save_dataset(const ChannelDataset& d, const std::filesystem::path& path);
/// Throws io::FormatError on bad magic, version mismatch or truncation.
ChannelDataset load_dataset(const std::filesystem::path& path);

} // namespace vaecme::channel
