#pragma once

#include "vaecme/channel/observation.hpp"
#include "vaecme/vae/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vaecme::analysis {

/// (1 / (T N)) sum ||h_i - hhat_i||^2.
double nmse(const std::vector<ComplexTensor>& truth, const std::vector<ComplexTensor>& estimates);

struct BoundConstants {
    double c1 = 0.0; // sqrt(mean(s2^2 / (xi + s2)^2))
    double c2 = 0.0; // sqrt(N / s2)
};

/// xi_min holds the smallest covariance eigenvalue per test observation.
BoundConstants bound_constants(double noise_var, const std::vector<double>& xi_min, std::size_t n);

/// Mean over samples of sum_d sigma_d^2.
double mean_variance_trace(const std::vector<vae::LatentGaussian>& post);

/// Encoder-variance trace over a set of observations (genie models need `truth`).
double encoder_variance_trace(vae::VaeModel& model, const std::vector<ComplexTensor>& y,
                              const std::vector<ComplexTensor>* truth, const channel::ObservationModel& obs);

struct LatentPair {
    std::vector<double> a, b;
};

/// Pairs around the operating region: half are an anchor plus a random
/// perturbation of log-uniform size in [scale/100, scale], half join two anchors.
std::vector<LatentPair> lipschitz_pairs(const std::vector<std::vector<double>>& anchors, std::size_t count, Rng& rng,
                                        double scale = 0.5);

enum class OutputNorm { euclidean, max_abs };

/// Batched vector map z -> f(z).
using VectorMap = std::function<std::vector<std::vector<double>>(const std::vector<std::vector<double>>&)>;

struct LipschitzEstimate {
    double value = 0.0;     // max ratio over the pairs; a lower bound on the true constant
    std::size_t pairs = 0;  // pairs used
    std::size_t skipped = 0; // degenerate pairs (a == b)
};

/// max over pairs of ||f(a) - f(b)|| / ||a - b||_2.
LipschitzEstimate empirical_lipschitz(const VectorMap& f, const std::vector<LatentPair>& pairs,
                                      OutputNorm norm = OutputNorm::euclidean);

struct DecoderLipschitz {
    LipschitzEstimate l1; // decoder mean, Euclidean norm
    LipschitzEstimate l2; // covariance, spectral norm = max |delta c| for circulant C
};

DecoderLipschitz decoder_lipschitz(vae::VaeModel& model, const std::vector<LatentPair>& pairs);

/// Reference conditional mean estimator on the decorrelated observation A^H y.
using ReferenceCme = std::function<ComplexTensor(const ComplexTensor& ls, double noise_var)>;

struct GapOptions {
    std::vector<double> snr_db{-10.0, 0.0, 10.0, 20.0, 30.0};
    std::size_t lipschitz_pairs = 2000;
    double safety = 2.0;            // factor applied to the empirical Lipschitz estimates
    std::size_t is_samples = 256;   // importance samples for the true posterior mean
    std::size_t is_subset = 500;    // observations used for the mismatch estimate
    std::uint64_t seed = 1;
};

struct BoundRow {
    double snr_db = 0.0;
    double c1 = 0.0, c2 = 0.0;
    double l1_hat = 0.0, l2_hat = 0.0;  // empirical, not certified
    double enc_var_trace = 0.0;
    double mean_mu_mismatch = 0.0;      // mean ||mu_phi(y) - E_p[z|y]||^2
    std::optional<double> lhs_gap;     // mean ||t_MAP(y) - CME(y)||, reference only
    double rhs_bound = 0.0;            // (C1 s L1 + C2 s L2)(sqrt(trace) + sqrt(mismatch))
    [[nodiscard]] double c1_l1() const { return c1 * l1_hat; }
    [[nodiscard]] double c2_l2() const { return c2 * l2_hat; }
};

struct BoundReport {
    std::vector<BoundRow> rows;
    double safety = 2.0;
    bool has_reference = false;
    /// CSV: snr_db, c1, c2, l1_hat, l2_hat, enc_var_trace, mean_mu_mismatch,
    /// [lhs_gap,] rhs_bound, c1_l1, c2_l2, lipschitz.
    [[nodiscard]] std::string csv() const;
};

/// safety (C1 L1 + C2 L2)(sqrt(trace) + sqrt(mismatch)).
double bound_rhs(const BoundConstants& c, double l1, double l2, double trace, double mismatch, double safety);

/// Theorem-style distance bound diagnostics over an SNR grid. Observations
/// are drawn from `truth` with a fresh noise stream per SNR point.
BoundReport gap_report(vae::VaeModel& model, const std::vector<ComplexTensor>& truth, const GapOptions& opt,
                       const ReferenceCme& reference = {});

/// Self-normalized importance-sampling estimate of E_p[z | y] under the
/// decoder model ls ~ N(mu_theta(z), C_theta(z) + s2 I), z ~ N(0, I), with the
/// encoder posterior as proposal.
std::vector<std::vector<double>> posterior_mean_is(vae::VaeModel& model, const std::vector<ComplexTensor>& ls,
                                                   const std::vector<vae::LatentGaussian>& q, double noise_var,
                                                   std::size_t samples, Rng& rng);

} // namespace vaecme::analysis
