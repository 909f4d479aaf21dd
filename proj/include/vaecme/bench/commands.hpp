#pragma once

#include "vaecme/bench/config.hpp"

#include <iosfwd>

namespace vaecme::bench {

// Each command writes its files below cfg.out and reports progress on `log`.
// Bad settings throw ConfigError; everything else is a runtime failure.

/// out/dataset.bin, always regenerated; prints the normalization audit.
void cmd_generate(const ExperimentConfig& cfg, std::ostream& log);

/// One checkpoint and history per VAE variant named in cfg.methods.
void cmd_train(const ExperimentConfig& cfg, std::ostream& log);

/// out/evaluate.csv over cfg.methods x cfg.snr_grid. VAE methods need checkpoints.
void cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log);

/// out/sweep_<axis>.csv with columns axis,value,method,snr_db,nmse,n_test.
/// mc_samples reuses the trained checkpoint of cfg.sweep_method (value 0 is
/// the MAP row); the other axes retrain per point.
void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);

/// out/diagnose_vae_<variant>.csv per VAE variant in cfg.methods.
void cmd_diagnose(const ExperimentConfig& cfg, std::ostream& log);

} // namespace vaecme::bench
