#pragma once

#include "vaecme/core/complex_tensor.hpp"
#include "vaecme/core/fft.hpp"
#include "vaecme/core/rng.hpp"

namespace vaecme::channel {

/// Noise variance for a given SNR: sigma^2 = N_tx / SNR.
double noise_variance_from_snr_db(double snr_db, std::size_t n_tx);

/// y = A h + n with A = X^T (x) I_rx, i.e. Y = H X + N for H n_rx x n_tx.
/// X is N_tx x N_p; the fully determined case uses N_p = N_tx.
struct ObservationModel {
    KronDims dims;
    ComplexTensor pilots; // X
    double noise_variance = 1.0;

    [[nodiscard]] std::size_t n() const { return dims.size(); }
    [[nodiscard]] std::size_t m() const { return dims.n_rx * pilots.cols(); }

    /// A h = vec(H X).
    [[nodiscard]] ComplexTensor apply(const ComplexTensor& h) const;
    /// A^H y = vec(Y X^H).
    [[nodiscard]] ComplexTensor apply_adjoint(const ComplexTensor& y) const;
    /// Dense M x N matrix (tests and small N only).
    [[nodiscard]] ComplexTensor dense() const;
};

struct PilotSetup {
    ComplexTensor x;
    ComplexTensor a; // dense A; only for small sizes
};

/// Unitary DFT pilots X = F_{N_tx}. With `dense_a` the observation matrix
/// is materialized as well.
PilotSetup dft_pilots(std::size_t n_tx, std::size_t n_rx = 1, bool dense_a = false);

ObservationModel make_model(KronDims dims, double noise_variance);

/// y = A h + sqrt(sigma^2) w, w standard complex normal.
ComplexTensor make_observation(const ComplexTensor& h, const ObservationModel& model, Rng& rng);

} // namespace vaecme::channel
