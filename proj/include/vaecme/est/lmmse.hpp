#pragma once

#include "vaecme/channel/model.hpp"
#include "vaecme/channel/observation.hpp"
#include "vaecme/core/circulant.hpp"
#include "vaecme/core/dense.hpp"

#include <vector>

namespace vaecme::est {

/// mu + C A^H (A C A^H + Sigma)^-1 (y - A mu), Cholesky solve with a single
/// 1e-12 relative ridge retry (reported through `regularized`).
ComplexTensor cond_lmmse_dense(const ComplexTensor& mu, const ComplexTensor& c, const ComplexTensor& a,
                               const ComplexTensor& sigma, const ComplexTensor& y, bool* regularized = nullptr);

/// mu + (A^H Sigma^-1 A + C^-1)^-1 A^H Sigma^-1 (y - A mu); needs C and Sigma invertible.
ComplexTensor cond_lmmse_information_form(const ComplexTensor& mu, const ComplexTensor& c, const ComplexTensor& a,
                                          const ComplexTensor& sigma, const ComplexTensor& y);

/// Circulant fast path on the decorrelated observation ls = A^H y (A unitary):
/// mu + Q^H diag(c / (c + s2)) Q (ls - mu). Throws for s2 <= 0.
ComplexTensor circulant_lmmse(const ComplexTensor& mu, const CirculantSpec& c, double noise_var,
                              const ComplexTensor& ls);

/// Same estimate from the raw observation y.
ComplexTensor cond_lmmse_fast(const ComplexTensor& mu, const CirculantSpec& c, double noise_var,
                              const ComplexTensor& y, const channel::ObservationModel& model);

/// A^H y.
ComplexTensor ls_estimate(const ComplexTensor& y, const channel::ObservationModel& model);

/// LMMSE filter for a Kronecker covariance C_tx (x) C_rx via per-factor
/// eigendecompositions; valid for unitary A. Build once, apply at any SNR.
class KronLmmse {
public:
    explicit KronLmmse(const channel::KronCovariance& c);
    /// C (C + s2 I)^-1 ls with ls = A^H y.
    [[nodiscard]] ComplexTensor apply(const ComplexTensor& ls, double noise_var) const;
    [[nodiscard]] double min_eigenvalue() const;

private:
    KronDims dims_;
    MatrixXc ur_, ut_;
    Eigen::VectorXd lr_, lt_;
};

/// genie-cov: C A^H (A C A^H + s2 I)^-1 y for the true per-sample covariance.
ComplexTensor genie_cov_estimate(const ComplexTensor& y, const channel::KronCovariance& c,
                                 const channel::ObservationModel& model, double noise_var);

/// Sample covariance of a training set.
struct GlobalCovariance {
    ComplexTensor c;
    std::size_t count = 0;
};

GlobalCovariance fit_global_cov(const std::vector<ComplexTensor>& samples);

/// Fixed-covariance LMMSE with the global sample covariance, eigendecomposed once.
class GlobalLmmse {
public:
    explicit GlobalLmmse(const GlobalCovariance& g);
    [[nodiscard]] ComplexTensor apply(const ComplexTensor& ls, double noise_var) const;

private:
    MatrixXc u_;
    Eigen::VectorXd lambda_;
};

ComplexTensor global_cov_estimate(const ComplexTensor& y, const GlobalCovariance& g,
                                  const channel::ObservationModel& model, double noise_var);

} // namespace vaecme::est
