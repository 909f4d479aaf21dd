#pragma once

#include "vaecme/core/complex_tensor.hpp"
#include "vaecme/core/fft.hpp"
#include "vaecme/core/rng.hpp"

#include <numbers>
#include <vector>

namespace vaecme::channel {

inline constexpr double kDefaultSectorHalfWidth = std::numbers::pi / 3.0;
inline constexpr double kDefaultSpreadDeg = 2.0;

inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

/// Propagation parameters of one channel (the conditioning variable).
/// `tx_angles` is empty for SIMO.
struct ClusterParams {
    std::vector<double> gains;
    std::vector<double> rx_angles;
    std::vector<double> tx_angles;
    std::vector<double> spreads; // angular standard deviation per cluster, radians

    [[nodiscard]] std::size_t clusters() const { return gains.size(); }
    [[nodiscard]] std::size_t sides() const { return tx_angles.empty() ? 1 : 2; }
    /// Throws std::invalid_argument unless gains are a distribution, spreads
    /// are positive and angles lie in [-sector, sector].
    void validate(double sector_half_width = kDefaultSectorHalfWidth) const;

    bool operator==(const ClusterParams&) const = default;
};

/// Angles uniform on the sector, gains from the flat Dirichlet, fixed spread.
ClusterParams sample_cluster_params(Rng& rng, std::size_t clusters, std::size_t sides,
                                    double spread_rad = deg_to_rad(kDefaultSpreadDeg),
                                    double sector_half_width = kDefaultSectorHalfWidth);

/// ULA response with entries exp(-j pi m sin(theta)).
ComplexTensor steering_vector(double theta, std::size_t n);

/// One side of the angular power spectrum: a Laplace mixture (scale
/// spread/sqrt(2)) truncated to [-pi, pi] and renormalized there.
class AngularSpectrum {
public:
    AngularSpectrum(std::vector<double> gains, std::vector<double> angles, std::vector<double> spreads);
    static AngularSpectrum rx_side(const ClusterParams& d);
    static AngularSpectrum tx_side(const ClusterParams& d);

    [[nodiscard]] double operator()(double theta) const;
    [[nodiscard]] const std::vector<double>& angles() const { return angles_; }
    [[nodiscard]] double min_scale() const;

private:
    std::vector<double> gains_, angles_, scales_;
    double norm_ = 1.0;
};

/// Nodes and weights of a quadrature rule on [-pi, pi].
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

/// Uniform trapezoid rule with `points` nodes including both endpoints.
Quadrature trapezoid_rule(std::size_t points);

/// Composite 8-point Gauss-Legendre rule with breakpoints at -pi, pi and every
/// cluster centre. Panels grow geometrically away from the breakpoints
/// (first width min_scale/4) up to 2*pi/512. Each refinement level splits
/// every panel in two.
Quadrature spectrum_rule(const AngularSpectrum& g, unsigned refine = 0);

/// First row r[k] = int g(t) exp(j pi k sin t) dt of the Hermitian Toeplitz
/// covariance int g a a^H, scaled so r[0] = 1 (trace n). Uses spectrum_rule.
ComplexTensor ccm_first_row(const AngularSpectrum& g, std::size_t n, unsigned refine = 0);
ComplexTensor ccm_first_row(const AngularSpectrum& g, std::size_t n, const Quadrature& rule);

/// Dense Toeplitz expansion of ccm_first_row. Throws NumericalError when the
/// smallest eigenvalue is below -1e-8.
ComplexTensor build_ccm(const AngularSpectrum& g, std::size_t n, unsigned refine = 0);

/// Per-side covariances of a channel; `tx` is 1x1 [1] for SIMO.
struct KronCovariance {
    ComplexTensor rx;
    ComplexTensor tx;
    [[nodiscard]] KronDims dims() const { return {rx.rows(), tx.rows()}; }
    /// C = C_tx (x) C_rx; meant for small N only.
    [[nodiscard]] ComplexTensor dense() const;
};

KronCovariance build_kron_ccm(const ClusterParams& d, KronDims dims);

/// h = vec(L_rx W L_tx^T) with W standard complex normal, rx index fastest.
/// Cholesky failures are retried once with a 1e-10 relative ridge.
ComplexTensor sample_channel(const KronCovariance& c, Rng& rng);

} // namespace vaecme::channel
