#include "vaecme/channel/observation.hpp"

#include <cmath>
#include <stdexcept>

namespace vaecme::channel {

double noise_variance_from_snr_db(double snr_db, std::size_t n_tx)
{
    return static_cast<double>(n_tx) / std::pow(10.0, snr_db / 10.0);
}

ComplexTensor ObservationModel::apply(const ComplexTensor& h) const
{
    require_same_size(n(), h.size(), "observation input");
    const auto nr = dims.n_rx, nt = dims.n_tx, np = pilots.cols();
    if (nt == 1 && np == 1 && pilots(0, 0) == cplx{1.0, 0.0})
        return h;
    ComplexTensor y = ComplexTensor::zeros(nr * np);
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t t = 0; t < nt; ++t) {
            const cplx x = pilots(t, p);
            for (std::size_t r = 0; r < nr; ++r)
                y[p * nr + r] += h[t * nr + r] * x;
        }
    return y;
}

ComplexTensor ObservationModel::apply_adjoint(const ComplexTensor& y) const
{
    require_same_size(m(), y.size(), "observation");
    const auto nr = dims.n_rx, nt = dims.n_tx, np = pilots.cols();
    if (nt == 1 && np == 1 && pilots(0, 0) == cplx{1.0, 0.0})
        return y;
    ComplexTensor z = ComplexTensor::zeros(nr * nt);
    for (std::size_t t = 0; t < nt; ++t)
        for (std::size_t p = 0; p < np; ++p) {
            const cplx x = std::conj(pilots(t, p));
            for (std::size_t r = 0; r < nr; ++r)
                z[t * nr + r] += y[p * nr + r] * x;
        }
    return z;
}

ComplexTensor ObservationModel::dense() const
{
    const auto nr = dims.n_rx, nt = dims.n_tx, np = pilots.cols();
    ComplexTensor a({nr * np, nr * nt});
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t t = 0; t < nt; ++t)
            for (std::size_t r = 0; r < nr; ++r)
                a(p * nr + r, t * nr + r) = pilots(t, p);
    return a;
}

PilotSetup dft_pilots(std::size_t n_tx, std::size_t n_rx, bool dense_a)
{
    if (n_tx == 0 || n_rx == 0)
        throw std::invalid_argument("dft_pilots: antenna counts must be positive");
    PilotSetup s{dft_matrix(n_tx), {}};
    if (dense_a) {
        ObservationModel m{{n_rx, n_tx}, s.x, 1.0};
        s.a = m.dense();
    }
    return s;
}

ObservationModel make_model(KronDims dims, double noise_variance)
{
    if (!(noise_variance >= 0.0))
        throw std::invalid_argument("make_model: noise variance must be nonnegative");
    return {dims, dft_matrix(dims.n_tx), noise_variance};
}

ComplexTensor make_observation(const ComplexTensor& h, const ObservationModel& model, Rng& rng)
{
    auto y = model.apply(h);
    if (model.noise_variance > 0.0) {
        const double s = std::sqrt(model.noise_variance);
        for (auto& v : y.data())
            v += s * standard_complex_normal(rng);
    }
    return y;
}

} // namespace vaecme::channel
