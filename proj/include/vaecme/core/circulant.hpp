#pragma once

#include "vaecme/core/complex_tensor.hpp"
#include "vaecme/core/fft.hpp"

#include <span>
#include <vector>

namespace vaecme {

/// (Block-)circulant covariance Q^H diag(c) Q given by its strictly positive
/// spectrum c in the DFT basis.
struct CirculantSpec {
    std::vector<double> eigenvalues;
    KronDims dims;

    /// SIMO spectrum of length n (dims = {n, 1}).
    static CirculantSpec simo(std::vector<double> c);
    static CirculantSpec block(std::vector<double> c, KronDims dims);

    [[nodiscard]] std::size_t size() const noexcept { return eigenvalues.size(); }
    [[nodiscard]] UnitaryTransform transform() const { return UnitaryTransform::for_dims(dims); }

    /// Throws when the length disagrees with dims or an entry is not strictly positive.
    void validate() const;

    /// Dense Q^H diag(c) Q.
    [[nodiscard]] ComplexTensor dense() const;
};

ComplexTensor circulant_apply(const CirculantSpec& spec, const ComplexTensor& x);
void circulant_apply_inplace(const CirculantSpec& spec, std::span<cplx> x);

/// Hermitian Toeplitz matrix T with T(m, k) = r[k - m] for k >= m and conj(r[m - k]) below.
ComplexTensor toeplitz_from_first_row(const ComplexTensor& r);

} // namespace vaecme
