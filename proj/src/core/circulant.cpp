#include "vaecme/core/circulant.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vaecme {

CirculantSpec CirculantSpec::simo(std::vector<double> c)
{
    const auto n = c.size();
    return CirculantSpec{std::move(c), KronDims{n, 1}};
}

CirculantSpec CirculantSpec::block(std::vector<double> c, KronDims dims)
{
    return CirculantSpec{std::move(c), dims};
}

void CirculantSpec::validate() const
{
    require_same_size(dims.size(), eigenvalues.size(), "CirculantSpec");
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] > 0.0) || !std::isfinite(eigenvalues[i]))
            throw std::invalid_argument("CirculantSpec: spectrum entry " + std::to_string(i) +
                                        " is not strictly positive");
    }
}

ComplexTensor CirculantSpec::dense() const
{
    validate();
    const auto q = transform().dense();
    const auto n = size();
    ComplexTensor out({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx acc = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                acc += std::conj(q(k, i)) * eigenvalues[k] * q(k, j);
            out(i, j) = acc;
        }
    return out;
}

void circulant_apply_inplace(const CirculantSpec& spec, std::span<cplx> x)
{
    spec.validate();
    require_same_size(spec.size(), x.size(), "circulant_apply");
    const auto q = spec.transform();
    q.apply_inplace(x, Direction::forward);
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] *= spec.eigenvalues[k];
    q.apply_inplace(x, Direction::adjoint);
}

ComplexTensor circulant_apply(const CirculantSpec& spec, const ComplexTensor& x)
{
    ComplexTensor out = x;
    circulant_apply_inplace(spec, out.data());
    return out;
}

ComplexTensor toeplitz_from_first_row(const ComplexTensor& r)
{
    const auto n = r.size();
    if (n == 0)
        throw std::invalid_argument("toeplitz_from_first_row: empty row");
    if (r[0].imag() != 0.0)
        throw std::invalid_argument("toeplitz_from_first_row: leading entry must be real");
    ComplexTensor out({n, n});
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = 0; k < n; ++k)
            out(m, k) = k >= m ? r[k - m] : std::conj(r[m - k]);
    return out;
}

} // namespace vaecme
