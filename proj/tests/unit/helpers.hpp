#pragma once

#include "vaecme/core/complex_tensor.hpp"
#include "vaecme/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace vaecme::test {

inline ComplexTensor random_vector(std::size_t n, Rng& rng)
{
    ComplexTensor v({n});
    for (auto& x : v.data())
        x = standard_complex_normal(rng);
    return v;
}

inline ComplexTensor random_matrix(std::size_t r, std::size_t c, Rng& rng)
{
    ComplexTensor m({r, c});
    for (auto& x : m.data())
        x = standard_complex_normal(rng);
    return m;
}

inline double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline double rel_error(const ComplexTensor& a, const ComplexTensor& ref)
{
    return (a - ref).norm() / std::max(ref.norm(), 1e-300);
}

/// Textbook O(N^2) DFT with unitary scaling; independent of the FFT code.
inline ComplexTensor naive_dft(const ComplexTensor& x, bool adjoint)
{
    const auto n = x.size();
    ComplexTensor out({n});
    const double sign = adjoint ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(m) /
                             static_cast<double>(n);
            acc += x[m] * cplx{std::cos(a), std::sin(a)};
        }
        out[k] = acc / std::sqrt(static_cast<double>(n));
    }
    return out;
}

/// Dense Kronecker product a (x) b.
inline ComplexTensor kron(const ComplexTensor& a, const ComplexTensor& b)
{
    const auto ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
    ComplexTensor out({ar * br, ac * bc});
    for (std::size_t i = 0; i < ar; ++i)
        for (std::size_t j = 0; j < ac; ++j)
            for (std::size_t k = 0; k < br; ++k)
                for (std::size_t l = 0; l < bc; ++l)
                    out(i * br + k, j * bc + l) = a(i, j) * b(k, l);
    return out;
}

} // namespace vaecme::test
