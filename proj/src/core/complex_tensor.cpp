#include "vaecme/core/complex_tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace vaecme {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

} // namespace

void require_same_size(std::size_t expected, std::size_t actual, const char* what)
{
    if (expected != actual) {
        throw std::invalid_argument(std::string(what) + ": size mismatch (expected " + std::to_string(expected) +
                                    ", got " + std::to_string(actual) + ")");
    }
}

ComplexTensor::ComplexTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(element_count(shape_))
{
}

ComplexTensor::ComplexTensor(std::vector<std::size_t> shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    require_same_size(element_count(shape_), data_.size(), "ComplexTensor");
}

ComplexTensor ComplexTensor::vector(std::vector<cplx> values)
{
    const auto n = values.size();
    return ComplexTensor({n}, std::move(values));
}

ComplexTensor ComplexTensor::identity(std::size_t n)
{
    ComplexTensor out({n, n});
    for (std::size_t i = 0; i < n; ++i)
        out(i, i) = 1.0;
    return out;
}

std::size_t ComplexTensor::rows() const
{
    if (rank() != 2)
        throw std::invalid_argument("ComplexTensor::rows: not a matrix");
    return shape_[0];
}

std::size_t ComplexTensor::cols() const
{
    if (rank() != 2)
        throw std::invalid_argument("ComplexTensor::cols: not a matrix");
    return shape_[1];
}

bool ComplexTensor::all_finite() const noexcept
{
    for (const auto& v : data_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            return false;
    return true;
}

double ComplexTensor::squared_norm() const noexcept
{
    double s = 0.0;
    for (const auto& v : data_)
        s += std::norm(v);
    return s;
}

double ComplexTensor::norm() const noexcept { return std::sqrt(squared_norm()); }

ComplexTensor ComplexTensor::adjoint() const
{
    const auto r = rows();
    const auto c = cols();
    ComplexTensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            out(j, i) = std::conj((*this)(i, j));
    return out;
}

ComplexTensor ComplexTensor::reshaped(std::vector<std::size_t> shape) const
{
    return ComplexTensor(std::move(shape), data_);
}

ComplexTensor operator+(const ComplexTensor& a, const ComplexTensor& b)
{
    require_same_size(a.size(), b.size(), "operator+");
    ComplexTensor out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] += b[i];
    return out;
}

ComplexTensor operator-(const ComplexTensor& a, const ComplexTensor& b)
{
    require_same_size(a.size(), b.size(), "operator-");
    ComplexTensor out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] -= b[i];
    return out;
}

ComplexTensor operator*(cplx s, const ComplexTensor& a)
{
    ComplexTensor out = a;
    for (auto& v : out.data())
        v *= s;
    return out;
}

ComplexTensor matmul(const ComplexTensor& a, const ComplexTensor& b)
{
    const auto m = a.rows();
    const auto k = a.cols();
    if (b.rank() == 1) {
        require_same_size(k, b.size(), "matmul");
        ComplexTensor out({m});
        for (std::size_t i = 0; i < m; ++i) {
            cplx acc = 0.0;
            for (std::size_t j = 0; j < k; ++j)
                acc += a(i, j) * b[j];
            out[i] = acc;
        }
        return out;
    }
    require_same_size(k, b.rows(), "matmul");
    const auto n = b.cols();
    ComplexTensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const cplx aip = a(i, p);
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) += aip * b(p, j);
        }
    return out;
}

} // namespace vaecme
