#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vaecme {

using cplx = std::complex<double>;

/// Dense complex tensor in row-major order. Houses channels, observations,
/// observation matrices and covariances.
class ComplexTensor {
public:
    ComplexTensor() = default;
    explicit ComplexTensor(std::vector<std::size_t> shape);
    ComplexTensor(std::vector<std::size_t> shape, std::vector<cplx> data);

    static ComplexTensor vector(std::vector<cplx> values);
    static ComplexTensor zeros(std::size_t n) { return ComplexTensor({n}); }
    static ComplexTensor matrix(std::size_t rows, std::size_t cols) { return ComplexTensor({rows, cols}); }
    static ComplexTensor identity(std::size_t n);

    [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t rows() const;
    [[nodiscard]] std::size_t cols() const;

    [[nodiscard]] std::span<cplx> data() noexcept { return data_; }
    [[nodiscard]] std::span<const cplx> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<cplx>& values() const noexcept { return data_; }

    cplx& operator[](std::size_t i) { return data_[i]; }
    const cplx& operator[](std::size_t i) const { return data_[i]; }
    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] double squared_norm() const noexcept;
    [[nodiscard]] double norm() const noexcept;

    /// Conjugate transpose of a rank-2 tensor.
    [[nodiscard]] ComplexTensor adjoint() const;

    /// Same data, new shape; throws when element counts differ.
    [[nodiscard]] ComplexTensor reshaped(std::vector<std::size_t> shape) const;

    friend bool operator==(const ComplexTensor&, const ComplexTensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<cplx> data_;
};

ComplexTensor operator+(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor operator-(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor operator*(cplx s, const ComplexTensor& a);

/// Matrix-matrix or matrix-vector product.
ComplexTensor matmul(const ComplexTensor& a, const ComplexTensor& b);

void require_same_size(std::size_t expected, std::size_t actual, const char* what);

} // namespace vaecme
