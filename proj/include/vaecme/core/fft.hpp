#pragma once

#include "vaecme/core/complex_tensor.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace vaecme {

enum class Direction { forward, adjoint };

/// Unitary DFT of one fixed length. Powers of two run an iterative radix-2
/// kernel; every other length goes through Bluestein's chirp-z on a padded
/// power-of-two transform. Immutable after construction.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);
    ~FftPlan();
    FftPlan(FftPlan&&) noexcept;
    FftPlan& operator=(FftPlan&&) noexcept;

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    /// In-place F x (forward) or F^H x (adjoint), both scaled by 1/sqrt(n).
    void transform(std::span<cplx> x, Direction dir) const;

    /// Strided variant used by the Kronecker transform; `scratch` holds n values.
    void transform_strided(std::span<cplx> x, std::size_t offset, std::size_t stride, Direction dir,
                           std::vector<cplx>& scratch) const;

private:
    struct Bluestein;

    void radix2(std::span<cplx> x, bool inverse) const;
    void unscaled(std::span<cplx> x, bool inverse) const;

    std::size_t n_ = 0;
    bool pow2_ = true;
    std::vector<std::size_t> bitrev_;
    std::vector<cplx> twiddle_;
    std::unique_ptr<Bluestein> bluestein_;
};

/// Shared plan cache; safe to call concurrently.
const FftPlan& fft_plan(std::size_t n);

/// Dimensions of a Kronecker-structured transform Q = F_tx (x) F_rx acting on
/// vec(H) with H of size n_rx x n_tx (receive index fastest).
struct KronDims {
    std::size_t n_rx = 1;
    std::size_t n_tx = 1;

    [[nodiscard]] std::size_t size() const noexcept { return n_rx * n_tx; }
    friend bool operator==(const KronDims&, const KronDims&) = default;
};

void dft_inplace(std::span<cplx> x, Direction dir);
ComplexTensor dft_apply(const ComplexTensor& x, Direction dir);

void kron_dft_inplace(std::span<cplx> x, KronDims dims, Direction dir);
ComplexTensor kron_dft_apply(const ComplexTensor& x, KronDims dims, Direction dir);

/// The angular-domain transform used throughout: F_N for SIMO, F_tx (x) F_rx for MIMO.
class UnitaryTransform {
public:
    enum class Kind { dft, kron_dft };

    static UnitaryTransform dft(std::size_t n) { return UnitaryTransform(Kind::dft, {n, 1}); }
    static UnitaryTransform kron(KronDims dims) { return UnitaryTransform(Kind::kron_dft, dims); }
    /// DFT when n_tx == 1, Kronecker DFT otherwise.
    static UnitaryTransform for_dims(KronDims dims);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] KronDims dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t size() const noexcept { return dims_.size(); }

    void apply_inplace(std::span<cplx> x, Direction dir) const;
    [[nodiscard]] ComplexTensor apply(const ComplexTensor& x, Direction dir) const;

    /// Dense matrix of the transform (tests and dense fallbacks only).
    [[nodiscard]] ComplexTensor dense() const;

private:
    UnitaryTransform(Kind kind, KronDims dims) : kind_(kind), dims_(dims) {}
    Kind kind_;
    KronDims dims_;
};

/// Dense unitary DFT matrix, entries exp(-2 pi j k n / N) / sqrt(N).
ComplexTensor dft_matrix(std::size_t n);

} // namespace vaecme
