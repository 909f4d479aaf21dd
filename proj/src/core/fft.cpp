#include "vaecme/core/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace vaecme {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

} // namespace

struct FftPlan::Bluestein {
    std::size_t m = 0;
    std::unique_ptr<FftPlan> inner;
    std::vector<cplx> chirp;       // exp(-j pi k^2 / n), k < n
    std::vector<cplx> kernel_fft;  // unscaled FFT of the conjugate chirp, length m
};

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(is_pow2(n))
{
    if (n == 0)
        throw std::invalid_argument("FftPlan: zero length");
    if (pow2_) {
        bitrev_.resize(n);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n)
            ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b))
                    r |= std::size_t{1} << (bits - 1 - b);
            bitrev_[i] = r;
        }
        twiddle_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = {std::cos(a), std::sin(a)};
        }
        return;
    }

    bluestein_ = std::make_unique<Bluestein>();
    auto& b = *bluestein_;
    b.m = next_pow2(2 * n - 1);
    b.inner = std::make_unique<FftPlan>(b.m);
    b.chirp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the phase argument small for large k.
        const auto k2 = (k * k) % (2 * n);
        const double a = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        b.chirp[k] = {std::cos(a), std::sin(a)};
    }
    b.kernel_fft.assign(b.m, cplx{});
    b.kernel_fft[0] = std::conj(b.chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        b.kernel_fft[k] = std::conj(b.chirp[k]);
        b.kernel_fft[b.m - k] = std::conj(b.chirp[k]);
    }
    b.inner->unscaled(b.kernel_fft, false);
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::radix2(std::span<cplx> x, bool inverse) const
{
    const auto n = n_;
    for (std::size_t i = 0; i < n; ++i)
        if (i < bitrev_[i])
            std::swap(x[i], x[bitrev_[i]]);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                cplx w = twiddle_[k * step];
                if (inverse)
                    w = std::conj(w);
                const cplx u = x[start + k];
                const cplx v = x[start + k + half] * w;
                x[start + k] = u + v;
                x[start + k + half] = u - v;
            }
        }
    }
}

void FftPlan::unscaled(std::span<cplx> x, bool inverse) const
{
    if (pow2_) {
        radix2(x, inverse);
        return;
    }
    const auto& b = *bluestein_;
    // The inverse transform is conj(F conj(x)).
    std::vector<cplx> work(b.m, cplx{});
    for (std::size_t k = 0; k < n_; ++k) {
        const cplx xk = inverse ? std::conj(x[k]) : x[k];
        work[k] = xk * b.chirp[k];
    }
    b.inner->unscaled(work, false);
    for (std::size_t k = 0; k < b.m; ++k)
        work[k] *= b.kernel_fft[k];
    b.inner->unscaled(work, true);
    const double inv_m = 1.0 / static_cast<double>(b.m);
    for (std::size_t k = 0; k < n_; ++k) {
        const cplx v = work[k] * inv_m * b.chirp[k];
        x[k] = inverse ? std::conj(v) : v;
    }
}

void FftPlan::transform(std::span<cplx> x, Direction dir) const
{
    require_same_size(n_, x.size(), "FftPlan::transform");
    unscaled(x, dir == Direction::adjoint);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    for (auto& v : x)
        v *= scale;
}

void FftPlan::transform_strided(std::span<cplx> x, std::size_t offset, std::size_t stride, Direction dir,
                                std::vector<cplx>& scratch) const
{
    scratch.resize(n_);
    for (std::size_t i = 0; i < n_; ++i)
        scratch[i] = x[offset + i * stride];
    transform(scratch, dir);
    for (std::size_t i = 0; i < n_; ++i)
        x[offset + i * stride] = scratch[i];
}

const FftPlan& fft_plan(std::size_t n)
{
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot)
        slot = std::make_unique<FftPlan>(n);
    return *slot;
}

void dft_inplace(std::span<cplx> x, Direction dir) { fft_plan(x.size()).transform(x, dir); }

ComplexTensor dft_apply(const ComplexTensor& x, Direction dir)
{
    ComplexTensor out = x;
    dft_inplace(out.data(), dir);
    return out;
}

void kron_dft_inplace(std::span<cplx> x, KronDims dims, Direction dir)
{
    require_same_size(dims.size(), x.size(), "kron_dft_apply");
    // x = vec(H) with H column-major n_rx x n_tx: columns are contiguous.
    const auto& rx = fft_plan(dims.n_rx);
    for (std::size_t t = 0; t < dims.n_tx; ++t)
        rx.transform(x.subspan(t * dims.n_rx, dims.n_rx), dir);
    if (dims.n_tx == 1)
        return;
    const auto& tx = fft_plan(dims.n_tx);
    std::vector<cplx> scratch;
    for (std::size_t r = 0; r < dims.n_rx; ++r)
        tx.transform_strided(x, r, dims.n_rx, dir, scratch);
}

ComplexTensor kron_dft_apply(const ComplexTensor& x, KronDims dims, Direction dir)
{
    ComplexTensor out = x;
    kron_dft_inplace(out.data(), dims, dir);
    return out;
}

UnitaryTransform UnitaryTransform::for_dims(KronDims dims)
{
    return dims.n_tx == 1 ? dft(dims.n_rx) : kron(dims);
}

void UnitaryTransform::apply_inplace(std::span<cplx> x, Direction dir) const
{
    if (kind_ == Kind::dft)
        dft_inplace(x, dir);
    else
        kron_dft_inplace(x, dims_, dir);
}

ComplexTensor UnitaryTransform::apply(const ComplexTensor& x, Direction dir) const
{
    ComplexTensor out = x;
    require_same_size(size(), out.size(), "UnitaryTransform::apply");
    apply_inplace(out.data(), dir);
    return out;
}

ComplexTensor UnitaryTransform::dense() const
{
    const auto n = size();
    ComplexTensor out({n, n});
    std::vector<cplx> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), cplx{});
        col[j] = 1.0;
        apply_inplace(col, Direction::forward);
        for (std::size_t i = 0; i < n; ++i)
            out(i, j) = col[i];
    }
    return out;
}

ComplexTensor dft_matrix(std::size_t n)
{
    ComplexTensor out({n, n});
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t m = 0; m < n; ++m) {
            const auto km = (k * m) % n;
            const double a = -2.0 * std::numbers::pi * static_cast<double>(km) / static_cast<double>(n);
            out(k, m) = cplx{std::cos(a), std::sin(a)} * scale;
        }
    return out;
}

} // namespace vaecme
