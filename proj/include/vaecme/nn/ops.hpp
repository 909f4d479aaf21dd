#pragma once

#include "vaecme/nn/tensor.hpp"

#include <array>
#include <cstddef>

namespace vaecme::nn {

// Elementwise.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
/// Clamp with zero gradient outside [lo, hi].
Tensor clamp(const Tensor& a, double lo, double hi);

// Reductions to a scalar.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);

/// Columns [begin, end) of a [rows, cols] tensor.
Tensor slice_columns(const Tensor& a, std::size_t begin, std::size_t end);

/// x [B, in] times W^T with W [out, in], plus bias [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct Conv2dGeometry {
    std::array<std::size_t, 2> kernel{1, 1};
    std::array<std::size_t, 2> stride{1, 1};
    std::array<std::size_t, 2> padding{0, 0};
    std::array<std::size_t, 2> output_padding{0, 0};

    /// Output spatial size of the convolution; throws when the geometry does not fit.
    [[nodiscard]] std::array<std::size_t, 2> conv_out(std::size_t h, std::size_t w) const;
    [[nodiscard]] std::array<std::size_t, 2> transposed_out(std::size_t h, std::size_t w) const;
};

/// x [B, Cin, H, W], weight [Cout, Cin, kh, kw], bias [Cout].
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dGeometry& g);

/// x [B, Cin, H, W], weight [Cin, Cout, kh, kw], bias [Cout]; adjoint of conv2d in x.
Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dGeometry& g);

/// Running statistics owned by a batch-norm layer.
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;
};

/// Per-channel normalization over batch and spatial axes of x [B, C, ...].
/// In training mode it uses batch statistics and updates `state`; in
/// evaluation mode it applies the running averages (a fixed affine map).
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, bool training);

} // namespace vaecme::nn
