#pragma once

#include "vaecme/core/rng.hpp"
#include "vaecme/io/binary.hpp"
#include "vaecme/nn/ops.hpp"

#include <array>
#include <string>
#include <vector>

namespace vaecme::nn {

enum class LayerKind {
    conv1d,
    conv2d,
    transposed_conv1d,
    transposed_conv2d,
    dense,
    batch_norm,
    relu,
    exp,
    reshape
};

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

enum class Mode { train, eval };

/// Hyperparameters of one layer. Only the fields relevant to `kind` are used.
/// 1d variants use index 0 of kernel/stride/padding.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0; // also dense out features and batch-norm channels
    std::array<std::size_t, 2> kernel{1, 1};
    std::array<std::size_t, 2> stride{1, 1};
    std::array<std::size_t, 2> padding{0, 0};
    std::array<std::size_t, 2> output_padding{0, 0};
    Shape target; // reshape target, batch axis excluded

    static LayerSpec conv1d(std::size_t cin, std::size_t cout, std::size_t k, std::size_t s = 1, std::size_t p = 0);
    static LayerSpec conv2d(std::size_t cin, std::size_t cout, std::array<std::size_t, 2> k,
                            std::array<std::size_t, 2> s = {1, 1}, std::array<std::size_t, 2> p = {0, 0});
    static LayerSpec transposed_conv1d(std::size_t cin, std::size_t cout, std::size_t k, std::size_t s = 1,
                                       std::size_t p = 0, std::size_t op = 0);
    static LayerSpec transposed_conv2d(std::size_t cin, std::size_t cout, std::array<std::size_t, 2> k,
                                       std::array<std::size_t, 2> s = {1, 1}, std::array<std::size_t, 2> p = {0, 0},
                                       std::array<std::size_t, 2> op = {0, 0});
    static LayerSpec dense(std::size_t in, std::size_t out);
    static LayerSpec batch_norm(std::size_t channels);
    static LayerSpec relu();
    static LayerSpec exp();
    static LayerSpec reshape(Shape target);

    /// Per-sample output shape for a per-sample input shape; throws
    /// std::invalid_argument when they are inconsistent.
    [[nodiscard]] Shape output_shape(const Shape& in) const;
    [[nodiscard]] Conv2dGeometry geometry() const;

    bool operator==(const LayerSpec&) const = default;
};

/// A layer instance: spec plus its parameters and batch-norm statistics.
struct Layer {
    LayerSpec spec;
    std::vector<Tensor> params; // weight, bias | gamma, beta
    BatchNormState bn;

    explicit Layer(LayerSpec s);

    /// Fan-in uniform U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and
    /// biases; batch norm starts at gamma 1, beta 0.
    void initialize(Rng& rng);
    Tensor forward(const Tensor& x, Mode mode);
};

class Sequential {
public:
    Sequential() = default;
    Sequential(std::vector<LayerSpec> specs, Shape input_shape);

    [[nodiscard]] const Shape& input_shape() const { return input_shape_; }
    [[nodiscard]] Shape output_shape() const;
    [[nodiscard]] std::vector<LayerSpec> specs() const;
    [[nodiscard]] std::vector<Layer>& layers() { return layers_; }
    [[nodiscard]] const std::vector<Layer>& layers() const { return layers_; }

    void initialize(Rng& rng);
    /// x has shape [B, input_shape...].
    Tensor forward(const Tensor& x, Mode mode);
    /// All trainable tensors in a fixed order.
    std::vector<Tensor> parameters() const;
    void set_bn_momentum(double m);

    void save(io::Writer& w) const;
    static Sequential load(io::Reader& r);

private:
    Shape input_shape_;
    std::vector<Layer> layers_;
};

} // namespace vaecme::nn
