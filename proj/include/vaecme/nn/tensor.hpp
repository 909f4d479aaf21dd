#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vaecme::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_string(const Shape& s);

/// One vertex of the reverse-mode graph. `backward` reads this node's grad
/// and accumulates into the parents' grads.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;
};

/// Handle to a graph node. Copies share the node.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> value);
    static Tensor zeros(Shape shape) { return constant(shape, std::vector<double>(shape_size(shape), 0.0)); }
    static Tensor scalar(double v) { return constant({}, {v}); }
    /// Leaf with a gradient buffer; gradients accumulate until zero_grad().
    static Tensor parameter(Shape shape, std::vector<double> value);

    /// Builds an op result. The node only records parents and the backward
    /// closure when gradients are enabled and some parent requires them.
    static Tensor from_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                          std::function<void(Node&)> backward);

    [[nodiscard]] bool defined() const noexcept { return static_cast<bool>(node_); }
    [[nodiscard]] const Shape& shape() const;
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::span<const double> value() const;
    [[nodiscard]] std::span<double> mutable_value();
    [[nodiscard]] std::span<const double> grad() const;
    [[nodiscard]] std::span<double> mutable_grad();
    [[nodiscard]] bool requires_grad() const;
    [[nodiscard]] double item() const;

    void zero_grad();

    /// Reverse sweep from this scalar. Throws std::logic_error on an empty
    /// handle (no forward pass recorded) or a non-scalar root.
    void backward() const;

    [[nodiscard]] const std::shared_ptr<Node>& node() const noexcept { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;
};

/// Grad of a parent inside a backward closure (allocated on demand).
std::vector<double>& parent_grad(Node& n, std::size_t i);

bool grad_enabled() noexcept;

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

} // namespace vaecme::nn
