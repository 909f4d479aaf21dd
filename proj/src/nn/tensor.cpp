#include "vaecme/nn/tensor.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace vaecme::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::size_t shape_size(const Shape& s)
{
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& s)
{
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i)
            out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

Tensor Tensor::constant(Shape shape, std::vector<double> value)
{
    if (shape_size(shape) != value.size())
        throw std::invalid_argument("Tensor::constant: value count does not match shape " + shape_string(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    return Tensor(std::move(n));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> value)
{
    Tensor t = constant(std::move(shape), std::move(value));
    t.node_->requires_grad = true;
    t.node_->grad.assign(t.node_->value.size(), 0.0);
    return t;
}

Tensor Tensor::from_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                       std::function<void(Node&)> backward)
{
    Tensor t = constant(std::move(shape), std::move(value));
    if (!g_grad_enabled)
        return t;
    bool any = false;
    for (const auto& p : parents)
        any = any || p.requires_grad();
    if (!any)
        return t;
    t.node_->requires_grad = true;
    t.node_->parents.reserve(parents.size());
    for (auto& p : parents)
        t.node_->parents.push_back(p.node_);
    t.node_->backward = std::move(backward);
    return t;
}

const Shape& Tensor::shape() const
{
    if (!node_)
        throw std::logic_error("Tensor: empty handle");
    return node_->shape;
}

std::size_t Tensor::size() const { return shape_size(shape()); }

std::span<const double> Tensor::value() const
{
    if (!node_)
        throw std::logic_error("Tensor: empty handle");
    return node_->value;
}

std::span<double> Tensor::mutable_value()
{
    if (!node_)
        throw std::logic_error("Tensor: empty handle");
    return node_->value;
}

std::span<const double> Tensor::grad() const
{
    if (!node_)
        throw std::logic_error("Tensor: empty handle");
    return node_->grad;
}

std::span<double> Tensor::mutable_grad()
{
    if (!node_)
        throw std::logic_error("Tensor: empty handle");
    return node_->grad;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

double Tensor::item() const
{
    if (size() != 1)
        throw std::logic_error("Tensor::item: tensor of shape " + shape_string(shape()) + " is not a scalar");
    return node_->value[0];
}

void Tensor::zero_grad()
{
    if (node_)
        std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

std::vector<double>& parent_grad(Node& n, std::size_t i)
{
    auto& p = *n.parents[i];
    if (p.grad.size() != p.value.size())
        p.grad.assign(p.value.size(), 0.0);
    return p.grad;
}

void Tensor::backward() const
{
    if (!node_)
        throw std::logic_error("backward: no forward pass recorded");
    if (shape_size(node_->shape) != 1)
        throw std::logic_error("backward: root of shape " + shape_string(node_->shape) + " is not a scalar");
    if (!node_->requires_grad)
        return;

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && !p->parents.empty() && seen.insert(p).second)
                stack.emplace_back(p, 0);
            continue;
        }
        order.push_back(n);
        stack.pop_back();
    }

    for (Node* n : order)
        if (n != node_.get() && !n->parents.empty())
            n->grad.assign(n->value.size(), 0.0);
    node_->grad.assign(1, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward)
            n->backward(*n);
    }
}

} // namespace vaecme::nn
