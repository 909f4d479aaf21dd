#include "vaecme/nn/adam.hpp"

#include <cmath>
#include <string>

namespace vaecme::nn {

void adam_step(AdamState& s, std::vector<Tensor>& params)
{
    if (s.m.empty()) {
        for (const auto& p : params) {
            s.m.emplace_back(p.size(), 0.0);
            s.v.emplace_back(p.size(), 0.0);
        }
    }
    if (s.m.size() != params.size())
        throw std::invalid_argument("adam_step: optimizer state tracks " + std::to_string(s.m.size()) +
                                    " tensors, got " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (s.m[i].size() != params[i].size())
            throw std::invalid_argument("adam_step: moment shape mismatch for tensor " + std::to_string(i));
        const auto g = params[i].grad();
        if (g.size() != params[i].size())
            throw std::invalid_argument("adam_step: tensor " + std::to_string(i) + " has no gradient buffer");
        for (std::size_t k = 0; k < g.size(); ++k)
            if (!std::isfinite(g[k]))
                throw NonFiniteGradient("adam_step: non-finite gradient in tensor " + std::to_string(i) + " (" +
                                        shape_string(params[i].shape()) + ") at index " + std::to_string(k));
    }

    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto g = params[i].grad();
        auto p = params[i].mutable_value();
        auto& m = s.m[i];
        auto& v = s.v[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
            v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
            p[k] -= s.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + s.eps);
        }
    }
}

void AdamState::save(io::Writer& w) const
{
    w.f64(lr);
    w.f64(beta1);
    w.f64(beta2);
    w.f64(eps);
    w.u64(step);
    w.u64(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        w.f64s(m[i]);
        w.f64s(v[i]);
    }
}

AdamState AdamState::load(io::Reader& r)
{
    AdamState s;
    s.lr = r.f64();
    s.beta1 = r.f64();
    s.beta2 = r.f64();
    s.eps = r.f64();
    s.step = r.u64();
    const auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        s.m.push_back(r.f64s());
        s.v.push_back(r.f64s());
    }
    return s;
}

} // namespace vaecme::nn
