#pragma once

#include "vaecme/io/binary.hpp"
#include "vaecme/nn/tensor.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vaecme::nn {

/// Thrown by adam_step when a gradient entry is NaN or infinite.
class NonFiniteGradient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AdamState {
    double lr = 7e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void save(io::Writer& w) const;
    static AdamState load(io::Reader& r);
};

/// One bias-corrected Adam update of `params` from their gradient buffers.
/// Moments are allocated on the first call. Parameters are left untouched
/// if any gradient is non-finite.
void adam_step(AdamState& state, std::vector<Tensor>& params);

} // namespace vaecme::nn
