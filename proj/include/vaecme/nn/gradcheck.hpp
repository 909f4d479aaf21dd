#pragma once

#include "vaecme/nn/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace vaecme::nn {

struct GradCheckResult {
    double worst_rel_error = 0.0; // over coordinates above the absolute floor
    std::size_t coordinates = 0;
    std::size_t failures = 0;
    std::string first_failure;
    [[nodiscard]] bool ok() const { return failures == 0; }
};

/// Compares backward() against central differences for every coordinate of
/// `params`. `loss` must rebuild the graph from the current parameter values.
/// A coordinate passes when |analytic - numeric| <= rel_tol * max(|a|, |n|)
/// or the difference is below abs_floor (round-off of the difference quotient).
GradCheckResult gradient_check(std::vector<Tensor> params, const std::function<Tensor()>& loss, double step = 1e-5,
                               double rel_tol = 1e-4, double abs_floor = 1e-8);

} // namespace vaecme::nn
