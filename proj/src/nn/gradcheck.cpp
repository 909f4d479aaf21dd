#include "vaecme/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vaecme::nn {

GradCheckResult gradient_check(std::vector<Tensor> params, const std::function<Tensor()>& loss, double step,
                               double rel_tol, double abs_floor)
{
    for (auto& p : params)
        p.zero_grad();
    loss().backward();
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params)
        analytic.emplace_back(p.grad().begin(), p.grad().end());

    GradCheckResult res;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto v = params[i].mutable_value();
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double saved = v[k];
            double plus, minus;
            {
                NoGradGuard ng;
                v[k] = saved + step;
                plus = loss().item();
                v[k] = saved - step;
                minus = loss().item();
            }
            v[k] = saved;
            const double numeric = (plus - minus) / (2.0 * step);
            const double a = analytic[i][k];
            const double diff = std::abs(a - numeric);
            const double scale = std::max(std::abs(a), std::abs(numeric));
            ++res.coordinates;
            if (diff > abs_floor)
                res.worst_rel_error = std::max(res.worst_rel_error, diff / scale);
            if (diff > abs_floor && diff > rel_tol * scale) {
                if (res.failures++ == 0) {
                    std::ostringstream os;
                    os << "tensor " << i << " index " << k << ": analytic " << a << " numeric " << numeric;
                    res.first_failure = os.str();
                }
            }
        }
    }
    return res;
}

} // namespace vaecme::nn
