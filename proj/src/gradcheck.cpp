#include "cor/gradcheck.hpp"

#include <cmath>

namespace cor {

double grad_check(const std::function<TensorPtr()>& fn, const std::vector<TensorPtr>& inputs,
                  double eps) {
    for (const auto& in : inputs) in->zero_grad();
    auto loss = fn();
    backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (const auto& in : inputs) {
        in->ensure_grad();
        analytic.push_back(in->grad);
    }

    double max_rel = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Tensor& t = *inputs[k];
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            const double saved = t.data[i];
            t.data[i] = saved + eps;
            const double fp = fn()->item();
            t.data[i] = saved - eps;
            const double fm = fn()->item();
            t.data[i] = saved;
            const double fd = (fp - fm) / (2.0 * eps);
            const double a = analytic[k][i];
            const double rel = std::fabs(a - fd) / std::max(1.0, std::fabs(a));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace cor
