#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cor/tensor.hpp"

namespace cor {

// Compares the analytic gradient of a scalar-valued graph against central
// finite differences. `fn` must rebuild the graph from the current contents
// of `inputs` on every call; input data is perturbed in place and restored.
// Returns max over coordinates of
//   |analytic - (f(x+eps) - f(x-eps)) / 2 eps| / max(1, |analytic|).
double grad_check(const std::function<TensorPtr()>& fn, const std::vector<TensorPtr>& inputs,
                  double eps = 1e-4);

struct GradCheckEntry {
    std::string name;
    std::function<double()> run;  // returns max relative error
};

// Named finite-difference checks covering every differentiable operation and
// the composite model graphs. Used by the gradcheck CLI command and the
// acceptance suite.
std::vector<GradCheckEntry> gradcheck_registry(std::uint64_t seed = 7);

}  // namespace cor
