#include "cor/optim.hpp"

#include <cmath>

namespace cor {

AdamW::AdamW(std::vector<TensorPtr> params, Config config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->data.size(), 0.0);
        v_.emplace_back(p->data.size(), 0.0);
    }
}

void AdamW::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Tensor& p = *params_[k];
        if (p.grad.size() != p.data.size() && !p.grad.empty()) {
            throw DimensionError("adamw_step: gradient shape mismatch");
        }
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double g = p.grad.empty() ? 0.0 : p.grad[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.data[i] -= config_.lr * (mhat / (std::sqrt(vhat) + config_.eps) +
                                       config_.weight_decay * p.data[i]);
        }
    }
}

void AdamW::zero_grad() {
    for (const auto& p : params_) p->zero_grad();
}

}  // namespace cor
