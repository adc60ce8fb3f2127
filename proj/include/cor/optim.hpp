#pragma once

#include <vector>

#include "cor/tensor.hpp"

namespace cor {

// Decoupled weight-decay Adam. One state slot per parameter, matched by
// position in the parameter list handed to step().
class AdamW {
  public:
    struct Config {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.01;
    };

    AdamW(std::vector<TensorPtr> params, Config config);

    // Applies one update from the gradients currently stored on the
    // parameters; missing gradients count as zero. Increments the step
    // counter.
    void step();
    void zero_grad();

    long step_count() const { return step_count_; }
    const Config& config() const { return config_; }

  private:
    std::vector<TensorPtr> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    Config config_;
    long step_count_ = 0;
};

}  // namespace cor
