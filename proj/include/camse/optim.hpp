#pragma once

#include <cstdint>
#include <vector>

#include "camse/nn.hpp"
#include "camse/tensor.hpp"

namespace camse {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double decay = 0.95;  // per-epoch multiplier on the base lr
};

// Adam with bias correction. Effective learning rate is lr * decay^epoch;
// the epoch is advanced by the training loop.
class Adam {
  public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    void set_epoch(int epoch) { epoch_ = epoch; }
    double effective_lr() const;
    std::int64_t steps() const { return t_; }

    // Applies one update from the accumulated grads. The parameter set is
    // latched on the first step; reusing the state with a different set is
    // an error.
    void step(ParamStore& params);

  private:
    AdamConfig cfg_;
    int epoch_ = 0;
    std::int64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace camse
