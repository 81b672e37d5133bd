#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "skbsem/tensor.hpp"

namespace skbsem {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are lazily shaped from the first
// update; shapes are checked on every step. Non-finite gradients abort the
// run with a diagnostic naming the offending parameter.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<std::pair<std::string, Tensor*>>& params,
              const std::vector<const Tensor*>& grads);

    std::size_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::size_t step_ = 0;
    std::vector<Tensor> first_moment_;
    std::vector<Tensor> second_moment_;
};

}  // namespace skbsem
