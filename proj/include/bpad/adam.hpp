// Adam optimizer with bias correction, operating on a flat list of
// parameter tensors. Moment accumulators mirror the parameter shapes.
#pragma once

#include <cstdint>
#include <vector>

#include "bpad/tensor.hpp"

namespace bpad {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::uint64_t step = 0;
    std::vector<Tensor2> first_moment;
    std::vector<Tensor2> second_moment;

    static AdamState init(const AdamConfig& cfg,
                          const std::vector<const Tensor2*>& params);
};

// One update of every parameter in place. `params` and `grads` must match
// the shapes the state was initialized with.
void adam_step(const std::vector<Tensor2*>& params,
               const std::vector<const Tensor2*>& grads, AdamState& state);

} // namespace bpad
