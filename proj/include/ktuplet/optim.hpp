#pragma once

#include <cstdint>

#include "ktuplet/mlp.hpp"

namespace ktuplet {

struct AdamParams {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates, shaped like the parameters they track.
struct AdamState {
  NetGradients first_moment;
  NetGradients second_moment;
  std::int64_t step_count = 0;
};

AdamState make_adam_state(const FeedForwardNet& net);

// Bias-corrected Adam update applied in place. Throws OptimizerError on a
// non-finite gradient.
void adam_step(FeedForwardNet& net, const NetGradients& grads, AdamState& state,
               const AdamParams& params);

// base_lr * factor^floor(epoch / decay_every)
double lr_schedule(double base_lr, std::size_t epoch, std::size_t decay_every,
                   double factor);

}  // namespace ktuplet
