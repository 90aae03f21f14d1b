#include "ktuplet/optim.hpp"

#include <cmath>

#include "ktuplet/errors.hpp"

namespace ktuplet {

AdamState make_adam_state(const FeedForwardNet& net) {
  AdamState state;
  state.first_moment = make_zero_gradients(net);
  state.second_moment = make_zero_gradients(net);
  return state;
}

namespace {

void adam_update_array(std::span<double> params, std::span<const double> grads,
                       std::span<double> m, std::span<double> v,
                       const AdamParams& p, double m_corr, double v_corr) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g;
    v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g * g;
    const double m_hat = m[i] / m_corr;
    const double v_hat = v[i] / v_corr;
    params[i] -= p.lr * m_hat / (std::sqrt(v_hat) + p.epsilon);
  }
}

}  // namespace

void adam_step(FeedForwardNet& net, const NetGradients& grads, AdamState& state,
               const AdamParams& params) {
  if (!all_finite(grads)) {
    throw OptimizerError("adam_step: non-finite gradient at step " +
                         std::to_string(state.step_count + 1));
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double m_corr = 1.0 - std::pow(params.beta1, t);
  const double v_corr = 1.0 - std::pow(params.beta2, t);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    adam_update_array(net.weights[l].values, grads.weights[l].values,
                      state.first_moment.weights[l].values,
                      state.second_moment.weights[l].values, params, m_corr,
                      v_corr);
    adam_update_array(net.biases[l], grads.biases[l],
                      state.first_moment.biases[l],
                      state.second_moment.biases[l], params, m_corr, v_corr);
  }
}

double lr_schedule(double base_lr, std::size_t epoch, std::size_t decay_every,
                   double factor) {
  if (decay_every < 1) throw ConfigError("lr_schedule: decay_every must be >= 1");
  if (!(factor > 0.0) || factor > 1.0) {
    throw ConfigError("lr_schedule: factor must be in (0, 1]");
  }
  const std::size_t steps = epoch / decay_every;
  return base_lr * std::pow(factor, static_cast<double>(steps));
}

}  // namespace ktuplet
