#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ktuplet/numeric.hpp"
#include "ktuplet/rng.hpp"

namespace ktuplet {

enum class Activation { kIdentity, kRelu, kSigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully-connected feed-forward network. Layer l maps dims[l] -> dims[l+1]
// as y = x * W_l + b_l followed by activations[l]; weights are row-major
// (n_in x n_out).
struct FeedForwardNet {
  std::vector<std::size_t> layer_dims;
  std::vector<Matrix> weights;
  std::vector<Vec> biases;
  std::vector<Activation> activations;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t num_parameters() const;

  bool operator==(const FeedForwardNet& other) const = default;
};

// Weights uniform in +-sqrt(6/(n_in+n_out)), biases zero.
FeedForwardNet make_net(const std::vector<std::size_t>& layer_dims,
                        const std::vector<Activation>& activations, Rng& rng);

// Per-layer post-activation outputs retained for backprop;
// activations[0] is the input batch.
struct ForwardCache {
  std::vector<Matrix> activations;
};

Matrix net_forward(const FeedForwardNet& net, const Matrix& x,
                   ForwardCache* cache = nullptr);

// Gradients shaped like the parameters they belong to.
struct NetGradients {
  std::vector<Matrix> weights;
  std::vector<Vec> biases;
};

NetGradients make_zero_gradients(const FeedForwardNet& net);
void accumulate(NetGradients& into, const NetGradients& from);
void scale(NetGradients& grads, double factor);
bool all_finite(const NetGradients& grads);

// Backprop of upstream = dL/d(output) through the cached forward pass.
// When input_grad is non-null it receives dL/d(input).
NetGradients net_backward(const FeedForwardNet& net, const ForwardCache& cache,
                          const Matrix& upstream, Matrix* input_grad = nullptr);

}  // namespace ktuplet
