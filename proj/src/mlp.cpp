#include "ktuplet/mlp.hpp"

#include <cmath>

#include "ktuplet/errors.hpp"

namespace ktuplet {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  throw ConfigError("activation_name: unknown tag");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("activation_from_name: unknown activation '" + name + "'");
}

std::size_t FeedForwardNet::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].values.size() + biases[l].size();
  }
  return n;
}

FeedForwardNet make_net(const std::vector<std::size_t>& layer_dims,
                        const std::vector<Activation>& activations, Rng& rng) {
  if (layer_dims.size() < 2) {
    throw ConfigError("make_net: need at least input and output dims");
  }
  if (activations.size() != layer_dims.size() - 1) {
    throw ConfigError("make_net: one activation per layer required");
  }
  for (std::size_t d : layer_dims) {
    if (d < 1) throw ConfigError("make_net: layer dims must be >= 1");
  }
  FeedForwardNet net;
  net.layer_dims = layer_dims;
  net.activations = activations;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t n_in = layer_dims[l];
    const std::size_t n_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    Matrix w(n_in, n_out);
    for (auto& v : w.values) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(n_out, 0.0);
  }
  return net;
}

namespace {

void apply_activation(Activation act, Matrix& m) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      for (auto& v : m.values) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::kSigmoid:
      for (auto& v : m.values) v = 1.0 / (1.0 + std::exp(-v));
      return;
  }
}

// Derivative expressed through the post-activation value. ReLU at exactly
// zero uses subgradient 0, matching the hinge convention elsewhere.
double activation_deriv(Activation act, double post) {
  switch (act) {
    case Activation::kIdentity: return 1.0;
    case Activation::kRelu: return post > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid: return post * (1.0 - post);
  }
  return 0.0;
}

}  // namespace

Matrix net_forward(const FeedForwardNet& net, const Matrix& x,
                   ForwardCache* cache) {
  if (x.cols != net.input_dim()) {
    throw DimensionError("net_forward: input has " + std::to_string(x.cols) +
                         " cols, net expects " +
                         std::to_string(net.input_dim()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Matrix a = x;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Matrix& w = net.weights[l];
    const Vec& b = net.biases[l];
    Matrix z(a.rows, w.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
      auto in_row = a.row(i);
      auto out_row = z.row(i);
      for (std::size_t j = 0; j < w.cols; ++j) out_row[j] = b[j];
      for (std::size_t k = 0; k < w.rows; ++k) {
        const double in_k = in_row[k];
        auto w_row = w.row(k);
        for (std::size_t j = 0; j < w.cols; ++j) out_row[j] += in_k * w_row[j];
      }
    }
    apply_activation(net.activations[l], z);
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

NetGradients make_zero_gradients(const FeedForwardNet& net) {
  NetGradients g;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    g.weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
    g.biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return g;
}

void accumulate(NetGradients& into, const NetGradients& from) {
  for (std::size_t l = 0; l < into.weights.size(); ++l) {
    for (std::size_t i = 0; i < into.weights[l].values.size(); ++i) {
      into.weights[l].values[i] += from.weights[l].values[i];
    }
    for (std::size_t i = 0; i < into.biases[l].size(); ++i) {
      into.biases[l][i] += from.biases[l][i];
    }
  }
}

void scale(NetGradients& grads, double factor) {
  for (auto& w : grads.weights) {
    for (auto& v : w.values) v *= factor;
  }
  for (auto& b : grads.biases) {
    for (auto& v : b) v *= factor;
  }
}

bool all_finite(const NetGradients& grads) {
  for (const auto& w : grads.weights) {
    if (!all_finite(w)) return false;
  }
  for (const auto& b : grads.biases) {
    if (!all_finite(std::span<const double>(b))) return false;
  }
  return true;
}

NetGradients net_backward(const FeedForwardNet& net, const ForwardCache& cache,
                          const Matrix& upstream, Matrix* input_grad) {
  const std::size_t layers = net.num_layers();
  if (cache.activations.size() != layers + 1) {
    throw DimensionError("net_backward: cache does not match network depth");
  }
  const Matrix& output = cache.activations.back();
  if (upstream.rows != output.rows || upstream.cols != output.cols) {
    throw DimensionError("net_backward: upstream gradient shape mismatch");
  }

  NetGradients grads = make_zero_gradients(net);
  Matrix g = upstream;  // dL/d(post-activation of current layer)
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& post = cache.activations[l + 1];
    const Matrix& input = cache.activations[l];
    // delta = g (.) act'(post)
    Matrix delta(g.rows, g.cols);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      delta.values[i] =
          g.values[i] * activation_deriv(net.activations[l], post.values[i]);
    }
    // dW = input^T delta, db = column sums of delta
    Matrix& dw = grads.weights[l];
    Vec& db = grads.biases[l];
    for (std::size_t i = 0; i < delta.rows; ++i) {
      auto in_row = input.row(i);
      auto d_row = delta.row(i);
      for (std::size_t j = 0; j < delta.cols; ++j) db[j] += d_row[j];
      for (std::size_t k = 0; k < input.cols; ++k) {
        const double in_k = in_row[k];
        auto dw_row = dw.row(k);
        for (std::size_t j = 0; j < delta.cols; ++j) {
          dw_row[j] += in_k * d_row[j];
        }
      }
    }
    if (l > 0 || input_grad) {
      // g_prev = delta W^T
      const Matrix& w = net.weights[l];
      Matrix g_prev(delta.rows, w.rows);
      for (std::size_t i = 0; i < delta.rows; ++i) {
        auto d_row = delta.row(i);
        auto out_row = g_prev.row(i);
        for (std::size_t k = 0; k < w.rows; ++k) {
          auto w_row = w.row(k);
          double sum = 0.0;
          for (std::size_t j = 0; j < w.cols; ++j) sum += d_row[j] * w_row[j];
          out_row[k] = sum;
        }
      }
      g = std::move(g_prev);
    }
  }
  if (input_grad) *input_grad = std::move(g);
  return grads;
}

}  // namespace ktuplet
