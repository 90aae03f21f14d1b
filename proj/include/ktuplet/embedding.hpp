#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ktuplet/dataset.hpp"
#include "ktuplet/losses.hpp"
#include "ktuplet/mlp.hpp"
#include "ktuplet/numeric.hpp"
#include "ktuplet/optim.hpp"
#include "ktuplet/rng.hpp"

namespace ktuplet {

// Feed-forward embedding f(.; theta): rectifier hidden layers, linear
// output layer, rows L2-normalized to the unit sphere.
struct EmbeddingModel {
  FeedForwardNet net;

  std::size_t input_dim() const { return net.input_dim(); }
  std::size_t embed_dim() const { return net.output_dim(); }

  bool operator==(const EmbeddingModel& other) const = default;
};

EmbeddingModel make_embedding_model(const std::vector<std::size_t>& layer_dims,
                                    Rng& rng);

// Forward state needed to backpropagate through the normalization.
struct EmbedCache {
  ForwardCache net_cache;
  Vec norms;      // per-row pre-normalization L2 norms
  Matrix output;  // unit-norm rows
};

// Embeds each row of x; every output row has unit L2 norm. Throws
// DegenerateVectorError if a pre-normalization row norm falls below
// kNormEpsilon.
Matrix embed(const EmbeddingModel& model, const Matrix& x);
Matrix embed_cached(const EmbeddingModel& model, const Matrix& x,
                    EmbedCache& cache);

// dL/d(theta) for upstream = dL/d(normalized output). Applies the
// normalization Jacobian (I - f f^T)/||z|| per row, then standard
// backprop.
NetGradients embed_backward(const EmbeddingModel& model,
                            const EmbedCache& cache, const Matrix& upstream);

struct EmbeddingTrainConfig {
  std::size_t epochs = 100;
  std::size_t switch_epoch = 80;  // first epoch trained with the semi-hard loss
  std::size_t batch_size = 64;
  std::size_t k_neg = 5;
  double margin = 0.5;
  double base_lr = 0.001;
  std::size_t decay_every = 40;
  double decay_factor = 0.5;
  std::size_t batches_per_epoch = 0;  // 0: ceil(N / batch_size)
  SemiHardMode semi_hard_mode = SemiHardMode::kCorrected;
};

struct EmbeddingTrainTrace {
  std::vector<double> epoch_loss;          // one mean loss per epoch
  double max_unit_norm_deviation = 0.0;    // max |norm - 1| seen in training
};

// Epochs [0, switch_epoch) minimize the K-tuplet loss, the remainder the
// semi-hard loss. Deterministic given (model, ds, config, rng seed).
EmbeddingTrainTrace train_embedding(EmbeddingModel& model,
                                    const LabeledDataset& ds,
                                    const EmbeddingTrainConfig& config,
                                    Rng& rng);

// Versioned JSON checkpoint; load(save(m)) == m exactly.
void save_embedding(const EmbeddingModel& model, const std::string& path);
EmbeddingModel load_embedding(const std::string& path);
std::string embedding_to_json(const EmbeddingModel& model);
EmbeddingModel embedding_from_json(const std::string& text);

}  // namespace ktuplet
