#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ktuplet/dataset.hpp"
#include "ktuplet/embedding.hpp"
#include "ktuplet/mlp.hpp"
#include "ktuplet/numeric.hpp"
#include "ktuplet/rng.hpp"

namespace ktuplet {

// Learned non-linear distance metric: scores a concatenated
// (query, support) embedding pair through rectifier hidden layers and an
// 8 -> 1 sigmoid head. Query always comes first in the concatenation.
struct Comparator {
  FeedForwardNet net;  // [2d, hidden, 8, 1]

  std::size_t embed_dim() const { return net.input_dim() / 2; }

  bool operator==(const Comparator& other) const = default;
};

Comparator make_comparator(std::size_t embed_dim, std::size_t hidden, Rng& rng);

// Similarity in (0, 1) for the pair [f_q || f_s].
double score(const Comparator& c, std::span<const double> f_q,
             std::span<const double> f_s);

// One score per row of `pairs` (each row is a concatenated pair).
Vec score_pairs(const Comparator& c, const Matrix& pairs);

// Element-wise sum of a class's support embeddings, the multi-shot class
// representative. With renormalize the sum is scaled back to unit norm.
Vec class_feature(const std::vector<Vec>& embeddings, bool renormalize = false);

struct ComparatorTrainConfig {
  std::size_t epochs = 50;
  std::size_t episodes_per_batch = 4;
  std::size_t batches_per_epoch = 10;
  std::size_t way = 5;
  std::size_t shot = 1;
  std::size_t n_query = 15;
  double base_lr = 0.001;
  std::size_t decay_every = 40;
  double decay_factor = 0.5;
  bool renorm_class_feature = false;
  // When set, comparator training also backpropagates into the embedding
  // and updates it; off by default (embedding stays frozen).
  bool joint_finetune = false;
};

struct ComparatorTrainTrace {
  std::vector<double> epoch_loss;  // mean MSE per epoch
};

// Episode-based training: each mini-batch stacks several episodes, scores
// every (query, class-feature) pair and regresses to 1/0 targets with the
// MSE loss. The embedding is only modified when joint_finetune is set.
ComparatorTrainTrace train_comparator(Comparator& c, EmbeddingModel& embedding,
                                      const LabeledDataset& ds,
                                      const ComparatorTrainConfig& config,
                                      Rng& rng);

// Checkpoint format mirrors the embedding checkpoint.
void save_comparator(const Comparator& c, const std::string& path);
Comparator load_comparator(const std::string& path);
std::string comparator_to_json(const Comparator& c);
Comparator comparator_from_json(const std::string& text);

}  // namespace ktuplet
