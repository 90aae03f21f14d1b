#pragma once

#include <cstddef>
#include <vector>

#include "ktuplet/dataset.hpp"
#include "ktuplet/rng.hpp"

namespace ktuplet {

// Anchor/positive share a class; every negative comes from a different
// class. Negative rows may repeat within one tuplet.
struct Tuplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;
};

struct TupletBatch {
  std::vector<Tuplet> tuplets;
};

// C-way K-shot support set plus query set over the same C classes.
// Entries are (dataset row index, label); support and query rows are
// disjoint.
struct Episode {
  std::size_t way = 0;
  std::size_t shot = 0;
  std::vector<std::pair<std::size_t, int>> support;  // way * shot
  std::vector<std::pair<std::size_t, int>> query;    // way * n_query
};

// B tuplets: anchors uniform over all rows, positive uniform over the
// anchor's class (excluding the anchor), negatives drawn independently and
// uniformly over all out-of-class rows.
TupletBatch sample_tuplets(const LabeledDataset& ds, std::size_t batch_size,
                           std::size_t k_neg, Rng& rng);

Episode sample_episode(const LabeledDataset& ds, std::size_t way,
                       std::size_t shot, std::size_t n_query, Rng& rng);

std::vector<Episode> batch_episodes(const LabeledDataset& ds,
                                    std::size_t count, std::size_t way,
                                    std::size_t shot, std::size_t n_query,
                                    Rng& rng);

}  // namespace ktuplet
