#include "ktuplet/sampler.hpp"

#include <string>

#include "ktuplet/errors.hpp"

namespace ktuplet {

TupletBatch sample_tuplets(const LabeledDataset& ds, std::size_t batch_size,
                           std::size_t k_neg, Rng& rng) {
  if (k_neg < 1) throw ConfigError("sample_tuplets: k_neg must be >= 1");
  if (batch_size < 1) throw ConfigError("sample_tuplets: batch size must be >= 1");
  if (ds.num_classes() < 2) {
    throw SamplingError("sample_tuplets: dataset needs at least 2 classes");
  }

  TupletBatch batch;
  batch.tuplets.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    Tuplet t;
    t.anchor = rng.index(ds.size());
    const int anchor_label = ds.labels()[t.anchor];

    const auto& class_rows = ds.rows_of_class(anchor_label);
    if (class_rows.size() < 2) {
      throw SamplingError("sample_tuplets: class " +
                          std::to_string(anchor_label) +
                          " has fewer than 2 samples, no positive exists");
    }
    // Uniform over the anchor's class excluding the anchor itself: draw
    // from the other |class|-1 rows and skip past the anchor's slot.
    std::size_t pos_rank = rng.index(class_rows.size() - 1);
    std::size_t anchor_rank = 0;
    while (class_rows[anchor_rank] != t.anchor) ++anchor_rank;
    if (pos_rank >= anchor_rank) ++pos_rank;
    t.positive = class_rows[pos_rank];

    const std::size_t out_of_class = ds.size() - class_rows.size();
    if (out_of_class == 0) {
      throw SamplingError("sample_tuplets: no sample outside class " +
                          std::to_string(anchor_label));
    }
    t.negatives.reserve(k_neg);
    for (std::size_t i = 0; i < k_neg; ++i) {
      // Rank among out-of-class rows; count in-class rows preceding it to
      // map back to a dataset row without rejection.
      std::size_t rank = rng.index(out_of_class);
      std::size_t row = rank;
      for (std::size_t in_class_row : class_rows) {
        if (in_class_row <= row) ++row;
        else break;
      }
      t.negatives.push_back(row);
    }
    batch.tuplets.push_back(std::move(t));
  }
  return batch;
}

Episode sample_episode(const LabeledDataset& ds, std::size_t way,
                       std::size_t shot, std::size_t n_query, Rng& rng) {
  if (way < 1 || shot < 1 || n_query < 1) {
    throw ConfigError("sample_episode: way, shot and n_query must be >= 1");
  }
  if (ds.num_classes() < way) {
    throw SamplingError("sample_episode: dataset has " +
                        std::to_string(ds.num_classes()) +
                        " classes, need " + std::to_string(way));
  }

  const std::vector<int> all_labels = ds.class_labels();
  const auto chosen = rng.sample_without_replacement(all_labels.size(), way);

  Episode ep;
  ep.way = way;
  ep.shot = shot;
  ep.support.reserve(way * shot);
  ep.query.reserve(way * n_query);
  for (std::size_t rank : chosen) {
    const int label = all_labels[rank];
    const auto& rows = ds.rows_of_class(label);
    if (rows.size() < shot + n_query) {
      throw SamplingError("sample_episode: class " + std::to_string(label) +
                          " has " + std::to_string(rows.size()) +
                          " samples, need " + std::to_string(shot + n_query));
    }
    const auto picks = rng.sample_without_replacement(rows.size(), shot + n_query);
    for (std::size_t i = 0; i < shot; ++i) {
      ep.support.emplace_back(rows[picks[i]], label);
    }
    for (std::size_t i = shot; i < shot + n_query; ++i) {
      ep.query.emplace_back(rows[picks[i]], label);
    }
  }
  return ep;
}

std::vector<Episode> batch_episodes(const LabeledDataset& ds,
                                    std::size_t count, std::size_t way,
                                    std::size_t shot, std::size_t n_query,
                                    Rng& rng) {
  std::vector<Episode> episodes;
  episodes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    episodes.push_back(sample_episode(ds, way, shot, n_query, rng));
  }
  return episodes;
}

}  // namespace ktuplet
