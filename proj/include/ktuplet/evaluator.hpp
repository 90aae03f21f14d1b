#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ktuplet/comparator.hpp"
#include "ktuplet/dataset.hpp"
#include "ktuplet/embedding.hpp"
#include "ktuplet/numeric.hpp"

namespace ktuplet {

struct SupportEntry {
  Vec feature;
  int label = 0;
};

// Label of the support entry nearest to the query in squared Euclidean
// distance; ties go to the lowest label value.
int nn_classify(std::span<const double> query,
                const std::vector<SupportEntry>& support);

// Label of the class feature with the highest comparator score; ties go
// to the lowest label value.
int similarity_classify(const Comparator& c, std::span<const double> query,
                        const std::vector<SupportEntry>& class_features);

enum class ClassifierKind { kEuclid, kSimilarity };

struct EvalConfig {
  std::size_t way = 5;
  std::size_t shot = 1;
  std::size_t n_query = 15;
  std::size_t episodes = 600;
  bool renorm_class_feature = false;
  ClassifierKind classifier = ClassifierKind::kEuclid;
};

struct EvalReport {
  double mean_accuracy = 0.0;
  double ci95_halfwidth = 0.0;
  std::size_t num_episodes = 0;
  std::vector<double> per_episode;
  EvalConfig config;
  std::uint64_t seed = 0;
};

// 1.96 * unbiased sample std / sqrt(n); 0 for n == 1.
double ci95(const std::vector<double>& accuracies);

// Episodic evaluation with a frozen embedding. Multi-shot support sets are
// reduced to summed class features. The comparator is required for (and
// only used by) the similarity classifier.
EvalReport evaluate(const EmbeddingModel& model, const Comparator* comparator,
                    const LabeledDataset& ds, const EvalConfig& config,
                    std::uint64_t seed);

// Report as a single JSON document with keys mean_accuracy, ci95,
// num_episodes, per_episode, config, seed.
std::string report_to_json(const EvalReport& report);

}  // namespace ktuplet
