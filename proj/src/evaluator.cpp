#include "ktuplet/evaluator.hpp"

#include <cmath>

#include <json.hpp>

#include "ktuplet/errors.hpp"
#include "ktuplet/sampler.hpp"

namespace ktuplet {

int nn_classify(std::span<const double> query,
                const std::vector<SupportEntry>& support) {
  if (support.empty()) throw SamplingError("nn_classify: empty support set");
  double best_dist = 0.0;
  int best_label = 0;
  bool first = true;
  for (const auto& entry : support) {
    const double dist = squared_euclidean(query, entry.feature);
    if (first || dist < best_dist ||
        (dist == best_dist && entry.label < best_label)) {
      best_dist = dist;
      best_label = entry.label;
      first = false;
    }
  }
  return best_label;
}

int similarity_classify(const Comparator& c, std::span<const double> query,
                        const std::vector<SupportEntry>& class_features) {
  if (class_features.empty()) {
    throw SamplingError("similarity_classify: empty support set");
  }
  double best_score = 0.0;
  int best_label = 0;
  bool first = true;
  for (const auto& entry : class_features) {
    const double s = score(c, query, entry.feature);
    if (first || s > best_score ||
        (s == best_score && entry.label < best_label)) {
      best_score = s;
      best_label = entry.label;
      first = false;
    }
  }
  return best_label;
}

double ci95(const std::vector<double>& accuracies) {
  const std::size_t n = accuracies.size();
  if (n == 0) throw ConfigError("ci95: empty input");
  if (n == 1) return 0.0;
  double mean = 0.0;
  for (double a : accuracies) mean += a;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double a : accuracies) {
    const double dev = a - mean;
    ss += dev * dev;
  }
  const double sample_std = std::sqrt(ss / static_cast<double>(n - 1));
  return 1.96 * sample_std / std::sqrt(static_cast<double>(n));
}

EvalReport evaluate(const EmbeddingModel& model, const Comparator* comparator,
                    const LabeledDataset& ds, const EvalConfig& cfg,
                    std::uint64_t seed) {
  if (cfg.episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  if (cfg.classifier == ClassifierKind::kSimilarity && comparator == nullptr) {
    throw ConfigError("evaluate: similarity classifier needs a comparator");
  }

  Rng rng(seed);
  EvalReport report;
  report.config = cfg;
  report.seed = seed;
  report.per_episode.reserve(cfg.episodes);

  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    const Episode ep = sample_episode(ds, cfg.way, cfg.shot, cfg.n_query, rng);

    Matrix support_x(ep.support.size(), ds.input_dim());
    for (std::size_t i = 0; i < ep.support.size(); ++i) {
      auto src = ds.features().row(ep.support[i].first);
      std::copy(src.begin(), src.end(), support_x.row(i).begin());
    }
    Matrix query_x(ep.query.size(), ds.input_dim());
    for (std::size_t i = 0; i < ep.query.size(); ++i) {
      auto src = ds.features().row(ep.query[i].first);
      std::copy(src.begin(), src.end(), query_x.row(i).begin());
    }
    const Matrix support_emb = embed(model, support_x);
    const Matrix query_emb = embed(model, query_x);

    // One summed feature per class; identical to the raw embedding for
    // one-shot episodes.
    std::vector<SupportEntry> class_feats;
    class_feats.reserve(cfg.way);
    for (std::size_t cls = 0; cls < cfg.way; ++cls) {
      std::vector<Vec> shots;
      shots.reserve(cfg.shot);
      for (std::size_t s = 0; s < cfg.shot; ++s) {
        shots.push_back(support_emb.row_vec(cls * cfg.shot + s));
      }
      class_feats.push_back(
          {class_feature(shots, cfg.renorm_class_feature),
           ep.support[cls * cfg.shot].second});
    }

    std::size_t correct = 0;
    for (std::size_t q = 0; q < ep.query.size(); ++q) {
      const int predicted =
          cfg.classifier == ClassifierKind::kEuclid
              ? nn_classify(query_emb.row(q), class_feats)
              : similarity_classify(*comparator, query_emb.row(q), class_feats);
      if (predicted == ep.query[q].second) ++correct;
    }
    report.per_episode.push_back(static_cast<double>(correct) /
                                 static_cast<double>(ep.query.size()));
  }

  double mean = 0.0;
  for (double a : report.per_episode) mean += a;
  report.mean_accuracy = mean / static_cast<double>(report.per_episode.size());
  report.ci95_halfwidth = ci95(report.per_episode);
  report.num_episodes = report.per_episode.size();
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["mean_accuracy"] = report.mean_accuracy;
  j["ci95"] = report.ci95_halfwidth;
  j["num_episodes"] = report.num_episodes;
  j["per_episode"] = report.per_episode;
  j["config"] = {
      {"way", report.config.way},
      {"shot", report.config.shot},
      {"n_query", report.config.n_query},
      {"episodes", report.config.episodes},
      {"renorm_class_feature", report.config.renorm_class_feature},
      {"classifier", report.config.classifier == ClassifierKind::kEuclid
                         ? "euclid"
                         : "similarity"},
  };
  j["seed"] = report.seed;
  return j.dump(2) + "\n";
}

}  // namespace ktuplet
