#include "ktuplet/comparator.hpp"

#include <algorithm>
#include <cmath>

#include "ktuplet/errors.hpp"
#include "ktuplet/losses.hpp"
#include "ktuplet/optim.hpp"
#include "ktuplet/sampler.hpp"
#include "ktuplet/serialize.hpp"

namespace ktuplet {

Comparator make_comparator(std::size_t embed_dim, std::size_t hidden,
                           Rng& rng) {
  if (embed_dim < 1 || hidden < 1) {
    throw ConfigError("make_comparator: dims must be >= 1");
  }
  const std::vector<std::size_t> dims = {2 * embed_dim, hidden, 8, 1};
  const std::vector<Activation> acts = {Activation::kRelu, Activation::kRelu,
                                        Activation::kSigmoid};
  return Comparator{make_net(dims, acts, rng)};
}

double score(const Comparator& c, std::span<const double> f_q,
             std::span<const double> f_s) {
  const std::size_t d = c.embed_dim();
  if (f_q.size() != d || f_s.size() != d) {
    throw DimensionError("score: inputs must have dimension " +
                         std::to_string(d));
  }
  Matrix pair(1, 2 * d);
  auto row = pair.row(0);
  std::copy(f_q.begin(), f_q.end(), row.begin());
  std::copy(f_s.begin(), f_s.end(), row.begin() + d);
  return net_forward(c.net, pair).at(0, 0);
}

Vec score_pairs(const Comparator& c, const Matrix& pairs) {
  const Matrix out = net_forward(c.net, pairs);
  return out.values;
}

Vec class_feature(const std::vector<Vec>& embeddings, bool renormalize) {
  if (embeddings.empty()) {
    throw DimensionError("class_feature: empty input");
  }
  const std::size_t d = embeddings.front().size();
  for (const auto& e : embeddings) {
    if (e.size() != d) {
      throw DimensionError("class_feature: mixed dimensions");
    }
  }
  // Addends are sorted per coordinate before accumulation, so the sum does
  // not depend on the order the shots arrive in.
  Vec sum(d, 0.0);
  std::vector<double> column(embeddings.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t s = 0; s < embeddings.size(); ++s) {
      column[s] = embeddings[s][j];
    }
    std::sort(column.begin(), column.end());
    double acc = 0.0;
    for (double v : column) acc += v;
    sum[j] = acc;
  }
  if (renormalize) return l2_normalize(sum);
  return sum;
}

namespace {

void validate_train_config(const ComparatorTrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train_comparator: epochs must be >= 1");
  if (cfg.episodes_per_batch < 1) {
    throw ConfigError("train_comparator: episodes_per_batch must be >= 1");
  }
  if (cfg.batches_per_epoch < 1) {
    throw ConfigError("train_comparator: batches_per_epoch must be >= 1");
  }
  if (cfg.way < 1 || cfg.shot < 1 || cfg.n_query < 1) {
    throw ConfigError("train_comparator: way, shot, n_query must be >= 1");
  }
  if (!(cfg.base_lr > 0.0)) {
    throw ConfigError("train_comparator: base_lr must be > 0");
  }
}

// Embedded views of one episode plus the caches needed for fine-tuning.
struct EpisodeForward {
  Matrix support;  // way*shot x d
  Matrix query;    // way*n_query x d
  EmbedCache support_cache;
  EmbedCache query_cache;
  std::vector<int> class_labels;  // way, in sampled order
  Matrix class_feats;             // way x d
  std::vector<double> class_feat_norms;  // pre-renorm sums' norms (renorm only)
};

Matrix gather_rows(const LabeledDataset& ds,
                   const std::vector<std::pair<std::size_t, int>>& entries) {
  Matrix out(entries.size(), ds.input_dim());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto src = ds.features().row(entries[i].first);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

}  // namespace

ComparatorTrainTrace train_comparator(Comparator& c, EmbeddingModel& embedding,
                                      const LabeledDataset& ds,
                                      const ComparatorTrainConfig& cfg,
                                      Rng& rng) {
  validate_train_config(cfg);
  const std::size_t d = embedding.embed_dim();
  if (c.embed_dim() != d) {
    throw DimensionError("train_comparator: comparator expects dim " +
                         std::to_string(c.embed_dim()) + ", embedding emits " +
                         std::to_string(d));
  }

  AdamParams cmp_adam;
  AdamState cmp_state = make_adam_state(c.net);
  AdamParams emb_adam;
  AdamState emb_state = make_adam_state(embedding.net);

  const std::size_t pairs_per_episode = cfg.way * cfg.n_query * cfg.way;
  const std::size_t pairs_per_batch = pairs_per_episode * cfg.episodes_per_batch;

  ComparatorTrainTrace trace;
  trace.epoch_loss.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr =
        lr_schedule(cfg.base_lr, epoch, cfg.decay_every, cfg.decay_factor);
    cmp_adam.lr = lr;
    emb_adam.lr = lr;
    double epoch_loss = 0.0;
    for (std::size_t batch = 0; batch < cfg.batches_per_epoch; ++batch) {
      const auto episodes = batch_episodes(ds, cfg.episodes_per_batch, cfg.way,
                                           cfg.shot, cfg.n_query, rng);

      std::vector<EpisodeForward> fwd(episodes.size());
      Matrix pairs(pairs_per_batch, 2 * d);
      Vec targets(pairs_per_batch);
      std::size_t pair_row = 0;
      for (std::size_t e = 0; e < episodes.size(); ++e) {
        const Episode& ep = episodes[e];
        EpisodeForward& f = fwd[e];
        const Matrix support_x = gather_rows(ds, ep.support);
        const Matrix query_x = gather_rows(ds, ep.query);
        if (cfg.joint_finetune) {
          f.support = embed_cached(embedding, support_x, f.support_cache);
          f.query = embed_cached(embedding, query_x, f.query_cache);
        } else {
          f.support = embed(embedding, support_x);
          f.query = embed(embedding, query_x);
        }

        f.class_feats = Matrix(cfg.way, d);
        f.class_feat_norms.assign(cfg.way, 1.0);
        for (std::size_t cls = 0; cls < cfg.way; ++cls) {
          std::vector<Vec> shots;
          shots.reserve(cfg.shot);
          for (std::size_t s = 0; s < cfg.shot; ++s) {
            shots.push_back(f.support.row_vec(cls * cfg.shot + s));
          }
          Vec feat = class_feature(shots, false);
          if (cfg.renorm_class_feature) {
            f.class_feat_norms[cls] = l2_norm(feat);
            feat = l2_normalize(feat);
          }
          auto dst = f.class_feats.row(cls);
          std::copy(feat.begin(), feat.end(), dst.begin());
          f.class_labels.push_back(ep.support[cls * cfg.shot].second);
        }

        for (std::size_t q = 0; q < ep.query.size(); ++q) {
          auto q_row = f.query.row(q);
          for (std::size_t cls = 0; cls < cfg.way; ++cls, ++pair_row) {
            auto dst = pairs.row(pair_row);
            std::copy(q_row.begin(), q_row.end(), dst.begin());
            auto cf = f.class_feats.row(cls);
            std::copy(cf.begin(), cf.end(), dst.begin() + d);
            targets[pair_row] =
                ep.query[q].second == f.class_labels[cls] ? 1.0 : 0.0;
          }
        }
      }

      ForwardCache cmp_cache;
      const Matrix scores = net_forward(c.net, pairs, &cmp_cache);
      epoch_loss += mse_similarity_loss(scores.values, targets);

      const Vec score_grad = mse_similarity_grad(scores.values, targets);
      Matrix upstream(pairs_per_batch, 1);
      upstream.values = score_grad;

      Matrix pair_input_grad;
      const NetGradients cmp_grads =
          net_backward(c.net, cmp_cache, upstream,
                       cfg.joint_finetune ? &pair_input_grad : nullptr);

      if (cfg.joint_finetune) {
        NetGradients emb_grads = make_zero_gradients(embedding.net);
        std::size_t row = 0;
        for (std::size_t e = 0; e < episodes.size(); ++e) {
          EpisodeForward& f = fwd[e];
          Matrix query_up(f.query.rows, d);
          Matrix feat_up(cfg.way, d);  // grads w.r.t. the class features
          for (std::size_t q = 0; q < f.query.rows; ++q) {
            for (std::size_t cls = 0; cls < cfg.way; ++cls, ++row) {
              auto src = pair_input_grad.row(row);
              auto qu = query_up.row(q);
              auto fu = feat_up.row(cls);
              for (std::size_t j = 0; j < d; ++j) {
                qu[j] += src[j];
                fu[j] += src[d + j];
              }
            }
          }
          // Route class-feature grads back to the shot embeddings: the sum
          // distributes the gradient unchanged; renormalization inserts
          // its Jacobian first.
          Matrix support_up(f.support.rows, d);
          for (std::size_t cls = 0; cls < cfg.way; ++cls) {
            Vec g(feat_up.row(cls).begin(), feat_up.row(cls).end());
            if (cfg.renorm_class_feature) {
              auto cf = f.class_feats.row(cls);
              double dot = 0.0;
              for (std::size_t j = 0; j < d; ++j) dot += cf[j] * g[j];
              const double inv_norm = 1.0 / f.class_feat_norms[cls];
              for (std::size_t j = 0; j < d; ++j) {
                g[j] = (g[j] - cf[j] * dot) * inv_norm;
              }
            }
            for (std::size_t s = 0; s < cfg.shot; ++s) {
              auto dst = support_up.row(cls * cfg.shot + s);
              std::copy(g.begin(), g.end(), dst.begin());
            }
          }
          accumulate(emb_grads,
                     embed_backward(embedding, f.support_cache, support_up));
          accumulate(emb_grads,
                     embed_backward(embedding, f.query_cache, query_up));
        }
        adam_step(embedding.net, emb_grads, emb_state, emb_adam);
      }

      adam_step(c.net, cmp_grads, cmp_state, cmp_adam);
    }
    trace.epoch_loss.push_back(epoch_loss /
                               static_cast<double>(cfg.batches_per_epoch));
  }
  return trace;
}

namespace {
constexpr const char* kComparatorFormat = "ktuplet.comparator";
constexpr int kCheckpointVersion = 1;
}  // namespace

std::string comparator_to_json(const Comparator& c) {
  nlohmann::json j;
  j["format"] = kComparatorFormat;
  j["version"] = kCheckpointVersion;
  j["net"] = net_to_json(c.net);
  return j.dump(2) + "\n";
}

Comparator comparator_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("comparator checkpoint: ") + e.what());
  }
  if (j.value("format", "") != kComparatorFormat) {
    throw ParseError("comparator checkpoint: unexpected format tag");
  }
  if (j.value("version", -1) != kCheckpointVersion) {
    throw ParseError("comparator checkpoint: unsupported version");
  }
  return Comparator{net_from_json(j.at("net"))};
}

void save_comparator(const Comparator& c, const std::string& path) {
  write_file_atomic(path, comparator_to_json(c));
}

Comparator load_comparator(const std::string& path) {
  return comparator_from_json(read_file(path));
}

}  // namespace ktuplet
