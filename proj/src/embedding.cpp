#include "ktuplet/embedding.hpp"

#include <cassert>
#include <cmath>

#include "ktuplet/errors.hpp"
#include "ktuplet/sampler.hpp"
#include "ktuplet/serialize.hpp"

namespace ktuplet {

EmbeddingModel make_embedding_model(const std::vector<std::size_t>& layer_dims,
                                    Rng& rng) {
  std::vector<Activation> acts(layer_dims.size() - 1, Activation::kRelu);
  acts.back() = Activation::kIdentity;  // linear output before normalization
  return EmbeddingModel{make_net(layer_dims, acts, rng)};
}

namespace {

// Normalizes rows in place, returning the pre-normalization norms.
Vec normalize_rows(Matrix& m) {
  Vec norms(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto row = m.row(i);
    const double norm = l2_norm(row);
    if (!(norm > kNormEpsilon)) {
      throw DegenerateVectorError(
          "embed: pre-normalization output of row " + std::to_string(i) +
          " has norm " + std::to_string(norm));
    }
    for (auto& v : row) v /= norm;
    norms[i] = norm;
    assert(std::abs(l2_norm(row) - 1.0) <= 1e-9);
  }
  return norms;
}

}  // namespace

Matrix embed(const EmbeddingModel& model, const Matrix& x) {
  Matrix out = net_forward(model.net, x);
  normalize_rows(out);
  return out;
}

Matrix embed_cached(const EmbeddingModel& model, const Matrix& x,
                    EmbedCache& cache) {
  Matrix out = net_forward(model.net, x, &cache.net_cache);
  cache.norms = normalize_rows(out);
  cache.output = out;
  return out;
}

NetGradients embed_backward(const EmbeddingModel& model,
                            const EmbedCache& cache, const Matrix& upstream) {
  const Matrix& f = cache.output;
  if (upstream.rows != f.rows || upstream.cols != f.cols) {
    throw DimensionError("embed_backward: upstream shape mismatch");
  }
  // dL/dz = (g - f (f . g)) / ||z|| per row, the Jacobian of z -> z/||z||.
  Matrix pre_norm_grad(f.rows, f.cols);
  for (std::size_t i = 0; i < f.rows; ++i) {
    auto f_row = f.row(i);
    auto g_row = upstream.row(i);
    auto out_row = pre_norm_grad.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < f.cols; ++j) dot += f_row[j] * g_row[j];
    const double inv_norm = 1.0 / cache.norms[i];
    for (std::size_t j = 0; j < f.cols; ++j) {
      out_row[j] = (g_row[j] - f_row[j] * dot) * inv_norm;
    }
  }
  return net_backward(model.net, cache.net_cache, pre_norm_grad);
}

namespace {

void validate_train_config(const EmbeddingTrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train_embedding: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train_embedding: batch_size must be >= 1");
  if (cfg.k_neg < 1) throw ConfigError("train_embedding: k_neg must be >= 1");
  if (!(cfg.margin > 0.0)) throw ConfigError("train_embedding: margin must be > 0");
  if (!(cfg.base_lr > 0.0)) throw ConfigError("train_embedding: base_lr must be > 0");
}

}  // namespace

EmbeddingTrainTrace train_embedding(EmbeddingModel& model,
                                    const LabeledDataset& ds,
                                    const EmbeddingTrainConfig& cfg, Rng& rng) {
  validate_train_config(cfg);
  if (ds.input_dim() != model.input_dim()) {
    throw DimensionError("train_embedding: dataset dim " +
                         std::to_string(ds.input_dim()) + " != model input " +
                         std::to_string(model.input_dim()));
  }
  const std::size_t batches =
      cfg.batches_per_epoch > 0
          ? cfg.batches_per_epoch
          : (ds.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t slots = 2 + cfg.k_neg;  // anchor, positive, negatives
  const std::size_t d = model.embed_dim();

  AdamParams adam;
  adam.lr = cfg.base_lr;
  AdamState state = make_adam_state(model.net);

  EmbeddingTrainTrace trace;
  trace.epoch_loss.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.lr = lr_schedule(cfg.base_lr, epoch, cfg.decay_every, cfg.decay_factor);
    const bool semi_hard = epoch >= cfg.switch_epoch;
    double epoch_loss = 0.0;
    for (std::size_t batch = 0; batch < batches; ++batch) {
      const TupletBatch tb =
          sample_tuplets(ds, cfg.batch_size, cfg.k_neg, rng);
      const std::size_t b_count = tb.tuplets.size();

      // One input row per tuplet slot; duplicate dataset rows embed twice,
      // which keeps gradient routing trivial.
      Matrix x(b_count * slots, ds.input_dim());
      for (std::size_t b = 0; b < b_count; ++b) {
        const Tuplet& t = tb.tuplets[b];
        auto copy_row = [&](std::size_t slot, std::size_t ds_row) {
          auto src = ds.features().row(ds_row);
          auto dst = x.row(b * slots + slot);
          std::copy(src.begin(), src.end(), dst.begin());
        };
        copy_row(0, t.anchor);
        copy_row(1, t.positive);
        for (std::size_t i = 0; i < cfg.k_neg; ++i) copy_row(2 + i, t.negatives[i]);
      }

      EmbedCache cache;
      const Matrix f = embed_cached(model, x, cache);
      for (std::size_t i = 0; i < f.rows; ++i) {
        const double dev = std::abs(l2_norm(f.row(i)) - 1.0);
        if (dev > trace.max_unit_norm_deviation) {
          trace.max_unit_norm_deviation = dev;
        }
      }

      double batch_loss = 0.0;
      Matrix upstream(f.rows, d);
      const double inv_b = 1.0 / static_cast<double>(b_count);
      for (std::size_t b = 0; b < b_count; ++b) {
        EmbeddedTuplet et;
        et.anchor = f.row_vec(b * slots);
        et.positive = f.row_vec(b * slots + 1);
        et.negatives.reserve(cfg.k_neg);
        for (std::size_t i = 0; i < cfg.k_neg; ++i) {
          et.negatives.push_back(f.row_vec(b * slots + 2 + i));
        }
        batch_loss += semi_hard
                          ? semi_hard_loss(et, cfg.margin, cfg.semi_hard_mode)
                          : k_tuplet_loss(et, cfg.margin);
        const TupletGrad tg =
            semi_hard ? semi_hard_grad(et, cfg.margin, cfg.semi_hard_mode)
                      : k_tuplet_grad(et, cfg.margin);
        auto write_row = [&](std::size_t slot, const Vec& g) {
          auto dst = upstream.row(b * slots + slot);
          for (std::size_t j = 0; j < d; ++j) dst[j] = g[j] * inv_b;
        };
        write_row(0, tg.anchor);
        write_row(1, tg.positive);
        for (std::size_t i = 0; i < cfg.k_neg; ++i) {
          write_row(2 + i, tg.negatives[i]);
        }
      }
      const NetGradients grads = embed_backward(model, cache, upstream);
      adam_step(model.net, grads, state, adam);
      epoch_loss += batch_loss * inv_b;
    }
    trace.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return trace;
}

namespace {
constexpr const char* kEmbeddingFormat = "ktuplet.embedding";
constexpr int kCheckpointVersion = 1;
}  // namespace

std::string embedding_to_json(const EmbeddingModel& model) {
  nlohmann::json j;
  j["format"] = kEmbeddingFormat;
  j["version"] = kCheckpointVersion;
  j["net"] = net_to_json(model.net);
  return j.dump(2) + "\n";
}

EmbeddingModel embedding_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("embedding checkpoint: ") + e.what());
  }
  if (j.value("format", "") != kEmbeddingFormat) {
    throw ParseError("embedding checkpoint: unexpected format tag");
  }
  if (j.value("version", -1) != kCheckpointVersion) {
    throw ParseError("embedding checkpoint: unsupported version");
  }
  return EmbeddingModel{net_from_json(j.at("net"))};
}

void save_embedding(const EmbeddingModel& model, const std::string& path) {
  write_file_atomic(path, embedding_to_json(model));
}

EmbeddingModel load_embedding(const std::string& path) {
  return embedding_from_json(read_file(path));
}

}  // namespace ktuplet
