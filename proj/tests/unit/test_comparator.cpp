#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "ktuplet/comparator.hpp"
#include "ktuplet/dataset.hpp"
#include "ktuplet/errors.hpp"
#include "ktuplet/losses.hpp"
#include "ktuplet/rng.hpp"

using namespace ktuplet;

namespace {

Vec random_unit(std::size_t d, Rng& rng) {
  Vec v(d);
  for (auto& x : v) x = rng.normal();
  return l2_normalize(v);
}

// Hand-rolled scorer for a comparator of shape [2d, h, 8, 1]: matrix
// multiplies, rectifiers and the final sigmoid, independent of the
// library forward path.
double score_oracle(const Comparator& c, const Vec& f_q, const Vec& f_s) {
  Vec a;
  a.insert(a.end(), f_q.begin(), f_q.end());
  a.insert(a.end(), f_s.begin(), f_s.end());
  for (std::size_t l = 0; l < c.net.num_layers(); ++l) {
    const Matrix& w = c.net.weights[l];
    Vec z(w.cols, 0.0);
    for (std::size_t j = 0; j < w.cols; ++j) {
      z[j] = c.net.biases[l][j];
      for (std::size_t k = 0; k < w.rows; ++k) z[j] += a[k] * w.at(k, j);
    }
    if (l + 1 < c.net.num_layers()) {
      for (auto& v : z) v = std::max(0.0, v);
    } else {
      for (auto& v : z) v = 1.0 / (1.0 + std::exp(-v));
    }
    a = std::move(z);
  }
  return a[0];
}

}  // namespace

TEST_CASE("score stays strictly inside (0,1)") {
  Rng rng(201);
  const Comparator c = make_comparator(4, 6, rng);
  Rng data_rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec q = random_unit(4, data_rng);
    const Vec s = random_unit(4, data_rng);
    const double v = score(c, q, s);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK_THROWS_AS(score(c, Vec{1.0, 0.0}, random_unit(4, data_rng)),
                  DimensionError);
}

TEST_CASE("score matches the hand-rolled forward oracle") {
  Rng rng(203);
  const Comparator c = make_comparator(2, 3, rng);
  Rng data_rng(204);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec q = random_unit(2, data_rng);
    const Vec s = random_unit(2, data_rng);
    CHECK(std::abs(score(c, q, s) - score_oracle(c, q, s)) <= 1e-10);
  }
}

TEST_CASE("argument order matters: query comes first") {
  Rng rng(205);
  const Comparator c = make_comparator(3, 5, rng);
  Rng data_rng(206);
  bool any_differ = false;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec q = random_unit(3, data_rng);
    const Vec s = random_unit(3, data_rng);
    if (score(c, q, s) != score(c, s, q)) any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("class_feature") {
  SUBCASE("singleton is the embedding itself") {
    const Vec e{0.6, 0.8};
    CHECK(class_feature({e}) == e);
  }
  SUBCASE("two identical unit vectors sum to twice the vector") {
    const Vec e{0.6, 0.8};
    const Vec f = class_feature({e, e});
    CHECK(f == Vec{1.2, 1.6});
  }
  SUBCASE("matches element-wise loop sum") {
    Rng rng(207);
    std::vector<Vec> shots;
    for (int i = 0; i < 5; ++i) shots.push_back(random_unit(6, rng));
    const Vec f = class_feature(shots);
    for (std::size_t j = 0; j < 6; ++j) {
      double expected = 0.0;
      for (const auto& s : shots) expected += s[j];
      CHECK(std::abs(f[j] - expected) <= 1e-12);
    }
  }
  SUBCASE("permutation invariant, exactly") {
    Rng rng(208);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vec> shots;
      for (int i = 0; i < 5; ++i) shots.push_back(random_unit(3, rng));
      const Vec before = class_feature(shots);
      rng.shuffle(shots);
      CHECK(class_feature(shots) == before);
    }
  }
  SUBCASE("renormalize flag returns a unit vector") {
    Rng rng(209);
    std::vector<Vec> shots;
    for (int i = 0; i < 3; ++i) shots.push_back(random_unit(4, rng));
    const Vec f = class_feature(shots, true);
    CHECK(std::abs(l2_norm(f) - 1.0) <= 1e-9);
  }
  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(class_feature({}), DimensionError);
  }
}

TEST_CASE("comparator gradients match finite differences") {
  Rng rng(210);
  Comparator c = make_comparator(3, 4, rng);
  Rng data_rng(211);
  const Vec q = random_unit(3, data_rng);
  const Vec s = random_unit(3, data_rng);
  const double target = 1.0;

  // Objective: (score - target)^2 through the full comparator.
  auto objective = [&] {
    const double v = score(c, q, s);
    return (v - target) * (v - target);
  };

  Matrix pair(1, 6);
  std::copy(q.begin(), q.end(), pair.row(0).begin());
  std::copy(s.begin(), s.end(), pair.row(0).begin() + 3);
  ForwardCache cache;
  const Matrix out = net_forward(c.net, pair, &cache);
  Matrix upstream(1, 1);
  upstream.at(0, 0) = 2.0 * (out.at(0, 0) - target);
  const NetGradients g = net_backward(c.net, cache, upstream);

  const double h = 1e-5;
  for (std::size_t l = 0; l < c.net.num_layers(); ++l) {
    for (std::size_t idx = 0; idx < c.net.weights[l].values.size(); ++idx) {
      const double saved = c.net.weights[l].values[idx];
      c.net.weights[l].values[idx] = saved + h;
      const double up = objective();
      c.net.weights[l].values[idx] = saved - h;
      const double down = objective();
      c.net.weights[l].values[idx] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = g.weights[l].values[idx];
      const double denom = std::max({1.0, std::abs(fd), std::abs(analytic)});
      CHECK(std::abs(fd - analytic) / denom < 1e-4);
    }
    for (std::size_t idx = 0; idx < c.net.biases[l].size(); ++idx) {
      const double saved = c.net.biases[l][idx];
      c.net.biases[l][idx] = saved + h;
      const double up = objective();
      c.net.biases[l][idx] = saved - h;
      const double down = objective();
      c.net.biases[l][idx] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = g.biases[l][idx];
      const double denom = std::max({1.0, std::abs(fd), std::abs(analytic)});
      CHECK(std::abs(fd - analytic) / denom < 1e-4);
    }
  }
}

TEST_CASE("training lowers the similarity MSE and freezes the embedding") {
  const LabeledDataset ds = synth_gaussian(6, 12, 8, 0.1, 212);
  Rng init_rng(213);
  EmbeddingModel embedding = make_embedding_model({8, 16, 8}, init_rng);
  const EmbeddingModel frozen_copy = embedding;

  Rng cmp_rng(214);
  Comparator c = make_comparator(8, 16, cmp_rng);

  ComparatorTrainConfig cfg;
  cfg.epochs = 50;
  cfg.episodes_per_batch = 2;
  cfg.batches_per_epoch = 4;
  cfg.way = 3;
  cfg.shot = 1;
  cfg.n_query = 5;
  Rng train_rng(215);
  const ComparatorTrainTrace trace =
      train_comparator(c, embedding, ds, cfg, train_rng);
  REQUIRE(trace.epoch_loss.size() == 50);
  CHECK(trace.epoch_loss.back() < trace.epoch_loss.front());
  CHECK(embedding == frozen_copy);  // bit-identical without joint_finetune
}

TEST_CASE("joint fine-tuning updates the embedding when enabled") {
  const LabeledDataset ds = synth_gaussian(4, 10, 6, 0.15, 216);
  Rng init_rng(217);
  EmbeddingModel embedding = make_embedding_model({6, 12, 6}, init_rng);
  const EmbeddingModel before = embedding;
  Rng cmp_rng(218);
  Comparator c = make_comparator(6, 8, cmp_rng);

  ComparatorTrainConfig cfg;
  cfg.epochs = 3;
  cfg.episodes_per_batch = 2;
  cfg.batches_per_epoch = 2;
  cfg.way = 3;
  cfg.shot = 2;
  cfg.n_query = 3;
  cfg.joint_finetune = true;
  cfg.renorm_class_feature = true;
  Rng train_rng(219);
  train_comparator(c, embedding, ds, cfg, train_rng);
  CHECK(embedding != before);
}

TEST_CASE("comparator training is deterministic") {
  const LabeledDataset ds = synth_gaussian(4, 10, 5, 0.2, 220);
  auto run = [&] {
    Rng init_rng(221);
    EmbeddingModel embedding = make_embedding_model({5, 8, 4}, init_rng);
    Rng cmp_rng(222);
    Comparator c = make_comparator(4, 8, cmp_rng);
    ComparatorTrainConfig cfg;
    cfg.epochs = 5;
    cfg.episodes_per_batch = 2;
    cfg.batches_per_epoch = 3;
    cfg.way = 3;
    cfg.shot = 1;
    cfg.n_query = 4;
    Rng train_rng(223);
    const auto trace = train_comparator(c, embedding, ds, cfg, train_rng);
    return std::make_pair(c, trace.epoch_loss);
  };
  const auto [c_a, trace_a] = run();
  const auto [c_b, trace_b] = run();
  CHECK(c_a == c_b);
  CHECK(trace_a == trace_b);
}

TEST_CASE("degenerate configs are rejected") {
  const LabeledDataset ds = synth_gaussian(4, 10, 5, 0.2, 224);
  Rng rng(225);
  EmbeddingModel embedding = make_embedding_model({5, 4}, rng);
  Comparator c = make_comparator(4, 8, rng);
  ComparatorTrainConfig cfg;
  cfg.episodes_per_batch = 0;
  Rng train_rng(226);
  CHECK_THROWS_AS(train_comparator(c, embedding, ds, cfg, train_rng),
                  ConfigError);
}

TEST_CASE("comparator checkpoint round-trips exactly") {
  Rng rng(227);
  const Comparator c = make_comparator(5, 12, rng);
  const auto path =
      std::filesystem::temp_directory_path() / "ktuplet_cmp_ckpt.json";
  save_comparator(c, path.string());
  const Comparator back = load_comparator(path.string());
  std::filesystem::remove(path);
  CHECK(back == c);

  SUBCASE("embedding checkpoints are rejected") {
    Rng rng2(228);
    const EmbeddingModel m = make_embedding_model({3, 2}, rng2);
    CHECK_THROWS_AS(comparator_from_json(embedding_to_json(m)), ParseError);
  }
}
