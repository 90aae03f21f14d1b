// Command-line front end: dataset generation, embedding and comparator
// training, episodic evaluation and embedding dumps, all reproducible
// from (config, seeds).

#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ktuplet/comparator.hpp"
#include "ktuplet/dataset.hpp"
#include "ktuplet/embedding.hpp"
#include "ktuplet/errors.hpp"
#include "ktuplet/evaluator.hpp"
#include "ktuplet/serialize.hpp"

namespace {

using nlohmann::json;

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    ktuplet::write_file_atomic(out_path, content);
  }
}

// Keeps only the requested classes when --classes is given.
ktuplet::LabeledDataset load_dataset(const std::string& path,
                                     const std::vector<int>& classes) {
  ktuplet::LabeledDataset ds = ktuplet::load_csv(path);
  if (classes.empty()) return ds;
  return ktuplet::select_classes(ds, std::set<int>(classes.begin(), classes.end()));
}

json classes_echo(const std::vector<int>& classes) {
  return classes.empty() ? json("all") : json(classes);
}

struct GenDataArgs {
  std::size_t classes = 20;
  std::size_t per_class = 50;
  std::size_t dim = 16;
  double spread = 0.15;
  std::uint64_t seed = 1;
  std::string out;
};

struct TrainEmbedArgs {
  std::string data;
  std::vector<int> classes;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t embed_dim = 32;
  ktuplet::EmbeddingTrainConfig cfg;
  bool eq2_verbatim = false;
  std::uint64_t seed = 42;
  std::uint64_t init_seed = 7;
  std::string out = "embedding.json";
  std::string trace_out;
};

struct TrainComparatorArgs {
  std::string data;
  std::vector<int> classes;
  std::string embed;
  std::size_t hidden = 64;
  ktuplet::ComparatorTrainConfig cfg;
  std::uint64_t seed = 42;
  std::uint64_t init_seed = 7;
  std::string out = "comparator.json";
  std::string trace_out;
  std::string embed_out;  // updated embedding when fine-tuning jointly
};

struct EvaluateArgs {
  std::string data;
  std::vector<int> classes;
  std::string embed;
  std::string comparator;
  std::string classifier = "euclid";
  ktuplet::EvalConfig cfg;
  std::uint64_t seed = 42;
  std::string out;
};

struct EmbedDumpArgs {
  std::string data;
  std::vector<int> classes;
  std::string embed;
  std::string out;
};

int run_gen_data(const GenDataArgs& a) {
  const auto ds = ktuplet::synth_gaussian(a.classes, a.per_class, a.dim,
                                          a.spread, a.seed);
  emit(ktuplet::to_csv(ds), a.out);
  return 0;
}

int run_train_embed(const TrainEmbedArgs& a) {
  const auto ds = load_dataset(a.data, a.classes);
  std::vector<std::size_t> dims;
  dims.push_back(ds.input_dim());
  dims.insert(dims.end(), a.hidden.begin(), a.hidden.end());
  dims.push_back(a.embed_dim);

  ktuplet::Rng init_rng(a.init_seed);
  ktuplet::EmbeddingModel model = ktuplet::make_embedding_model(dims, init_rng);

  ktuplet::EmbeddingTrainConfig cfg = a.cfg;
  cfg.semi_hard_mode = a.eq2_verbatim ? ktuplet::SemiHardMode::kVerbatim
                                      : ktuplet::SemiHardMode::kCorrected;
  ktuplet::Rng rng(a.seed);
  const auto trace = ktuplet::train_embedding(model, ds, cfg, rng);

  ktuplet::save_embedding(model, a.out);

  json j;
  j["config"] = {
      {"data", a.data},
      {"classes", classes_echo(a.classes)},
      {"layer_dims", dims},
      {"epochs", cfg.epochs},
      {"switch_epoch", cfg.switch_epoch},
      {"batch_size", cfg.batch_size},
      {"k_neg", cfg.k_neg},
      {"margin", cfg.margin},
      {"lr", cfg.base_lr},
      {"decay_every", cfg.decay_every},
      {"decay_factor", cfg.decay_factor},
      {"eq2_verbatim", a.eq2_verbatim},
      {"seed", a.seed},
      {"init_seed", a.init_seed},
      {"checkpoint", a.out},
  };
  j["loss"] = trace.epoch_loss;
  j["max_unit_norm_deviation"] = trace.max_unit_norm_deviation;
  emit(j.dump(2) + "\n", a.trace_out);
  return 0;
}

int run_train_comparator(const TrainComparatorArgs& a) {
  const auto ds = load_dataset(a.data, a.classes);
  ktuplet::EmbeddingModel embedding = ktuplet::load_embedding(a.embed);

  ktuplet::Rng init_rng(a.init_seed);
  ktuplet::Comparator cmp =
      ktuplet::make_comparator(embedding.embed_dim(), a.hidden, init_rng);

  ktuplet::Rng rng(a.seed);
  const auto trace =
      ktuplet::train_comparator(cmp, embedding, ds, a.cfg, rng);

  ktuplet::save_comparator(cmp, a.out);
  if (a.cfg.joint_finetune && !a.embed_out.empty()) {
    ktuplet::save_embedding(embedding, a.embed_out);
  }

  json j;
  j["config"] = {
      {"data", a.data},
      {"classes", classes_echo(a.classes)},
      {"embedding", a.embed},
      {"hidden", a.hidden},
      {"epochs", a.cfg.epochs},
      {"episodes_per_batch", a.cfg.episodes_per_batch},
      {"batches_per_epoch", a.cfg.batches_per_epoch},
      {"ways", a.cfg.way},
      {"shots", a.cfg.shot},
      {"queries", a.cfg.n_query},
      {"lr", a.cfg.base_lr},
      {"decay_every", a.cfg.decay_every},
      {"decay_factor", a.cfg.decay_factor},
      {"renorm_class_feature", a.cfg.renorm_class_feature},
      {"joint_finetune", a.cfg.joint_finetune},
      {"seed", a.seed},
      {"init_seed", a.init_seed},
      {"checkpoint", a.out},
  };
  j["loss"] = trace.epoch_loss;
  emit(j.dump(2) + "\n", a.trace_out);
  return 0;
}

int run_evaluate(const EvaluateArgs& a) {
  const auto ds = load_dataset(a.data, a.classes);
  const ktuplet::EmbeddingModel model = ktuplet::load_embedding(a.embed);

  ktuplet::EvalConfig cfg = a.cfg;
  cfg.classifier = a.classifier == "similarity"
                       ? ktuplet::ClassifierKind::kSimilarity
                       : ktuplet::ClassifierKind::kEuclid;

  ktuplet::Comparator cmp;
  const ktuplet::Comparator* cmp_ptr = nullptr;
  if (cfg.classifier == ktuplet::ClassifierKind::kSimilarity) {
    if (a.comparator.empty()) {
      throw ktuplet::ConfigError(
          "evaluate: --classifier similarity requires --comparator");
    }
    cmp = ktuplet::load_comparator(a.comparator);
    cmp_ptr = &cmp;
  }

  const ktuplet::EvalReport report =
      ktuplet::evaluate(model, cmp_ptr, ds, cfg, a.seed);
  emit(ktuplet::report_to_json(report), a.out);
  return 0;
}

int run_embed_dump(const EmbedDumpArgs& a) {
  const auto ds = load_dataset(a.data, a.classes);
  const ktuplet::EmbeddingModel model = ktuplet::load_embedding(a.embed);
  const ktuplet::Matrix emb = ktuplet::embed(model, ds.features());
  const ktuplet::LabeledDataset dump(emb, ds.labels());
  emit(ktuplet::to_csv(dump), a.out);
  return 0;
}

void add_common(CLI::App* cmd, std::uint64_t& seed, std::string& out) {
  cmd->add_option("--seed", seed, "Sampling seed");
  cmd->add_option("--out", out, "Output path (stdout when omitted)");
  cmd->set_config("--config", "", "Read defaults from a config file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"K-tuplet metric learning toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand(
      "gen-data", "Synthesize a Gaussian-cluster CSV dataset");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--per-class", gen.per_class, "Samples per class")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--dim", gen.dim, "Input feature dimension")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--spread", gen.spread, "Within-class noise sigma")
      ->check(CLI::PositiveNumber);
  add_common(gen_cmd, gen.seed, gen.out);

  TrainEmbedArgs te;
  auto* te_cmd = app.add_subcommand(
      "train-embed", "Train the embedding with the K-tuplet losses");
  te_cmd->add_option("--data", te.data, "Training CSV")->required();
  te_cmd->add_option("--classes", te.classes,
                     "Keep only these labels (comma separated)")
      ->delimiter(',');
  te_cmd->add_option("--hidden", te.hidden, "Hidden layer widths")
      ->delimiter(',');
  te_cmd->add_option("--embed-dim", te.embed_dim, "Embedding dimension")
      ->check(CLI::PositiveNumber);
  te_cmd->add_option("--epochs", te.cfg.epochs, "Total training epochs")
      ->check(CLI::PositiveNumber);
  te_cmd->add_option("--switch-epoch", te.cfg.switch_epoch,
                     "First epoch trained with the semi-hard loss");
  te_cmd->add_option("--batch-size", te.cfg.batch_size, "Tuplets per batch")
      ->check(CLI::PositiveNumber);
  te_cmd->add_option("--k-neg", te.cfg.k_neg, "Negatives per tuplet")
      ->check(CLI::PositiveNumber);
  te_cmd->add_option("--margin", te.cfg.margin, "Hinge margin alpha")
      ->check(CLI::PositiveNumber);
  te_cmd->add_option("--lr", te.cfg.base_lr, "Adam learning rate")
      ->check(CLI::PositiveNumber);
  te_cmd->add_option("--decay-every", te.cfg.decay_every,
                     "Epochs between learning-rate decays")
      ->check(CLI::PositiveNumber);
  te_cmd->add_option("--decay-factor", te.cfg.decay_factor,
                     "Learning-rate decay factor");
  te_cmd->add_option("--batches-per-epoch", te.cfg.batches_per_epoch,
                     "Batches per epoch (0: dataset size / batch size)");
  te_cmd->add_flag("--eq2-verbatim", te.eq2_verbatim,
                   "Use the printed margin condition for semi-hard mining");
  te_cmd->add_option("--init-seed", te.init_seed, "Weight init seed");
  te_cmd->add_option("--trace-out", te.trace_out,
                     "Loss-trace JSON path (stdout when omitted)");
  te_cmd->add_option("--seed", te.seed, "Sampling seed");
  te_cmd->add_option("--out", te.out, "Checkpoint path");
  te_cmd->set_config("--config", "", "Read defaults from a config file");

  TrainComparatorArgs tc;
  auto* tc_cmd = app.add_subcommand(
      "train-comparator", "Train the non-linear similarity comparator");
  tc_cmd->add_option("--data", tc.data, "Training CSV")->required();
  tc_cmd->add_option("--classes", tc.classes,
                     "Keep only these labels (comma separated)")
      ->delimiter(',');
  tc_cmd->add_option("--embed", tc.embed, "Embedding checkpoint")->required();
  tc_cmd->add_option("--hidden", tc.hidden, "Comparator hidden width")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--epochs", tc.cfg.epochs, "Training epochs")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--episodes-per-batch", tc.cfg.episodes_per_batch,
                     "Episodes stacked into one mini-batch")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--batches-per-epoch", tc.cfg.batches_per_epoch,
                     "Mini-batches per epoch")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--ways", tc.cfg.way, "Classes per episode")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--shots", tc.cfg.shot, "Support samples per class")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--queries", tc.cfg.n_query, "Query samples per class")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--lr", tc.cfg.base_lr, "Adam learning rate")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--decay-every", tc.cfg.decay_every,
                     "Epochs between learning-rate decays")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--decay-factor", tc.cfg.decay_factor,
                     "Learning-rate decay factor");
  tc_cmd->add_flag("--renorm-class-feature", tc.cfg.renorm_class_feature,
                   "Renormalize summed class features");
  tc_cmd->add_flag("--joint-finetune", tc.cfg.joint_finetune,
                   "Also backpropagate into the embedding");
  tc_cmd->add_option("--embed-out", tc.embed_out,
                     "Where to save the fine-tuned embedding");
  tc_cmd->add_option("--init-seed", tc.init_seed, "Weight init seed");
  tc_cmd->add_option("--trace-out", tc.trace_out,
                     "Loss-trace JSON path (stdout when omitted)");
  tc_cmd->add_option("--seed", tc.seed, "Sampling seed");
  tc_cmd->add_option("--out", tc.out, "Checkpoint path");
  tc_cmd->set_config("--config", "", "Read defaults from a config file");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand(
      "evaluate", "Episodic C-way K-shot evaluation");
  ev_cmd->add_option("--data", ev.data, "Evaluation CSV")->required();
  ev_cmd->add_option("--classes", ev.classes,
                     "Keep only these labels (comma separated)")
      ->delimiter(',');
  ev_cmd->add_option("--embed", ev.embed, "Embedding checkpoint")->required();
  ev_cmd->add_option("--comparator", ev.comparator, "Comparator checkpoint");
  ev_cmd->add_option("--classifier", ev.classifier, "euclid or similarity")
      ->check(CLI::IsMember({"euclid", "similarity"}));
  ev_cmd->add_option("--ways", ev.cfg.way, "Classes per episode")
      ->check(CLI::PositiveNumber);
  ev_cmd->add_option("--shots", ev.cfg.shot, "Support samples per class")
      ->check(CLI::PositiveNumber);
  ev_cmd->add_option("--queries", ev.cfg.n_query, "Query samples per class")
      ->check(CLI::PositiveNumber);
  ev_cmd->add_option("--episodes", ev.cfg.episodes, "Number of episodes")
      ->check(CLI::PositiveNumber);
  ev_cmd->add_flag("--renorm-class-feature", ev.cfg.renorm_class_feature,
                   "Renormalize summed class features");
  add_common(ev_cmd, ev.seed, ev.out);

  EmbedDumpArgs ed;
  auto* ed_cmd = app.add_subcommand(
      "embed-dump", "Write (label, embedding) rows as CSV");
  ed_cmd->add_option("--data", ed.data, "Input CSV")->required();
  ed_cmd->add_option("--classes", ed.classes,
                     "Keep only these labels (comma separated)")
      ->delimiter(',');
  ed_cmd->add_option("--embed", ed.embed, "Embedding checkpoint")->required();
  ed_cmd->add_option("--out", ed.out, "Output path (stdout when omitted)");
  ed_cmd->set_config("--config", "", "Read defaults from a config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (te_cmd->parsed()) return run_train_embed(te);
    if (tc_cmd->parsed()) return run_train_comparator(tc);
    if (ev_cmd->parsed()) return run_evaluate(ev);
    if (ed_cmd->parsed()) return run_embed_dump(ed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
