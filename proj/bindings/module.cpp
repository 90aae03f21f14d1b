// Python bindings for the main operations: dataset handling, tuplet
// losses, embedding/comparator training and episodic evaluation.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <set>

#include "ktuplet/comparator.hpp"
#include "ktuplet/dataset.hpp"
#include "ktuplet/embedding.hpp"
#include "ktuplet/errors.hpp"
#include "ktuplet/evaluator.hpp"
#include "ktuplet/losses.hpp"
#include "ktuplet/sampler.hpp"

namespace py = pybind11;
using namespace ktuplet;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style |
                                                       py::array::forcecast>& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)),
           static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.values.begin());
  return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

Vec vec_from_numpy(const py::array_t<double, py::array::c_style |
                                                 py::array::forcecast>& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-d array");
  return Vec(a.data(), a.data() + a.size());
}

EmbeddedTuplet tuplet_from_python(const py::array_t<double>& anchor,
                                  const py::array_t<double>& positive,
                                  const std::vector<py::array_t<double>>& negatives) {
  EmbeddedTuplet t;
  t.anchor = vec_from_numpy(anchor);
  t.positive = vec_from_numpy(positive);
  for (const auto& n : negatives) t.negatives.push_back(vec_from_numpy(n));
  return t;
}

SemiHardMode mode_from_flag(bool verbatim) {
  return verbatim ? SemiHardMode::kVerbatim : SemiHardMode::kCorrected;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "K-tuplet metric learning toolkit";

  py::register_exception<Error>(m, "KtupletError", PyExc_RuntimeError);

  py::class_<LabeledDataset>(m, "Dataset")
      .def(py::init([](const py::array_t<double>& features,
                       const std::vector<int>& labels) {
             return LabeledDataset(matrix_from_numpy(features), labels);
           }),
           py::arg("features"), py::arg("labels"))
      .def_property_readonly(
          "features",
          [](const LabeledDataset& ds) { return matrix_to_numpy(ds.features()); })
      .def_property_readonly(
          "labels",
          [](const LabeledDataset& ds) {
            py::array_t<int> out(ds.labels().size());
            std::copy(ds.labels().begin(), ds.labels().end(),
                      out.mutable_data());
            return out;
          })
      .def_property_readonly("num_samples", &LabeledDataset::size)
      .def_property_readonly("input_dim", &LabeledDataset::input_dim)
      .def_property_readonly("num_classes", &LabeledDataset::num_classes)
      .def_property_readonly("classes", &LabeledDataset::class_labels)
      .def("__len__", &LabeledDataset::size);

  m.def("synth_gaussian", &synth_gaussian, py::arg("num_classes"),
        py::arg("per_class"), py::arg("d_in"), py::arg("spread"),
        py::arg("seed"));
  m.def("load_csv", &load_csv, py::arg("path"));
  m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"));
  m.def(
      "split_by_class",
      [](const LabeledDataset& ds, const std::vector<int>& train_classes,
         const std::vector<int>& test_classes) {
        SplitSpec spec{{train_classes.begin(), train_classes.end()},
                       {test_classes.begin(), test_classes.end()}};
        return split_by_class(ds, spec);
      },
      py::arg("dataset"), py::arg("train_classes"), py::arg("test_classes"));
  m.def(
      "select_classes",
      [](const LabeledDataset& ds, const std::vector<int>& classes) {
        return select_classes(ds, std::set<int>(classes.begin(), classes.end()));
      },
      py::arg("dataset"), py::arg("classes"));

  m.def(
      "sample_tuplets",
      [](const LabeledDataset& ds, std::size_t batch_size, std::size_t k_neg,
         std::uint64_t seed) {
        Rng rng(seed);
        const TupletBatch batch = sample_tuplets(ds, batch_size, k_neg, rng);
        py::list out;
        for (const Tuplet& t : batch.tuplets) {
          out.append(py::make_tuple(t.anchor, t.positive, t.negatives));
        }
        return out;
      },
      py::arg("dataset"), py::arg("batch_size"), py::arg("k_neg"),
      py::arg("seed"));
  m.def(
      "sample_episode",
      [](const LabeledDataset& ds, std::size_t way, std::size_t shot,
         std::size_t n_query, std::uint64_t seed) {
        Rng rng(seed);
        const Episode ep = sample_episode(ds, way, shot, n_query, rng);
        return py::make_tuple(ep.support, ep.query);
      },
      py::arg("dataset"), py::arg("way"), py::arg("shot"), py::arg("n_query"),
      py::arg("seed"));

  m.def(
      "k_tuplet_loss",
      [](const py::array_t<double>& anchor, const py::array_t<double>& positive,
         const std::vector<py::array_t<double>>& negatives, double margin) {
        return k_tuplet_loss(tuplet_from_python(anchor, positive, negatives),
                             margin);
      },
      py::arg("anchor"), py::arg("positive"), py::arg("negatives"),
      py::arg("margin") = 0.5);
  m.def(
      "semi_hard_loss",
      [](const py::array_t<double>& anchor, const py::array_t<double>& positive,
         const std::vector<py::array_t<double>>& negatives, double margin,
         bool eq2_verbatim) {
        return semi_hard_loss(tuplet_from_python(anchor, positive, negatives),
                              margin, mode_from_flag(eq2_verbatim));
      },
      py::arg("anchor"), py::arg("positive"), py::arg("negatives"),
      py::arg("margin") = 0.5, py::arg("eq2_verbatim") = false);
  m.def(
      "semi_hard_filter",
      [](const py::array_t<double>& anchor, const py::array_t<double>& positive,
         const std::vector<py::array_t<double>>& negatives, double margin,
         bool eq2_verbatim) {
        return semi_hard_filter(tuplet_from_python(anchor, positive, negatives),
                                margin, mode_from_flag(eq2_verbatim));
      },
      py::arg("anchor"), py::arg("positive"), py::arg("negatives"),
      py::arg("margin") = 0.5, py::arg("eq2_verbatim") = false);
  m.def(
      "mse_similarity_loss",
      [](const py::array_t<double>& scores, const py::array_t<double>& targets) {
        return mse_similarity_loss(vec_from_numpy(scores),
                                   vec_from_numpy(targets));
      },
      py::arg("scores"), py::arg("targets"));

  py::class_<EmbeddingModel>(m, "EmbeddingModel")
      .def(py::init([](const std::vector<std::size_t>& layer_dims,
                       std::uint64_t init_seed) {
             Rng rng(init_seed);
             return make_embedding_model(layer_dims, rng);
           }),
           py::arg("layer_dims"), py::arg("init_seed"))
      .def_property_readonly(
          "layer_dims",
          [](const EmbeddingModel& model) { return model.net.layer_dims; })
      .def_property_readonly("embed_dim", &EmbeddingModel::embed_dim)
      .def("forward",
           [](const EmbeddingModel& model, const py::array_t<double>& x) {
             return matrix_to_numpy(embed(model, matrix_from_numpy(x)));
           },
           py::arg("x"))
      .def("save",
           [](const EmbeddingModel& model, const std::string& path) {
             save_embedding(model, path);
           },
           py::arg("path"))
      .def_static("load", &load_embedding, py::arg("path"))
      .def("__eq__", [](const EmbeddingModel& a, const EmbeddingModel& b) {
        return a == b;
      });

  m.def(
      "train_embedding",
      [](EmbeddingModel& model, const LabeledDataset& ds, std::size_t epochs,
         std::size_t switch_epoch, std::size_t batch_size, std::size_t k_neg,
         double margin, double lr, std::size_t decay_every, double decay_factor,
         std::size_t batches_per_epoch, bool eq2_verbatim, std::uint64_t seed) {
        EmbeddingTrainConfig cfg;
        cfg.epochs = epochs;
        cfg.switch_epoch = switch_epoch;
        cfg.batch_size = batch_size;
        cfg.k_neg = k_neg;
        cfg.margin = margin;
        cfg.base_lr = lr;
        cfg.decay_every = decay_every;
        cfg.decay_factor = decay_factor;
        cfg.batches_per_epoch = batches_per_epoch;
        cfg.semi_hard_mode = mode_from_flag(eq2_verbatim);
        Rng rng(seed);
        const EmbeddingTrainTrace trace = train_embedding(model, ds, cfg, rng);
        py::dict out;
        out["loss"] = trace.epoch_loss;
        out["max_unit_norm_deviation"] = trace.max_unit_norm_deviation;
        return out;
      },
      py::arg("model"), py::arg("dataset"), py::arg("epochs") = 100,
      py::arg("switch_epoch") = 80, py::arg("batch_size") = 64,
      py::arg("k_neg") = 5, py::arg("margin") = 0.5, py::arg("lr") = 0.001,
      py::arg("decay_every") = 40, py::arg("decay_factor") = 0.5,
      py::arg("batches_per_epoch") = 0, py::arg("eq2_verbatim") = false,
      py::arg("seed") = 42);

  py::class_<Comparator>(m, "Comparator")
      .def(py::init([](std::size_t embed_dim, std::size_t hidden,
                       std::uint64_t init_seed) {
             Rng rng(init_seed);
             return make_comparator(embed_dim, hidden, rng);
           }),
           py::arg("embed_dim"), py::arg("hidden") = 64, py::arg("init_seed") = 7)
      .def_property_readonly("embed_dim", &Comparator::embed_dim)
      .def("score",
           [](const Comparator& c, const py::array_t<double>& f_q,
              const py::array_t<double>& f_s) {
             return score(c, vec_from_numpy(f_q), vec_from_numpy(f_s));
           },
           py::arg("query"), py::arg("support"))
      .def("save",
           [](const Comparator& c, const std::string& path) {
             save_comparator(c, path);
           },
           py::arg("path"))
      .def_static("load", &load_comparator, py::arg("path"))
      .def("__eq__",
           [](const Comparator& a, const Comparator& b) { return a == b; });

  m.def(
      "class_feature",
      [](const std::vector<py::array_t<double>>& embeddings, bool renormalize) {
        std::vector<Vec> vecs;
        for (const auto& e : embeddings) vecs.push_back(vec_from_numpy(e));
        return class_feature(vecs, renormalize);
      },
      py::arg("embeddings"), py::arg("renormalize") = false);

  m.def(
      "train_comparator",
      [](Comparator& c, EmbeddingModel& model, const LabeledDataset& ds,
         std::size_t epochs, std::size_t episodes_per_batch,
         std::size_t batches_per_epoch, std::size_t ways, std::size_t shots,
         std::size_t queries, double lr, std::size_t decay_every,
         double decay_factor, bool renorm_class_feature, bool joint_finetune,
         std::uint64_t seed) {
        ComparatorTrainConfig cfg;
        cfg.epochs = epochs;
        cfg.episodes_per_batch = episodes_per_batch;
        cfg.batches_per_epoch = batches_per_epoch;
        cfg.way = ways;
        cfg.shot = shots;
        cfg.n_query = queries;
        cfg.base_lr = lr;
        cfg.decay_every = decay_every;
        cfg.decay_factor = decay_factor;
        cfg.renorm_class_feature = renorm_class_feature;
        cfg.joint_finetune = joint_finetune;
        Rng rng(seed);
        const ComparatorTrainTrace trace =
            train_comparator(c, model, ds, cfg, rng);
        py::dict out;
        out["loss"] = trace.epoch_loss;
        return out;
      },
      py::arg("comparator"), py::arg("model"), py::arg("dataset"),
      py::arg("epochs") = 50, py::arg("episodes_per_batch") = 4,
      py::arg("batches_per_epoch") = 10, py::arg("ways") = 5,
      py::arg("shots") = 1, py::arg("queries") = 15, py::arg("lr") = 0.001,
      py::arg("decay_every") = 40, py::arg("decay_factor") = 0.5,
      py::arg("renorm_class_feature") = false, py::arg("joint_finetune") = false,
      py::arg("seed") = 42);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("mean_accuracy", &EvalReport::mean_accuracy)
      .def_readonly("ci95", &EvalReport::ci95_halfwidth)
      .def_readonly("num_episodes", &EvalReport::num_episodes)
      .def_readonly("per_episode", &EvalReport::per_episode)
      .def_readonly("seed", &EvalReport::seed)
      .def("to_json", &report_to_json);

  m.def(
      "evaluate",
      [](const EmbeddingModel& model, const LabeledDataset& ds,
         std::size_t ways, std::size_t shots, std::size_t queries,
         std::size_t episodes, std::uint64_t seed, const Comparator* comparator,
         const std::string& classifier, bool renorm_class_feature) {
        EvalConfig cfg;
        cfg.way = ways;
        cfg.shot = shots;
        cfg.n_query = queries;
        cfg.episodes = episodes;
        cfg.renorm_class_feature = renorm_class_feature;
        if (classifier == "euclid") {
          cfg.classifier = ClassifierKind::kEuclid;
        } else if (classifier == "similarity") {
          cfg.classifier = ClassifierKind::kSimilarity;
        } else {
          throw ConfigError("classifier must be 'euclid' or 'similarity'");
        }
        return evaluate(model, comparator, ds, cfg, seed);
      },
      py::arg("model"), py::arg("dataset"), py::arg("ways") = 5,
      py::arg("shots") = 1, py::arg("queries") = 15, py::arg("episodes") = 600,
      py::arg("seed") = 42, py::arg("comparator") = nullptr,
      py::arg("classifier") = "euclid", py::arg("renorm_class_feature") = false);

  m.def("ci95", &ci95, py::arg("accuracies"));
  m.def(
      "nn_classify",
      [](const py::array_t<double>& query,
         const std::vector<std::pair<py::array_t<double>, int>>& support) {
        std::vector<SupportEntry> entries;
        for (const auto& [feat, label] : support) {
          entries.push_back({vec_from_numpy(feat), label});
        }
        return nn_classify(vec_from_numpy(query), entries);
      },
      py::arg("query"), py::arg("support"));
}
