#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>

#include "ktuplet/dataset.hpp"
#include "ktuplet/errors.hpp"
#include "ktuplet/rng.hpp"

using namespace ktuplet;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("parse_csv counts rows and classes") {
  const LabeledDataset ds = parse_csv("0,1.5,2.5\n1,0.25,-3\n0,0,1e-2\n");
  CHECK(ds.size() == 3);
  CHECK(ds.input_dim() == 2);
  CHECK(ds.num_classes() == 2);
  CHECK(ds.rows_of_class(0).size() == 2);
  CHECK(ds.rows_of_class(1).size() == 1);
  CHECK(ds.features().at(1, 1) == -3.0);
}

TEST_CASE("parse_csv rejects malformed input") {
  CHECK_THROWS_AS(parse_csv(""), ParseError);
  CHECK_THROWS_AS(parse_csv("0,1.0\n1,abc\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("0,1.0,2.0\n1,3.0\n"), ParseError);  // width
  CHECK_THROWS_AS(parse_csv("-1,1.0\n"), ParseError);            // label
  CHECK_THROWS_AS(parse_csv("0\n"), ParseError);                 // no features
  CHECK_THROWS_AS(parse_csv("0,1.0\n\n"), ParseError);           // blank line

  SUBCASE("line numbers reported") {
    try {
      parse_csv("0,1.0\n1,oops\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
}

TEST_CASE("csv round-trip reproduces features and labels exactly") {
  const LabeledDataset ds = synth_gaussian(4, 6, 5, 0.3, 99);
  const auto path = temp_path("ktuplet_roundtrip.csv");
  save_csv(ds, path.string());
  const LabeledDataset back = load_csv(path.string());
  std::filesystem::remove(path);

  REQUIRE(back.size() == ds.size());
  REQUIRE(back.input_dim() == ds.input_dim());
  CHECK(back.labels() == ds.labels());
  CHECK(back.features() == ds.features());
}

TEST_CASE("load_csv missing file") {
  CHECK_THROWS_AS(load_csv("/nonexistent/ktuplet.csv"), IoError);
}

TEST_CASE("synth_gaussian cardinality and determinism") {
  const LabeledDataset ds = synth_gaussian(5, 20, 16, 0.1, 7);
  CHECK(ds.size() == 100);
  CHECK(ds.num_classes() == 5);
  for (int c = 0; c < 5; ++c) CHECK(ds.rows_of_class(c).size() == 20);

  const LabeledDataset again = synth_gaussian(5, 20, 16, 0.1, 7);
  CHECK(again.features() == ds.features());
  CHECK(again.labels() == ds.labels());

  CHECK_THROWS_AS(synth_gaussian(1, 20, 16, 0.1, 7), ConfigError);
  CHECK_THROWS_AS(synth_gaussian(5, 1, 16, 0.1, 7), ConfigError);
  CHECK_THROWS_AS(synth_gaussian(5, 20, 16, 0.0, 7), ConfigError);
}

TEST_CASE("synth_gaussian with tiny spread is 1-NN separable") {
  const LabeledDataset ds = synth_gaussian(5, 20, 16, 0.01, 21);
  // Leave-one-out 1-NN on raw features.
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double best = 0.0;
    std::size_t best_row = i;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (j == i) continue;
      const double dist =
          squared_euclidean(ds.features().row(i), ds.features().row(j));
      if (best_row == i || dist < best) {
        best = dist;
        best_row = j;
      }
    }
    if (ds.labels()[best_row] == ds.labels()[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(ds.size()) >= 0.99);
}

TEST_CASE("class_index partitions the row range") {
  const LabeledDataset ds = synth_gaussian(6, 9, 4, 0.2, 3);
  std::set<std::size_t> seen;
  for (const auto& [label, rows] : ds.class_index()) {
    for (std::size_t r : rows) {
      CHECK(ds.labels()[r] == label);
      CHECK(seen.insert(r).second);  // no duplicates across classes
    }
  }
  CHECK(seen.size() == ds.size());
}

TEST_CASE("split_by_class partitions rows by label") {
  const LabeledDataset ds = synth_gaussian(5, 8, 4, 0.2, 17);
  const SplitSpec spec{{0, 1, 2}, {3, 4}};
  const auto [train, test] = split_by_class(ds, spec);
  CHECK(train.size() + test.size() == ds.size());
  CHECK(train.num_classes() == 3);
  CHECK(test.num_classes() == 2);

  SUBCASE("label spaces disjoint") {
    for (int label : train.class_labels()) {
      CHECK(test.class_index().find(label) == test.class_index().end());
    }
  }
  SUBCASE("overlapping spec rejected") {
    CHECK_THROWS_AS(split_by_class(ds, SplitSpec{{0, 1}, {1, 2}}), SplitError);
  }
  SUBCASE("unknown class rejected") {
    CHECK_THROWS_AS(split_by_class(ds, SplitSpec{{0, 9}, {3}}), SplitError);
  }
}

TEST_CASE("randomized splits never leak labels") {
  Rng rng(31);
  const LabeledDataset ds = synth_gaussian(8, 5, 3, 0.2, 19);
  for (int trial = 0; trial < 100; ++trial) {
    // Random subset of classes for train, remainder for test.
    SplitSpec spec;
    for (int c = 0; c < 8; ++c) {
      if (rng.uniform() < 0.5) spec.train_classes.insert(c);
      else spec.test_classes.insert(c);
    }
    if (spec.train_classes.empty() || spec.test_classes.empty()) continue;
    const auto [train, test] = split_by_class(ds, spec);
    for (int label : test.class_labels()) {
      CHECK(train.class_index().find(label) == train.class_index().end());
    }
  }
}
