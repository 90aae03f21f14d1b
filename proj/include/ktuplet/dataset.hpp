#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ktuplet/numeric.hpp"

namespace ktuplet {

// Feature vectors with integer class labels. class_index partitions the
// row indices 0..N by label and is kept consistent with labels at all
// times (datasets are immutable after construction).
class LabeledDataset {
 public:
  LabeledDataset(Matrix features, std::vector<int> labels);

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::map<int, std::vector<std::size_t>>& class_index() const {
    return class_index_;
  }

  std::size_t size() const { return labels_.size(); }
  std::size_t input_dim() const { return features_.cols; }
  std::size_t num_classes() const { return class_index_.size(); }

  std::vector<int> class_labels() const;
  const std::vector<std::size_t>& rows_of_class(int label) const;

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::map<int, std::vector<std::size_t>> class_index_;
};

struct SplitSpec {
  std::set<int> train_classes;
  std::set<int> test_classes;
};

// CSV schema: one sample per line, "label,f_1,...,f_d"; label a
// non-negative integer, features decimal literals, no header, \n endings.
LabeledDataset load_csv(const std::string& path);
void save_csv(const LabeledDataset& ds, const std::string& path);
std::string to_csv(const LabeledDataset& ds);
LabeledDataset parse_csv(const std::string& text);

// Per-class isotropic Gaussians: class means uniform in [-1,1]^d_in,
// noise sigma = spread. Deterministic given seed.
LabeledDataset synth_gaussian(std::size_t num_classes, std::size_t per_class,
                              std::size_t d_in, double spread,
                              std::uint64_t seed);

// Partitions ds into (train, test) by the spec's disjoint class sets.
std::pair<LabeledDataset, LabeledDataset> split_by_class(
    const LabeledDataset& ds, const SplitSpec& spec);

// Rows whose labels fall in `classes`, as a standalone dataset.
LabeledDataset select_classes(const LabeledDataset& ds,
                              const std::set<int>& classes);

}  // namespace ktuplet
