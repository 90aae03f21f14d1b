#include "ktuplet/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ktuplet/errors.hpp"
#include "ktuplet/rng.hpp"

namespace ktuplet {

LabeledDataset::LabeledDataset(Matrix features, std::vector<int> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.rows != labels_.size()) {
    throw DimensionError("LabeledDataset: " + std::to_string(features_.rows) +
                         " feature rows vs " + std::to_string(labels_.size()) +
                         " labels");
  }
  if (!all_finite(features_)) {
    throw ConfigError("LabeledDataset: non-finite feature value");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    class_index_[labels_[i]].push_back(i);
  }
}

std::vector<int> LabeledDataset::class_labels() const {
  std::vector<int> out;
  out.reserve(class_index_.size());
  for (const auto& [label, rows] : class_index_) out.push_back(label);
  return out;
}

const std::vector<std::size_t>& LabeledDataset::rows_of_class(int label) const {
  auto it = class_index_.find(label);
  if (it == class_index_.end()) {
    throw ConfigError("rows_of_class: unknown label " + std::to_string(label));
  }
  return it->second;
}

namespace {

double parse_double_field(const std::string& field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": non-numeric feature '" + field + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": non-finite feature '" + field + "'");
  }
  return value;
}

int parse_label_field(const std::string& field, std::size_t line_no) {
  int value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty() || value < 0) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": label must be a non-negative integer, got '" + field +
                     "'");
  }
  return value;
}

void append_double(std::string& out, double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

}  // namespace

LabeledDataset parse_csv(const std::string& text) {
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t width = 0;  // feature count, fixed by the first row

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty line");
    }

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() < 2) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 'label,f_1,...', got '" + line + "'");
    }
    const std::size_t row_width = fields.size() - 1;
    if (width == 0) {
      width = row_width;
    } else if (row_width != width) {
      throw ParseError("line " + std::to_string(line_no) + ": " +
                       std::to_string(row_width) + " features, expected " +
                       std::to_string(width));
    }
    labels.push_back(parse_label_field(fields[0], line_no));
    for (std::size_t j = 1; j < fields.size(); ++j) {
      values.push_back(parse_double_field(fields[j], line_no));
    }
  }
  if (labels.empty()) {
    throw ParseError("empty input: no data rows");
  }
  Matrix features(labels.size(), width, std::move(values));
  return LabeledDataset(std::move(features), std::move(labels));
}

LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string to_csv(const LabeledDataset& ds) {
  std::string out;
  out.reserve(ds.size() * (ds.input_dim() + 1) * 12);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += std::to_string(ds.labels()[i]);
    for (double x : ds.features().row(i)) {
      out += ',';
      append_double(out, x);
    }
    out += '\n';
  }
  return out;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_csv: cannot open '" + path + "' for writing");
  out << to_csv(ds);
  if (!out) throw IoError("save_csv: write failed for '" + path + "'");
}

LabeledDataset synth_gaussian(std::size_t num_classes, std::size_t per_class,
                              std::size_t d_in, double spread,
                              std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("synth_gaussian: num_classes < 2");
  if (per_class < 2) throw ConfigError("synth_gaussian: per_class < 2");
  if (d_in < 1) throw ConfigError("synth_gaussian: d_in < 1");
  if (!(spread > 0.0)) throw ConfigError("synth_gaussian: spread <= 0");

  Rng rng(seed);
  Matrix features(num_classes * per_class, d_in);
  std::vector<int> labels(num_classes * per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    Vec mean(d_in);
    for (auto& m : mean) m = rng.uniform(-1.0, 1.0);
    for (std::size_t s = 0; s < per_class; ++s, ++row) {
      auto dst = features.row(row);
      for (std::size_t j = 0; j < d_in; ++j) {
        dst[j] = mean[j] + spread * rng.normal();
      }
      labels[row] = static_cast<int>(c);
    }
  }
  return LabeledDataset(std::move(features), std::move(labels));
}

LabeledDataset select_classes(const LabeledDataset& ds,
                              const std::set<int>& classes) {
  for (int label : classes) {
    if (ds.class_index().find(label) == ds.class_index().end()) {
      throw SplitError("select_classes: class " + std::to_string(label) +
                       " not present in dataset");
    }
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (classes.count(ds.labels()[i])) rows.push_back(i);
  }
  Matrix features(rows.size(), ds.input_dim());
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = ds.features().row(rows[i]);
    auto dst = features.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    labels[i] = ds.labels()[rows[i]];
  }
  return LabeledDataset(std::move(features), std::move(labels));
}

std::pair<LabeledDataset, LabeledDataset> split_by_class(
    const LabeledDataset& ds, const SplitSpec& spec) {
  for (int label : spec.train_classes) {
    if (spec.test_classes.count(label)) {
      throw SplitError("split_by_class: class " + std::to_string(label) +
                       " appears in both train and test sets");
    }
  }
  return {select_classes(ds, spec.train_classes),
          select_classes(ds, spec.test_classes)};
}

}  // namespace ktuplet
