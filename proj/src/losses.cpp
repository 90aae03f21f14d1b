#include "ktuplet/losses.hpp"

#include <algorithm>
#include <string>

#include "ktuplet/errors.hpp"

namespace ktuplet {

namespace {

void check_tuplet(const EmbeddedTuplet& t) {
  const std::size_t d = t.anchor.size();
  if (t.positive.size() != d) {
    throw DimensionError("tuplet: positive dim " +
                         std::to_string(t.positive.size()) + " != anchor dim " +
                         std::to_string(d));
  }
  if (t.negatives.empty()) {
    throw DimensionError("tuplet: needs at least one negative");
  }
  for (const auto& n : t.negatives) {
    if (n.size() != d) {
      throw DimensionError("tuplet: negative dim " + std::to_string(n.size()) +
                           " != anchor dim " + std::to_string(d));
    }
  }
}

// Hinge argument of term i: ||f_a - f_p||^2 - ||f_a - f_n_i||^2 + alpha.
double hinge_argument(const EmbeddedTuplet& t, std::size_t i, double margin) {
  const double d_pos = squared_euclidean(t.anchor, t.positive);
  const double d_neg = squared_euclidean(t.anchor, t.negatives[i]);
  return d_pos - d_neg + margin;
}

// Adds the gradient of one active hinge term, scaled by `weight`.
void add_term_grad(TupletGrad& g, const EmbeddedTuplet& t, std::size_t i,
                   double weight) {
  const std::size_t d = t.anchor.size();
  for (std::size_t j = 0; j < d; ++j) {
    const double ap = t.anchor[j] - t.positive[j];
    const double an = t.anchor[j] - t.negatives[i][j];
    g.anchor[j] += weight * 2.0 * (t.negatives[i][j] - t.positive[j]);
    g.positive[j] += weight * -2.0 * ap;
    g.negatives[i][j] += weight * 2.0 * an;
  }
}

TupletGrad make_zero_grad(const EmbeddedTuplet& t) {
  TupletGrad g;
  g.anchor.assign(t.anchor.size(), 0.0);
  g.positive.assign(t.positive.size(), 0.0);
  g.negatives.assign(t.negatives.size(), Vec(t.anchor.size(), 0.0));
  return g;
}

}  // namespace

// Accumulates hinge terms in sorted order, making the result independent
// of how the negatives are arranged within the tuplet.
double mean_of_terms(std::vector<double> terms, std::size_t denominator) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double term : terms) sum += term;
  return sum / static_cast<double>(denominator);
}

double k_tuplet_loss(const EmbeddedTuplet& t, double margin) {
  check_tuplet(t);
  const std::size_t k = t.negatives.size();
  std::vector<double> terms;
  terms.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double arg = hinge_argument(t, i, margin);
    terms.push_back(arg > 0.0 ? arg : 0.0);
  }
  return mean_of_terms(std::move(terms), k);
}

TupletGrad k_tuplet_grad(const EmbeddedTuplet& t, double margin) {
  check_tuplet(t);
  TupletGrad g = make_zero_grad(t);
  const std::size_t k = t.negatives.size();
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (hinge_argument(t, i, margin) > 0.0) {
      add_term_grad(g, t, i, inv_k);
    }
  }
  return g;
}

std::vector<std::size_t> semi_hard_filter(const EmbeddedTuplet& t, double margin,
                                          SemiHardMode mode) {
  check_tuplet(t);
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < t.negatives.size(); ++i) {
    const double arg = hinge_argument(t, i, margin);
    // arg > 0 <=> ||f_a - f_n_i||^2 - ||f_a - f_p||^2 < alpha. The
    // verbatim condition (>= alpha) selects exactly the complement.
    const bool keep = mode == SemiHardMode::kCorrected ? arg > 0.0 : arg <= 0.0;
    if (keep) selected.push_back(i);
  }
  return selected;
}

double semi_hard_loss(const EmbeddedTuplet& t, double margin,
                      SemiHardMode mode) {
  const auto selected = semi_hard_filter(t, margin, mode);
  if (selected.empty()) return 0.0;
  std::vector<double> terms;
  terms.reserve(selected.size());
  for (std::size_t i : selected) {
    const double arg = hinge_argument(t, i, margin);
    terms.push_back(arg > 0.0 ? arg : 0.0);
  }
  return mean_of_terms(std::move(terms), selected.size());
}

TupletGrad semi_hard_grad(const EmbeddedTuplet& t, double margin,
                          SemiHardMode mode) {
  const auto selected = semi_hard_filter(t, margin, mode);
  TupletGrad g = make_zero_grad(t);
  if (selected.empty()) return g;
  const double inv_s = 1.0 / static_cast<double>(selected.size());
  for (std::size_t i : selected) {
    if (hinge_argument(t, i, margin) > 0.0) {
      add_term_grad(g, t, i, inv_s);
    }
  }
  return g;
}

double mse_similarity_loss(std::span<const double> scores,
                           std::span<const double> targets) {
  if (scores.size() != targets.size()) {
    throw DimensionError("mse_similarity_loss: " +
                         std::to_string(scores.size()) + " scores vs " +
                         std::to_string(targets.size()) + " targets");
  }
  if (scores.empty()) {
    throw DimensionError("mse_similarity_loss: empty input");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double r = scores[i] - targets[i];
    sum += r * r;
  }
  return sum / static_cast<double>(scores.size());
}

Vec mse_similarity_grad(std::span<const double> scores,
                        std::span<const double> targets) {
  if (scores.size() != targets.size()) {
    throw DimensionError("mse_similarity_grad: length mismatch");
  }
  Vec g(scores.size());
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    g[i] = 2.0 * (scores[i] - targets[i]) * inv_n;
  }
  return g;
}

}  // namespace ktuplet
