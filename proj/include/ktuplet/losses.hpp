#pragma once

#include <cstddef>
#include <vector>

#include "ktuplet/numeric.hpp"

namespace ktuplet {

// A tuplet after embedding: unit-norm anchor, positive and K negatives of
// equal dimension.
struct EmbeddedTuplet {
  Vec anchor;
  Vec positive;
  std::vector<Vec> negatives;
};

// Which terms the semi-hard filter keeps. kCorrected keeps exactly the
// terms with strictly positive hinge loss (the still-violating ones);
// kVerbatim keeps the complement, selected by the margin condition
// ||f_a - f_n||^2 - ||f_a - f_p||^2 >= alpha as printed in the original
// formulation.
enum class SemiHardMode { kCorrected, kVerbatim };

// Mean over the K negatives of the hinge terms
// [ ||f_a - f_p||^2 - ||f_a - f_n_i||^2 + alpha ]_+.
double k_tuplet_loss(const EmbeddedTuplet& t, double margin);

// Gradients of k_tuplet_loss with respect to each embedded vector. Terms
// with hinge argument <= 0 contribute nothing.
struct TupletGrad {
  Vec anchor;
  Vec positive;
  std::vector<Vec> negatives;
};

TupletGrad k_tuplet_grad(const EmbeddedTuplet& t, double margin);

// Indices of the negatives retained by semi-hard mining, ascending.
std::vector<std::size_t> semi_hard_filter(const EmbeddedTuplet& t, double margin,
                                          SemiHardMode mode = SemiHardMode::kCorrected);

// Mean of the hinge terms over the filtered set S; 0 when S is empty.
double semi_hard_loss(const EmbeddedTuplet& t, double margin,
                      SemiHardMode mode = SemiHardMode::kCorrected);

// Gradient of semi_hard_loss: per-term gradients restricted to S with 1/|S|
// scaling; all zeros when S is empty.
TupletGrad semi_hard_grad(const EmbeddedTuplet& t, double margin,
                          SemiHardMode mode = SemiHardMode::kCorrected);

// Mean of (score - target)^2.
double mse_similarity_loss(std::span<const double> scores,
                           std::span<const double> targets);

// Per-element gradient 2 (score - target) / n.
Vec mse_similarity_grad(std::span<const double> scores,
                        std::span<const double> targets);

}  // namespace ktuplet
