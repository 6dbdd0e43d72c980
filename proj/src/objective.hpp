#pragma once

#include <random>

#include "alignment.hpp"
#include "tensor.hpp"

namespace ae2 {

// How the contrastive negative sequence is built from the positive one.
// RandomShuffle exists only for the ablation; it is never a training default.
enum class NegativeMode { FullReverse, HalfReverse, RandomShuffle };

const char* to_string(NegativeMode mode);
NegativeMode negative_mode_from_string(const std::string& s);

struct LossBreakdown {
  double align = 0.0;
  double reg = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

struct RegLossResult {
  double loss = 0.0;
  Tensor2 dx;
  Tensor2 dy;
};

struct TotalLossResult {
  LossBreakdown parts;
  Tensor2 dx;
  Tensor2 dy;
};

// Row permutation realizing the negative. FullReverse reverses all rows;
// HalfReverse reverses either the first or the last half (coin flip);
// RandomShuffle applies a uniform permutation.
Tensor2 make_negative(const Tensor2& x, NegativeMode mode, std::mt19937_64& rng);

// Hinge regularizer: max(L_align(x,y) - L_align(neg(x),y), 0). Gradients flow
// through both branches when the hinge is active, and are zero otherwise
// (including at exactly zero margin).
RegLossResult reg_loss(const Tensor2& x, const Tensor2& y, double beta,
                       double gamma, NegativeMode mode, std::mt19937_64& rng);

// total = align + lambda * reg, with gradients for both terms combined.
TotalLossResult total_loss(const Tensor2& x, const Tensor2& y, double beta,
                           double gamma, double lambda, NegativeMode mode,
                           std::mt19937_64& rng);

}  // namespace ae2
