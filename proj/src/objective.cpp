#include "objective.hpp"

#include <numeric>

#include "ops.hpp"

namespace ae2 {

const char* to_string(NegativeMode mode) {
  switch (mode) {
    case NegativeMode::FullReverse: return "full_reverse";
    case NegativeMode::HalfReverse: return "half_reverse";
    default: return "random_shuffle";
  }
}

NegativeMode negative_mode_from_string(const std::string& s) {
  if (s == "full_reverse") return NegativeMode::FullReverse;
  if (s == "half_reverse") return NegativeMode::HalfReverse;
  if (s == "random_shuffle") return NegativeMode::RandomShuffle;
  fail(ErrorKind::Config, "unknown negative_mode: " + s);
}

namespace {

// All negatives are row permutations; perm[i] gives the source row of
// output row i, so gradients route back through the same permutation.
std::vector<std::size_t> negative_permutation(std::size_t t, NegativeMode mode,
                                              std::mt19937_64& rng) {
  std::vector<std::size_t> perm(t);
  std::iota(perm.begin(), perm.end(), 0);
  switch (mode) {
    case NegativeMode::FullReverse:
      std::reverse(perm.begin(), perm.end());
      break;
    case NegativeMode::HalfReverse: {
      const std::size_t half = t / 2;
      std::uniform_int_distribution<int> coin(0, 1);
      if (coin(rng) == 0)
        std::reverse(perm.begin(), perm.begin() + half);
      else
        std::reverse(perm.begin() + half, perm.end());
      break;
    }
    case NegativeMode::RandomShuffle:
      for (std::size_t i = t - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(perm[i], perm[pick(rng)]);
      }
      break;
  }
  return perm;
}

}  // namespace

Tensor2 make_negative(const Tensor2& x, NegativeMode mode, std::mt19937_64& rng) {
  if (x.rows() < 2)
    fail(ErrorKind::Degenerate, "make_negative: need at least 2 rows");
  const std::vector<std::size_t> perm = negative_permutation(x.rows(), mode, rng);
  Tensor2 out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* src = x.row(perm[i]);
    std::copy(src, src + x.cols(), out.row(i));
  }
  return out;
}

RegLossResult reg_loss(const Tensor2& x, const Tensor2& y, double beta,
                       double gamma, NegativeMode mode, std::mt19937_64& rng) {
  if (x.rows() < 2)
    fail(ErrorKind::Degenerate, "reg_loss: need at least 2 rows");
  const std::vector<std::size_t> perm = negative_permutation(x.rows(), mode, rng);
  Tensor2 xneg(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* src = x.row(perm[i]);
    std::copy(src, src + x.cols(), xneg.row(i));
  }

  const AlignGradients pos = align_loss(x, y, beta, gamma);
  const AlignGradients neg = align_loss(xneg, y, beta, gamma);

  RegLossResult out;
  out.dx = Tensor2(x.rows(), x.cols());
  out.dy = Tensor2(y.rows(), y.cols());
  const double margin = pos.loss - neg.loss;
  if (margin > 0.0) {
    out.loss = margin;
    out.dx = pos.dx;
    // Route the negative branch back through the permutation.
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t k = 0; k < x.cols(); ++k)
        out.dx(perm[i], k) -= neg.dx(i, k);
    out.dy = pos.dy;
    out.dy -= neg.dy;
  }
  return out;
}

TotalLossResult total_loss(const Tensor2& x, const Tensor2& y, double beta,
                           double gamma, double lambda, NegativeMode mode,
                           std::mt19937_64& rng) {
  const AlignGradients align = align_loss(x, y, beta, gamma);
  TotalLossResult out;
  out.parts.lambda = lambda;
  out.parts.align = align.loss;
  out.dx = align.dx;
  out.dy = align.dy;
  if (lambda != 0.0) {
    const RegLossResult reg = reg_loss(x, y, beta, gamma, mode, rng);
    out.parts.reg = reg.loss;
    for (std::size_t i = 0; i < out.dx.size(); ++i)
      out.dx.data()[i] += lambda * reg.dx.data()[i];
    for (std::size_t i = 0; i < out.dy.size(); ++i)
      out.dy.data()[i] += lambda * reg.dy.data()[i];
  } else {
    // Keep the breakdown meaningful when the regularizer is disabled.
    out.parts.reg = 0.0;
  }
  out.parts.total = out.parts.align + lambda * out.parts.reg;
  return out;
}

}  // namespace ae2
