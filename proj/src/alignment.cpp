#include "alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ops.hpp"

namespace ae2 {

namespace {

std::vector<double> row_norms(const Tensor2& x) {
  std::vector<double> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    const double* r = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) s += r[j] * r[j];
    norms[i] = std::sqrt(s);
    if (norms[i] <= 1e-12)
      fail(ErrorKind::Degenerate, "row " + std::to_string(i) + " has (near-)zero norm");
  }
  return norms;
}

// Weights of the three-way smooth min at an interior cell, given the three
// predecessor values (diag, up, left).
struct SoftWeights {
  double diag, up, left;
};

SoftWeights soft_min_weights(double diag, double up, double left, double gamma) {
  const double m = std::min(diag, std::min(up, left));
  const double ed = std::exp(-(diag - m) / gamma);
  const double eu = std::exp(-(up - m) / gamma);
  const double el = std::exp(-(left - m) / gamma);
  const double s = ed + eu + el;
  return {ed / s, eu / s, el / s};
}

double smooth_min3(double a, double b, double c, double gamma) {
  const double m = std::min(a, std::min(b, c));
  const double s = std::exp(-(a - m) / gamma) + std::exp(-(b - m) / gamma) +
                   std::exp(-(c - m) / gamma);
  return m - gamma * std::log(s);
}

}  // namespace

Tensor2 normalize_rows(const Tensor2& x) {
  const std::vector<double> norms = row_norms(x);
  Tensor2 out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double* r = out.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) r[j] /= norms[i];
  }
  return out;
}

CostMatrix cost_matrix(const Tensor2& x, const Tensor2& y, double beta) {
  if (x.cols() != y.cols())
    fail(ErrorKind::Dimension, "cost_matrix: embedding dimensions differ");
  if (beta <= 0.0) fail(ErrorKind::Config, "cost_matrix: beta must be positive");
  const Tensor2 xn = normalize_rows(x);
  const Tensor2 yn = normalize_rows(y);
  CostMatrix out;
  out.c = Tensor2(x.rows(), y.rows());
  std::vector<double> scores(y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < y.rows(); ++j) {
      double dot = 0.0;
      const double* xr = xn.row(i);
      const double* yr = yn.row(j);
      for (std::size_t k = 0; k < x.cols(); ++k) dot += xr[k] * yr[k];
      scores[j] = dot / beta;
      m = std::max(m, scores[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < y.rows(); ++j) sum += std::exp(scores[j] - m);
    const double lse = m + std::log(sum);
    for (std::size_t j = 0; j < y.rows(); ++j) out.c(i, j) = lse - scores[j];
  }
  return out;
}

double smooth_min(std::span<const double> values, double gamma) {
  if (values.empty()) fail(ErrorKind::Dimension, "smooth_min: empty list");
  if (gamma <= 0.0) fail(ErrorKind::Config, "smooth_min: gamma must be positive");
  const double m = *std::min_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(-(v - m) / gamma);
  return m - gamma * std::log(sum);
}

AlignmentResult dtw_forward(const CostMatrix& cm, double gamma) {
  if (gamma <= 0.0) fail(ErrorKind::Config, "dtw_forward: gamma must be positive");
  const std::size_t M = cm.M();
  const std::size_t N = cm.N();
  if (M == 0 || N == 0) fail(ErrorKind::Degenerate, "dtw_forward: empty cost matrix");
  AlignmentResult res;
  res.gamma = gamma;
  res.r = Tensor2(M + 1, N + 1);
  Tensor2& r = res.r;
  // r(0,0) = 0; the rest of row/column 0 is unreachable and never read.
  // First row/column accumulate cumulatively, which equals the
  // infinity-sentinel formulation without the exp overflow.
  r(1, 1) = cm.c(0, 0);
  for (std::size_t j = 2; j <= N; ++j) r(1, j) = cm.c(0, j - 1) + r(1, j - 1);
  for (std::size_t i = 2; i <= M; ++i) r(i, 1) = cm.c(i - 1, 0) + r(i - 1, 1);
  for (std::size_t i = 2; i <= M; ++i)
    for (std::size_t j = 2; j <= N; ++j)
      r(i, j) = cm.c(i - 1, j - 1) +
                smooth_min3(r(i - 1, j - 1), r(i - 1, j), r(i, j - 1), gamma);
  res.loss = r(M, N);
  if (!std::isfinite(res.loss)) fail(ErrorKind::Numeric, "dtw_forward: non-finite loss");
  return res;
}

const Tensor2& dtw_backward(AlignmentResult& res, const CostMatrix& cm) {
  const std::size_t M = cm.M();
  const std::size_t N = cm.N();
  if (res.r.rows() != M + 1 || res.r.cols() != N + 1)
    fail(ErrorKind::Dimension, "dtw_backward: result does not match cost matrix");
  const Tensor2& r = res.r;
  const double gamma = res.gamma;
  // adj(i,j) = d loss / d r(i,j); also equals d loss / d c_{ij} since the
  // cost enters only its own cell with unit weight.
  Tensor2 adj(M + 1, N + 1);
  adj(M, N) = 1.0;
  for (std::size_t i = M; i >= 1; --i) {
    for (std::size_t j = N; j >= 1; --j) {
      if (i == M && j == N) continue;
      double a = 0.0;
      if (i + 1 <= M && j + 1 <= N) {
        const SoftWeights w = soft_min_weights(r(i, j), r(i, j + 1), r(i + 1, j), gamma);
        a += adj(i + 1, j + 1) * w.diag;
      }
      if (i + 1 <= M) {
        if (j == 1) {
          // Successor (i+1,1) lies on the first column: single predecessor.
          a += adj(i + 1, 1);
        } else {
          const SoftWeights w =
              soft_min_weights(r(i, j - 1), r(i, j), r(i + 1, j - 1), gamma);
          a += adj(i + 1, j) * w.up;
        }
      }
      if (j + 1 <= N) {
        if (i == 1) {
          a += adj(1, j + 1);
        } else {
          const SoftWeights w =
              soft_min_weights(r(i - 1, j), r(i - 1, j + 1), r(i, j), gamma);
          a += adj(i, j + 1) * w.left;
        }
      }
      adj(i, j) = a;
    }
  }
  res.grad_c = Tensor2(M, N);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j) res.grad_c(i, j) = adj(i + 1, j + 1);
  return res.grad_c;
}

HardPath hard_dtw(const CostMatrix& cm) {
  const std::size_t M = cm.M();
  const std::size_t N = cm.N();
  if (M == 0 || N == 0) fail(ErrorKind::Degenerate, "hard_dtw: empty cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  Tensor2 dp(M + 1, N + 1);
  // 0 = diagonal, 1 = vertical, 2 = horizontal predecessor.
  std::vector<std::vector<int>> from(M + 1, std::vector<int>(N + 1, -1));
  for (std::size_t j = 0; j <= N; ++j) dp(0, j) = inf;
  for (std::size_t i = 0; i <= M; ++i) dp(i, 0) = inf;
  dp(0, 0) = 0.0;
  for (std::size_t i = 1; i <= M; ++i) {
    for (std::size_t j = 1; j <= N; ++j) {
      const double diag = dp(i - 1, j - 1);
      const double up = dp(i - 1, j);
      const double left = dp(i, j - 1);
      double best = diag;
      int choice = 0;
      if (up < best) {
        best = up;
        choice = 1;
      }
      if (left < best) {
        best = left;
        choice = 2;
      }
      dp(i, j) = cm.c(i - 1, j - 1) + best;
      from[i][j] = choice;
    }
  }
  HardPath out;
  out.cost = dp(M, N);
  std::size_t i = M, j = N;
  while (true) {
    out.path.emplace_back(i, j);
    if (i == 1 && j == 1) break;
    switch (from[i][j]) {
      case 0: --i; --j; break;
      case 1: --i; break;
      default: --j; break;
    }
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

AlignGradients align_loss_with_cost_grad(const Tensor2& x, const Tensor2& y,
                                         double beta, double gamma,
                                         CostMatrix* cost_out,
                                         Tensor2* grad_c_out) {
  const std::size_t M = x.rows();
  const std::size_t N = y.rows();
  const std::size_t d = x.cols();
  const Tensor2 xn = normalize_rows(x);
  const Tensor2 yn = normalize_rows(y);
  const std::vector<double> xnorm = row_norms(x);
  const std::vector<double> ynorm = row_norms(y);

  // Scores s_ij = x~_i . y~_j / beta and the row softmax p.
  Tensor2 s = ops::matmul(xn, ops::transpose(yn));
  s *= 1.0 / beta;
  const Tensor2 p = ops::row_softmax(s);
  CostMatrix cm;
  cm.c = Tensor2(M, N);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j) cm.c(i, j) = -std::log(p(i, j));

  AlignmentResult res = dtw_forward(cm, gamma);
  const Tensor2& gc = dtw_backward(res, cm);

  // c_ij = lse_i - s_ij, so ds_ij = -gc_ij + (sum_j gc_ij) * p_ij.
  Tensor2 ds(M, N);
  for (std::size_t i = 0; i < M; ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < N; ++j) rowsum += gc(i, j);
    for (std::size_t j = 0; j < N; ++j)
      ds(i, j) = -gc(i, j) + rowsum * p(i, j);
  }
  ds *= 1.0 / beta;

  Tensor2 dxn(M, d), dyn(N, d);
  ops::matmul_backward(xn, ops::transpose(yn), ds, &dxn, nullptr);
  {
    // dyn = ds^T * xn
    Tensor2 dst = ops::transpose(ds);
    ops::matmul_backward(yn, ops::transpose(xn), dst, &dyn, nullptr);
  }

  AlignGradients out;
  out.loss = res.loss;
  out.dx = Tensor2(M, d);
  out.dy = Tensor2(N, d);
  // Through row normalization: dv = (dvn - (dvn . vn) vn) / ||v||.
  for (std::size_t i = 0; i < M; ++i) {
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) dot += dxn(i, k) * xn(i, k);
    for (std::size_t k = 0; k < d; ++k)
      out.dx(i, k) = (dxn(i, k) - dot * xn(i, k)) / xnorm[i];
  }
  for (std::size_t j = 0; j < N; ++j) {
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) dot += dyn(j, k) * yn(j, k);
    for (std::size_t k = 0; k < d; ++k)
      out.dy(j, k) = (dyn(j, k) - dot * yn(j, k)) / ynorm[j];
  }
  if (cost_out) *cost_out = std::move(cm);
  if (grad_c_out) *grad_c_out = std::move(res.grad_c);
  return out;
}

AlignGradients align_loss(const Tensor2& x, const Tensor2& y, double beta,
                          double gamma) {
  return align_loss_with_cost_grad(x, y, beta, gamma, nullptr, nullptr);
}

SyncMap sync_map(const Tensor2& x, const Tensor2& y) {
  if (x.cols() != y.cols())
    fail(ErrorKind::Dimension, "sync_map: embedding dimensions differ");
  const Tensor2 xn = normalize_rows(x);
  const Tensor2 yn = normalize_rows(y);
  SyncMap out;
  out.ref_len = x.rows();
  out.target_len = y.rows();
  out.map.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < y.rows(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) dot += xn(i, k) * yn(j, k);
      if (dot > best) {
        best = dot;
        arg = j;
      }
    }
    out.map[i] = arg;
  }
  return out;
}

}  // namespace ae2
