#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace ae2 {

// Pairwise matching costs between two embedding sequences. Each entry is the
// negative log probability of matching row i of x to row j of y, so
// exp(-c) is row-stochastic by construction.
struct CostMatrix {
  Tensor2 c;  // M x N
  std::size_t M() const { return c.rows(); }
  std::size_t N() const { return c.cols(); }
};

// Soft-DTW cumulative table plus the loss and its gradient w.r.t. the cost
// matrix. r is (M+1) x (N+1); row/column 0 are unreachable boundary cells
// kept at zero except r(0,0). grad_c is filled by dtw_backward.
struct AlignmentResult {
  Tensor2 r;
  double loss = 0.0;
  Tensor2 grad_c;
  double gamma = 0.0;
};

// Nearest-neighbor frame map for synchronous playback: for each reference
// frame, the index of the most (cosine-)similar target frame.
struct SyncMap {
  std::size_t ref_len = 0;
  std::size_t target_len = 0;
  std::vector<std::size_t> map;
};

struct HardPath {
  double cost = 0.0;
  // 1-based cells from (1,1) to (M,N), matching the r-table indexing.
  std::vector<std::pair<std::size_t, std::size_t>> path;
};

struct AlignGradients {
  double loss = 0.0;
  Tensor2 dx;
  Tensor2 dy;
};

// Scales each row to unit L2 norm; rows with norm <= 1e-12 are rejected.
Tensor2 normalize_rows(const Tensor2& x);

// c_ij = -log softmax_j(x~_i . y~_j / beta), with max-subtraction stability.
CostMatrix cost_matrix(const Tensor2& x, const Tensor2& y, double beta);

// -gamma * log sum_k exp(-v_k / gamma), evaluated around the minimum.
double smooth_min(std::span<const double> values, double gamma);

AlignmentResult dtw_forward(const CostMatrix& c, double gamma);

// Exact reverse-mode differentiation through the dtw_forward recurrence;
// fills res.grad_c and returns a reference to it.
const Tensor2& dtw_backward(AlignmentResult& res, const CostMatrix& c);

// Classical min-cost monotone path; ties prefer diagonal, then vertical.
// Serves as the oracle for the soft path and as the alignment-path export.
HardPath hard_dtw(const CostMatrix& c);

// Full pipeline: cost matrix -> soft-DTW loss -> gradients w.r.t. the raw
// (unnormalized) embeddings, chaining through the softmax and row norms.
AlignGradients align_loss(const Tensor2& x, const Tensor2& y, double beta,
                          double gamma);

// Loss plus d loss/d C, for callers that also need the cost-space gradient.
AlignGradients align_loss_with_cost_grad(const Tensor2& x, const Tensor2& y,
                                         double beta, double gamma,
                                         CostMatrix* cost_out,
                                         Tensor2* grad_c_out);

SyncMap sync_map(const Tensor2& x, const Tensor2& y);

}  // namespace ae2
