#pragma once

#include "tensor.hpp"

namespace ae2::ops {

// Explicit forward/backward pairs covering everything the encoder and the
// losses need. Backward functions *accumulate* into their gradient outputs,
// which must already have the right shape (callers zero them first).

Tensor2 matmul(const Tensor2& a, const Tensor2& b);
void matmul_backward(const Tensor2& a, const Tensor2& b, const Tensor2& upstream,
                     Tensor2* da, Tensor2* db);

Tensor2 transpose(const Tensor2& a);

// b is 1 x C, broadcast over rows.
Tensor2 add_row_bias(const Tensor2& x, const Tensor2& b);
void add_row_bias_backward(const Tensor2& upstream, Tensor2* dx, Tensor2* db);

Tensor2 relu(const Tensor2& x);
void relu_backward(const Tensor2& x, const Tensor2& upstream, Tensor2* dx);

// Softmax along each row, computed with max subtraction.
Tensor2 row_softmax(const Tensor2& x);
// y = row_softmax(x); accumulates d loss/d x given d loss/d y.
void row_softmax_backward(const Tensor2& y, const Tensor2& upstream, Tensor2* dx);

// Row-wise layer normalization with learned gain/bias (both 1 x C).
struct LayerNormCache {
  Tensor2 xhat;                 // normalized input
  std::vector<double> inv_std;  // per row
};
constexpr double kLayerNormEps = 1e-5;
Tensor2 layer_norm(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                   LayerNormCache* cache);
void layer_norm_backward(const LayerNormCache& cache, const Tensor2& gain,
                         const Tensor2& upstream, Tensor2* dx, Tensor2* dgain,
                         Tensor2* dbias);

// Mean over rows -> 1 x C.
Tensor2 mean_rows(const Tensor2& x);
void mean_rows_backward(std::size_t rows, const Tensor2& upstream, Tensor2* dx);

Tensor2 concat_rows(const Tensor2& a, const Tensor2& b);

Tensor2 reverse_rows(const Tensor2& x);

}  // namespace ae2::ops
