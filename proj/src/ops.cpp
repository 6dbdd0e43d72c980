#include "ops.hpp"

#include <algorithm>
#include <cmath>

namespace ae2::ops {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) fail(ErrorKind::Dimension, "matmul: inner dimensions differ");
  Tensor2 out(a.rows(), b.cols());
  // i-k-j order keeps both reads and writes sequential; summation order is
  // row-major left-to-right and therefore deterministic.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

void matmul_backward(const Tensor2& a, const Tensor2& b, const Tensor2& upstream,
                     Tensor2* da, Tensor2* db) {
  if (upstream.rows() != a.rows() || upstream.cols() != b.cols())
    fail(ErrorKind::Dimension, "matmul_backward: upstream shape mismatch");
  if (da) {
    // da += upstream * b^T
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double* urow = upstream.row(i);
      double* drow = da->row(i);
      for (std::size_t k = 0; k < b.rows(); ++k) {
        const double* brow = b.row(k);
        double acc = 0.0;
        for (std::size_t j = 0; j < b.cols(); ++j) acc += urow[j] * brow[j];
        drow[k] += acc;
      }
    }
  }
  if (db) {
    // db += a^T * upstream
    for (std::size_t k = 0; k < a.rows(); ++k) {
      const double* arow = a.row(k);
      const double* urow = upstream.row(k);
      for (std::size_t i = 0; i < a.cols(); ++i) {
        const double av = arow[i];
        if (av == 0.0) continue;
        double* drow = db->row(i);
        for (std::size_t j = 0; j < upstream.cols(); ++j) drow[j] += av * urow[j];
      }
    }
  }
}

Tensor2 transpose(const Tensor2& a) {
  Tensor2 out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Tensor2 add_row_bias(const Tensor2& x, const Tensor2& b) {
  if (b.rows() != 1 || b.cols() != x.cols())
    fail(ErrorKind::Dimension, "add_row_bias: bias must be 1 x cols");
  Tensor2 out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double* orow = out.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) orow[j] += b(0, j);
  }
  return out;
}

void add_row_bias_backward(const Tensor2& upstream, Tensor2* dx, Tensor2* db) {
  if (dx) *dx += upstream;
  if (db) {
    for (std::size_t i = 0; i < upstream.rows(); ++i)
      for (std::size_t j = 0; j < upstream.cols(); ++j)
        (*db)(0, j) += upstream(i, j);
  }
}

Tensor2 relu(const Tensor2& x) {
  Tensor2 out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

void relu_backward(const Tensor2& x, const Tensor2& upstream, Tensor2* dx) {
  for (std::size_t i = 0; i < x.size(); ++i)
    dx->data()[i] += x.data()[i] > 0.0 ? upstream.data()[i] : 0.0;
}

Tensor2 row_softmax(const Tensor2& x) {
  Tensor2 out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xr = x.row(i);
    double* orow = out.row(i);
    double m = xr[0];
    for (std::size_t j = 1; j < x.cols(); ++j) m = std::max(m, xr[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      orow[j] = std::exp(xr[j] - m);
      sum += orow[j];
    }
    for (std::size_t j = 0; j < x.cols(); ++j) orow[j] /= sum;
  }
  return out;
}

void row_softmax_backward(const Tensor2& y, const Tensor2& upstream, Tensor2* dx) {
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const double* yr = y.row(i);
    const double* ur = upstream.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < y.cols(); ++j) dot += yr[j] * ur[j];
    double* drow = dx->row(i);
    for (std::size_t j = 0; j < y.cols(); ++j) drow[j] += yr[j] * (ur[j] - dot);
  }
}

Tensor2 layer_norm(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                   LayerNormCache* cache) {
  if (gain.rows() != 1 || gain.cols() != x.cols() || !gain.same_shape(bias))
    fail(ErrorKind::Dimension, "layer_norm: gain/bias must be 1 x cols");
  const std::size_t c = x.cols();
  Tensor2 out(x.rows(), c);
  if (cache) {
    cache->xhat = Tensor2(x.rows(), c);
    cache->inv_std.assign(x.rows(), 0.0);
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xr = x.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += xr[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    double* orow = out.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (xr[j] - mean) * inv_std;
      if (cache) cache->xhat(i, j) = xh;
      orow[j] = xh * gain(0, j) + bias(0, j);
    }
    if (cache) cache->inv_std[i] = inv_std;
  }
  return out;
}

void layer_norm_backward(const LayerNormCache& cache, const Tensor2& gain,
                         const Tensor2& upstream, Tensor2* dx, Tensor2* dgain,
                         Tensor2* dbias) {
  const std::size_t c = cache.xhat.cols();
  const double n = static_cast<double>(c);
  for (std::size_t i = 0; i < cache.xhat.rows(); ++i) {
    const double* xh = cache.xhat.row(i);
    const double* ur = upstream.row(i);
    double sum_g = 0.0;   // sum of gain*upstream
    double sum_gx = 0.0;  // sum of gain*upstream*xhat
    for (std::size_t j = 0; j < c; ++j) {
      const double g = ur[j] * gain(0, j);
      sum_g += g;
      sum_gx += g * xh[j];
      if (dgain) (*dgain)(0, j) += ur[j] * xh[j];
      if (dbias) (*dbias)(0, j) += ur[j];
    }
    if (dx) {
      double* drow = dx->row(i);
      const double inv_std = cache.inv_std[i];
      for (std::size_t j = 0; j < c; ++j) {
        const double g = ur[j] * gain(0, j);
        drow[j] += inv_std * (g - sum_g / n - xh[j] * sum_gx / n);
      }
    }
  }
}

Tensor2 mean_rows(const Tensor2& x) {
  if (x.rows() == 0) fail(ErrorKind::Degenerate, "mean_rows: empty input");
  Tensor2 out(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) += x(i, j);
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (double& v : out.data()) v *= inv;
  return out;
}

void mean_rows_backward(std::size_t rows, const Tensor2& upstream, Tensor2* dx) {
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < upstream.cols(); ++j)
      (*dx)(i, j) += upstream(0, j) * inv;
}

Tensor2 concat_rows(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) fail(ErrorKind::Dimension, "concat_rows: column mismatch");
  Tensor2 out(a.rows() + b.rows(), a.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + a.size());
  return out;
}

Tensor2 reverse_rows(const Tensor2& x) {
  Tensor2 out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* src = x.row(x.rows() - 1 - i);
    std::copy(src, src + x.cols(), out.row(i));
  }
  return out;
}

}  // namespace ae2::ops
