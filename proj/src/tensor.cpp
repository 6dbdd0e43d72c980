#include "tensor.hpp"

#include <algorithm>
#include <cmath>

namespace ae2 {

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Tensor2 t(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) fail(ErrorKind::Dimension, "from_rows: ragged rows");
    std::copy(row.begin(), row.end(), t.row(i));
    ++i;
  }
  return t;
}

bool Tensor2::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor2& Tensor2::operator+=(const Tensor2& o) {
  if (!same_shape(o)) fail(ErrorKind::Dimension, "Tensor2 +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor2& Tensor2::operator-=(const Tensor2& o) {
  if (!same_shape(o)) fail(ErrorKind::Dimension, "Tensor2 -=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor2& Tensor2::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

}  // namespace ae2
