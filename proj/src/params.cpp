#include "params.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rng.hpp"

namespace ae2 {

std::size_t ParamStore::add_block(const std::string& name, std::size_t rows,
                                  std::size_t cols) {
  for (const Block& b : blocks_)
    if (b.name == name) fail(ErrorKind::Config, "duplicate parameter block: " + name);
  blocks_.push_back({name, Tensor2(rows, cols), Tensor2(rows, cols), total_});
  total_ += rows * cols;
  return blocks_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return i;
  fail(ErrorKind::Config, "unknown parameter block: " + name);
}

void ParamStore::zero_grad() {
  for (Block& b : blocks_) b.grad.zero();
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> out;
  out.reserve(total_);
  for (const Block& b : blocks_)
    out.insert(out.end(), b.value.data().begin(), b.value.data().end());
  return out;
}

std::vector<double> ParamStore::flatten_grad() const {
  std::vector<double> out;
  out.reserve(total_);
  for (const Block& b : blocks_)
    out.insert(out.end(), b.grad.data().begin(), b.grad.data().end());
  return out;
}

void ParamStore::assign_flat(std::span<const double> flat) {
  if (flat.size() != total_)
    fail(ErrorKind::Dimension, "assign_flat: length mismatch");
  std::size_t pos = 0;
  for (Block& b : blocks_) {
    std::copy(flat.begin() + pos, flat.begin() + pos + b.value.size(),
              b.value.data().begin());
    pos += b.value.size();
  }
}

const ParamStore::Block& ParamStore::locate(std::size_t flat_index,
                                            std::size_t* within) const {
  if (flat_index >= total_) fail(ErrorKind::Dimension, "flat index out of range");
  // Blocks are few; linear scan is fine.
  for (const Block& b : blocks_) {
    if (flat_index < b.offset + b.value.size()) {
      *within = flat_index - b.offset;
      return b;
    }
  }
  fail(ErrorKind::Dimension, "flat index out of range");
}

double ParamStore::get_flat(std::size_t flat_index) const {
  std::size_t within = 0;
  const Block& b = locate(flat_index, &within);
  return b.value.data()[within];
}

void ParamStore::set_flat(std::size_t flat_index, double v) {
  if (flat_index >= total_) fail(ErrorKind::Dimension, "flat index out of range");
  for (Block& b : blocks_) {
    if (flat_index < b.offset + b.value.size()) {
      b.value.data()[flat_index - b.offset] = v;
      return;
    }
  }
}

AdamState::AdamState(const ParamStore& params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.block_count());
  v_.reserve(params.block_count());
  for (std::size_t i = 0; i < params.block_count(); ++i) {
    m_.emplace_back(params.value(i).rows(), params.value(i).cols());
    v_.emplace_back(params.value(i).rows(), params.value(i).cols());
  }
}

void AdamState::step(ParamStore& params) {
  if (m_.size() != params.block_count())
    fail(ErrorKind::Dimension, "AdamState: block count changed");
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  const double decay = 1.0 - cfg_.lr * cfg_.weight_decay;
  for (std::size_t b = 0; b < params.block_count(); ++b) {
    const Tensor2& g = params.grad(b);
    if (!g.all_finite())
      fail(ErrorKind::Numeric, "non-finite gradient in block '" + params.name(b) + "'");
    Tensor2& p = params.value(b);
    Tensor2& m = m_[b];
    Tensor2& v = v_[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.data()[i];
      m.data()[i] = cfg_.beta1 * m.data()[i] + (1.0 - cfg_.beta1) * gi;
      v.data()[i] = cfg_.beta2 * v.data()[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m.data()[i] / bc1;
      const double vhat = v.data()[i] / bc2;
      p.data()[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      p.data()[i] *= decay;
    }
  }
  params.zero_grad();
}

double grad_check(ParamStore& params, const ScalarFn& f, double h,
                  std::size_t max_probes, std::uint64_t seed) {
  if (h <= 0.0) fail(ErrorKind::Config, "grad_check: h must be positive");
  params.zero_grad();
  const double base = f(params, true);
  if (!std::isfinite(base)) fail(ErrorKind::Numeric, "grad_check: non-finite loss");
  const std::vector<double> analytic = params.flatten_grad();

  std::vector<std::size_t> probes(params.param_count());
  std::iota(probes.begin(), probes.end(), 0);
  if (probes.size() > max_probes) {
    auto rng = make_rng(seed, "grad_check");
    // Partial Fisher-Yates: the first max_probes entries become the sample.
    for (std::size_t i = 0; i < max_probes; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, probes.size() - 1);
      std::swap(probes[i], probes[pick(rng)]);
    }
    probes.resize(max_probes);
  }

  double max_rel = 0.0;
  for (std::size_t idx : probes) {
    const double orig = params.get_flat(idx);
    params.set_flat(idx, orig + h);
    const double fp = f(params, false);
    params.set_flat(idx, orig - h);
    const double fm = f(params, false);
    params.set_flat(idx, orig);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      fail(ErrorKind::Numeric, "grad_check: non-finite perturbed loss");
    const double numeric = (fp - fm) / (2.0 * h);
    const double rel = std::abs(analytic[idx] - numeric) /
                       std::max(1e-8, std::abs(analytic[idx]) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace ae2
