#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace ae2 {

// Named parameter blocks, each paired with a gradient buffer of identical
// shape. Blocks keep their registration order, which fixes the layout of the
// flat vector view used by checkpoints and by the finite-difference checker.
class ParamStore {
 public:
  std::size_t add_block(const std::string& name, std::size_t rows, std::size_t cols);

  std::size_t block_count() const { return blocks_.size(); }
  const std::string& name(std::size_t idx) const { return blocks_[idx].name; }
  std::size_t index_of(const std::string& name) const;

  Tensor2& value(std::size_t idx) { return blocks_[idx].value; }
  const Tensor2& value(std::size_t idx) const { return blocks_[idx].value; }
  Tensor2& grad(std::size_t idx) { return blocks_[idx].grad; }
  const Tensor2& grad(std::size_t idx) const { return blocks_[idx].grad; }

  std::size_t param_count() const { return total_; }
  void zero_grad();

  // Flat views over all blocks in registration order.
  std::vector<double> flatten() const;
  std::vector<double> flatten_grad() const;
  void assign_flat(std::span<const double> flat);
  double get_flat(std::size_t flat_index) const;
  void set_flat(std::size_t flat_index, double v);

 private:
  struct Block {
    std::string name;
    Tensor2 value;
    Tensor2 grad;
    std::size_t offset;  // into the flat view
  };
  std::vector<Block> blocks_;
  std::size_t total_ = 0;

  const Block& locate(std::size_t flat_index, std::size_t* within) const;
};

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction followed by decoupled weight decay
// (params *= 1 - lr*wd). Gradients are zeroed after each step.
class AdamState {
 public:
  AdamState(const ParamStore& params, AdamConfig cfg);
  void step(ParamStore& params);
  std::uint64_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<Tensor2> m_;
  std::vector<Tensor2> v_;
};

// Scalar function of the parameters; `with_grad` asks it to accumulate
// gradients into the store (store.zero_grad() is the caller's job).
using ScalarFn = std::function<double(ParamStore&, bool with_grad)>;

// Central-difference gradient check: returns the max relative error
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|) over a sampled
// subset of at most `max_probes` parameters.
double grad_check(ParamStore& params, const ScalarFn& f, double h,
                  std::size_t max_probes, std::uint64_t seed);

}  // namespace ae2
