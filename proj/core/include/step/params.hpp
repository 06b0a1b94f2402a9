#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "step/tensor.hpp"

namespace step {

// All learnable tensors of a model, addressed by path ("encoder.layer0.msg_w"),
// each with a parallel gradient accumulator. Entry order is the canonical
// serialization order.
class ParameterSet {
 public:
  struct Entry {
    std::string path;
    Tensor value;
    Tensor grad;
  };

  // Registers a parameter; the gradient starts zeroed. Duplicate paths throw.
  std::size_t add(const std::string& path, Tensor value);

  std::size_t count() const { return entries_.size(); }
  bool has(const std::string& path) const { return index_.count(path) > 0; }
  std::size_t index_of(const std::string& path) const;

  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }

  Tensor& value(const std::string& path) { return entries_[index_of(path)].value; }
  const Tensor& value(const std::string& path) const { return entries_[index_of(path)].value; }
  Tensor& grad(const std::string& path) { return entries_[index_of(path)].grad; }
  const Tensor& grad(const std::string& path) const { return entries_[index_of(path)].grad; }

  void zero_grads();
  std::size_t total_size() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gradient contributions with the same layout as a ParameterSet; used to
// accumulate per-worker results before the deterministic in-order reduce.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParameterSet& params);

  Tensor& grad(std::size_t i) { return grads_[i]; }
  const Tensor& grad(std::size_t i) const { return grads_[i]; }
  std::size_t count() const { return grads_.size(); }

  void zero();
  // params.grad[i] += this->grad[i] for all i.
  void reduce_into(ParameterSet& params) const;

 private:
  std::vector<Tensor> grads_;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates per parameter plus the shared step counter.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const ParameterSet& params, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  Tensor& m(std::size_t i) { return m_[i]; }
  Tensor& v(std::size_t i) { return v_[i]; }
  const Tensor& m(std::size_t i) const { return m_[i]; }
  const Tensor& v(std::size_t i) const { return v_[i]; }

  void set_step(std::int64_t s) { step_ = s; }

 private:
  friend void adam_step(ParameterSet&, AdamState&);
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// One bias-corrected Adam update from the accumulated gradients; zeroes the
// gradients afterwards. Throws NumericError naming the parameter if a
// gradient is non-finite.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace step
