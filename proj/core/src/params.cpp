#include "step/params.hpp"

#include <cmath>
#include <stdexcept>

#include "step/errors.hpp"

namespace step {

std::size_t ParameterSet::add(const std::string& path, Tensor value) {
  if (index_.count(path)) {
    throw std::invalid_argument("ParameterSet: duplicate path " + path);
  }
  const std::size_t i = entries_.size();
  Tensor grad = Tensor::zeros(value.shape());
  entries_.push_back(Entry{path, std::move(value), std::move(grad)});
  index_[path] = i;
  return i;
}

std::size_t ParameterSet::index_of(const std::string& path) const {
  auto it = index_.find(path);
  if (it == index_.end()) {
    throw std::invalid_argument("ParameterSet: unknown path " + path);
  }
  return it->second;
}

void ParameterSet::zero_grads() {
  for (auto& e : entries_) e.grad.zero();
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

GradBuffer::GradBuffer(const ParameterSet& params) {
  grads_.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    grads_.push_back(Tensor::zeros(params.entry(i).value.shape()));
  }
}

void GradBuffer::zero() {
  for (auto& g : grads_) g.zero();
}

void GradBuffer::reduce_into(ParameterSet& params) const {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    params.entry(i).grad.add(grads_[i]);
  }
}

AdamState::AdamState(const ParameterSet& params, AdamConfig config) : config_(config) {
  m_.reserve(params.count());
  v_.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    m_.push_back(Tensor::zeros(params.entry(i).value.shape()));
    v_.push_back(Tensor::zeros(params.entry(i).value.shape()));
  }
}

void adam_step(ParameterSet& params, AdamState& state) {
  const AdamConfig& c = state.config_;
  state.step_ += 1;
  const double t = static_cast<double>(state.step_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto& e = params.entry(i);
    if (!e.grad.all_finite()) {
      throw NumericError("adam_step: non-finite gradient for " + e.path);
    }
    Tensor& m = state.m_[i];
    Tensor& v = state.v_[i];
    for (std::size_t k = 0; k < e.value.size(); ++k) {
      const double g = e.grad[k];
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g;
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      e.value[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
    e.grad.zero();
  }
}

}  // namespace step
