#include "step/losses.hpp"

#include <algorithm>
#include <cmath>

#include "step/errors.hpp"
#include "step/nn.hpp"

namespace step {

double loss_contrastive(const Tensor& anchor, const Tensor& positive,
                        const std::vector<const Tensor*>& negatives,
                        bool include_positive, Tensor* g_anchor, Tensor* g_positive,
                        const std::vector<Tensor*>& g_negatives) {
  if (negatives.empty()) throw DataError("loss_contrastive: no negatives");
  if (!g_negatives.empty() && g_negatives.size() != negatives.size()) {
    throw DataError("loss_contrastive: gradient list does not match negatives");
  }
  const std::size_t D = anchor.size();
  const std::size_t n_neg = negatives.size();

  const double s_pos = dot(anchor.data(), positive.data(), D);
  std::vector<double> s_neg(n_neg);
  for (std::size_t j = 0; j < n_neg; ++j) {
    s_neg[j] = dot(anchor.data(), negatives[j]->data(), D);
  }

  // log-sum-exp over the denominator set.
  double max_s = include_positive ? s_pos : s_neg[0];
  for (double s : s_neg) max_s = std::max(max_s, s);
  double sum = include_positive ? std::exp(s_pos - max_s) : 0.0;
  for (double s : s_neg) sum += std::exp(s - max_s);
  const double lse = max_s + std::log(sum);
  const double loss = lse - s_pos;

  if (g_anchor != nullptr || g_positive != nullptr || !g_negatives.empty()) {
    // d(loss)/ds_j is the softmax weight of each denominator term; the
    // positive additionally gets the -1 from the numerator.
    const double w_pos = include_positive ? std::exp(s_pos - lse) : 0.0;
    const double d_pos = w_pos - 1.0;
    if (g_anchor != nullptr) {
      for (std::size_t i = 0; i < D; ++i) (*g_anchor)[i] += d_pos * positive[i];
    }
    if (g_positive != nullptr) {
      for (std::size_t i = 0; i < D; ++i) (*g_positive)[i] += d_pos * anchor[i];
    }
    for (std::size_t j = 0; j < n_neg; ++j) {
      const double w = std::exp(s_neg[j] - lse);
      if (g_anchor != nullptr) {
        const double* zn = negatives[j]->data();
        for (std::size_t i = 0; i < D; ++i) (*g_anchor)[i] += w * zn[i];
      }
      if (!g_negatives.empty() && g_negatives[j] != nullptr) {
        for (std::size_t i = 0; i < D; ++i) (*g_negatives[j])[i] += w * anchor[i];
      }
    }
  }
  return loss;
}

double loss_distill(const Tensor& p, const Tensor& y, Tensor* grad_p) {
  constexpr double kClamp = 1e-7;
  if (p.size() != y.size()) throw DataError("loss_distill: length mismatch");
  const std::size_t n = p.size();
  if (n == 0) throw DataError("loss_distill: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = std::clamp(p[i], kClamp, 1.0 - kClamp);
    loss += -(y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc));
    if (grad_p != nullptr && p[i] > kClamp && p[i] < 1.0 - kClamp) {
      (*grad_p)[i] += inv_n * (-y[i] / pc + (1.0 - y[i]) / (1.0 - pc));
    }
  }
  return loss * inv_n;
}

double loss_bernoulli(const Tensor& y, double q, Tensor* grad_y) {
  const std::size_t n = y.size();
  if (n == 0) throw DataError("loss_bernoulli: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  double mean = 0.0;
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += y[i];
    mean_sq += y[i] * y[i];
  }
  mean *= inv_n;
  mean_sq *= inv_n;
  const double var = mean_sq - mean * mean;
  const double d_mean = mean - q;
  const double d_var = var - q * (1.0 - q);
  const double loss = std::abs(d_mean) + std::abs(d_var);
  if (grad_y != nullptr) {
    const double s1 = d_mean > 0.0 ? 1.0 : (d_mean < 0.0 ? -1.0 : 0.0);
    const double s2 = d_var > 0.0 ? 1.0 : (d_var < 0.0 ? -1.0 : 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      (*grad_y)[i] += s1 * inv_n + s2 * 2.0 * (y[i] - mean) * inv_n;
    }
  }
  return loss;
}

double loss_l1(const Tensor& v, Tensor* grad_v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    loss += std::abs(v[i]);
    if (grad_v != nullptr) {
      (*grad_v)[i] += v[i] > 0.0 ? inv_n : (v[i] < 0.0 ? -inv_n : 0.0);
    }
  }
  return loss * inv_n;
}

}  // namespace step
