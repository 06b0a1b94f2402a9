#pragma once

#include <vector>

#include "step/tensor.hpp"

namespace step {

// Self-supervised objectives. Every function returns the scalar loss and
// ACCUMULATES (+=) analytic gradients into any non-null output.

// InfoNCE over dot-product similarities. The positive pair sits in the
// denominator by default (standard form, keeps the loss >= 0); with
// include_positive false the denominator sums negatives only. Stabilized
// with log-sum-exp. g_negatives, when non-empty, must match negatives.
double loss_contrastive(const Tensor& anchor, const Tensor& positive,
                        const std::vector<const Tensor*>& negatives,
                        bool include_positive, Tensor* g_anchor, Tensor* g_positive,
                        const std::vector<Tensor*>& g_negatives);

// Self-distillation BCE: mean over edges of -[y log P + (1-y) log(1-P)].
// P is clamped to [1e-7, 1-1e-7]; y are constants (the teacher is not
// chased), so there is no gradient output for them.
double loss_distill(const Tensor& p, const Tensor& y, Tensor* grad_p);

// Bernoulli moment matching: |mean(y) - q| + |var(y) - q(1-q)| with batch
// empirical moments (var = mean(y^2) - mean(y)^2).
double loss_bernoulli(const Tensor& y, double q, Tensor* grad_y);

// Mean absolute value (mean, not sum, so the weight is batch-size stable).
double loss_l1(const Tensor& v, Tensor* grad_v);

}  // namespace step
