#pragma once

#include <cstddef>

#include "step/params.hpp"
#include "step/rng.hpp"
#include "step/tensor.hpp"

namespace step {

// Parameter indices and hyperparameters of the edge sampling network.
// tau is the binary-concrete temperature, q the target keep prior. The use_*
// switches implement the score ablations: a disabled score enters the
// importance logit (and the recorded batch) as zero.
struct SamplerParams {
  std::size_t rl_w = 0;  // relevance projection, (D, D)
  std::size_t s_w = 0;   // importance weight over [s_rd || s_rl || m_e], (1, 2 + D)
  double tau = 0.5;
  double q = 0.5;
  bool use_redundancy = true;
  bool use_relevance = true;
};

SamplerParams register_sampler(ParameterSet& ps, std::size_t embed_dim, Rng& rng,
                               double tau = 0.5, double q = 0.5);

// Per-edge scores of one subgraph; tensors all have length num_edges.
struct EdgeScoreBatch {
  Tensor redundancy;  // s_rd in [0, 1)
  Tensor relevance;   // s_rl in [-1, 1]
  Tensor rho;         // importance logit
  Tensor y;           // relaxed bernoulli sample in (0, 1)
  Tensor eps;         // the uniform draw behind y
};

// Redundancy of edge e: the softmax attention mass its embedding row spends
// on every *other* edge, i.e. 1 - softmax(m_e . m_f over f)[e]. An edge whose
// embedding is well covered by the rest of the subgraph scores near 1.
Tensor redundancy_scores(const Tensor& M);

// Accumulates d(loss)/dM given d(loss)/ds_rd; the softmax is recomputed from
// M rather than cached (the E x E matrix is the memory hot spot).
void redundancy_backward(const Tensor& M, const Tensor& grad_s, Tensor* grad_M);

// Relevance of edge e: cosine between the projected embedding W_rl m_e and
// the graph representation. A near-zero projection or graph vector carries no
// signal and scores exactly 0. `proj` (optional) receives the projected rows.
Tensor relevance_scores(const ParameterSet& ps, const SamplerParams& sp, const Tensor& M,
                        const Tensor& z_g, Tensor* proj);

void relevance_backward(const ParameterSet& ps, const SamplerParams& sp, const Tensor& M,
                        const Tensor& z_g, const Tensor& proj, const Tensor& grad_s,
                        GradBuffer& sink, Tensor* grad_M, Tensor* grad_zg);

// Importance logit rho_e = W_s (s_rd || s_rl || m_e).
Tensor importance_logits(const ParameterSet& ps, const SamplerParams& sp,
                         const Tensor& s_rd, const Tensor& s_rl, const Tensor& M);

void importance_backward(const ParameterSet& ps, const SamplerParams& sp,
                         const Tensor& s_rd, const Tensor& s_rl, const Tensor& M,
                         const Tensor& grad_rho, GradBuffer& sink, Tensor* grad_srd,
                         Tensor* grad_srl, Tensor* grad_M);

// Binary-concrete relaxation: y = sigmoid((log e - log(1-e) + rho) / tau)
// with e ~ Uniform(0,1) clamped to [1e-10, 1-1e-10]. Gradient flows through
// rho only; P(y > 0.5) = sigmoid(rho) exactly.
double concrete_sample_one(double rho, double tau, Rng& rng, double* eps_out);
void concrete_sample(const Tensor& rho, double tau, Rng& rng, Tensor* y, Tensor* eps);

// Replays y from a stored draw (resume paths re-derive y without touching rng).
double concrete_replay(double rho, double tau, double eps);

struct ScoreCache {
  Tensor proj;  // (E, D) relevance projections
};

// Full scoring pipeline for one subgraph: redundancy and relevance from the
// edge embeddings M and graph vector z_g, importance logits, then one relaxed
// sample per edge. Empty subgraphs produce an empty batch.
EdgeScoreBatch score_subgraph(const ParameterSet& ps, const SamplerParams& sp,
                              const Tensor& M, const Tensor& z_g, Rng& rng,
                              ScoreCache* cache);

// Same pipeline with the uniform draws supplied instead of drawn — replays a
// previous scoring bitwise-identically (recompute passes, resume).
EdgeScoreBatch score_subgraph_replay(const ParameterSet& ps, const SamplerParams& sp,
                                     const Tensor& M, const Tensor& z_g,
                                     const Tensor& eps, ScoreCache* cache);

// Reverse pass of score_subgraph. grad_y is d(loss)/dy; grad_rho_extra (may
// be null) adds a direct d(loss)/drho term. Parameter gradients accumulate
// into sink; grad_M and grad_zg (may be null) collect upstream gradients.
void score_subgraph_backward(const ParameterSet& ps, const SamplerParams& sp,
                             const Tensor& M, const Tensor& z_g,
                             const EdgeScoreBatch& batch, const ScoreCache& cache,
                             const Tensor& grad_y, const Tensor* grad_rho_extra,
                             GradBuffer& sink, Tensor* grad_M, Tensor* grad_zg);

}  // namespace step
