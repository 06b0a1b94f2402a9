#include "step/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "step/errors.hpp"
#include "step/nn.hpp"

namespace step {
namespace {

constexpr double kNormFloor = 1e-12;  // below this a cosine is defined as 0
constexpr double kEpsClamp = 1e-10;   // keeps the logistic noise within ~±23

Tensor similarity_matrix(const Tensor& M) {
  const std::size_t E = M.dim(0);
  const std::size_t D = M.dim(1);
  Tensor sim({E, E});
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t f = 0; f <= e; ++f) {
      const double s = dot(M.row(e), M.row(f), D);
      sim.at(e, f) = s;
      sim.at(f, e) = s;
    }
  }
  return sim;
}

}  // namespace

SamplerParams register_sampler(ParameterSet& ps, std::size_t embed_dim, Rng& rng,
                               double tau, double q) {
  if (!(tau > 0.0)) throw DataError("sampler temperature must be > 0");
  if (!(q > 0.0 && q < 1.0)) throw DataError("sampler prior must lie in (0, 1)");
  SamplerParams sp;
  sp.tau = tau;
  sp.q = q;
  Tensor rw({embed_dim, embed_dim});
  glorot_init(rw, embed_dim, embed_dim, rng);
  sp.rl_w = ps.add("sampler.rl_w", std::move(rw));
  Tensor sw({1, 2 + embed_dim});
  glorot_init(sw, 2 + embed_dim, 1, rng);
  sp.s_w = ps.add("sampler.s_w", std::move(sw));
  return sp;
}

Tensor redundancy_scores(const Tensor& M) {
  const std::size_t E = M.dim(0);
  if (E == 0) throw DataError("redundancy_scores: no edges");
  const Tensor attn = row_softmax(similarity_matrix(M));
  Tensor s({E});
  for (std::size_t e = 0; e < E; ++e) s[e] = 1.0 - attn.at(e, e);
  return s;
}

void redundancy_backward(const Tensor& M, const Tensor& grad_s, Tensor* grad_M) {
  const std::size_t E = M.dim(0);
  const std::size_t D = M.dim(1);
  const Tensor attn = row_softmax(similarity_matrix(M));
  Tensor g_attn = Tensor::zeros({E, E});
  for (std::size_t e = 0; e < E; ++e) g_attn.at(e, e) = -grad_s[e];
  Tensor g_sim = Tensor::zeros({E, E});
  row_softmax_backward(attn, g_attn, &g_sim);
  // sim[e][f] = m_e . m_f, so m_e collects g_sim from its row and column.
  for (std::size_t e = 0; e < E; ++e) {
    double* gm = grad_M->row(e);
    for (std::size_t f = 0; f < E; ++f) {
      const double g = g_sim.at(e, f) + g_sim.at(f, e);
      if (g == 0.0) continue;
      const double* mf = M.row(f);
      for (std::size_t i = 0; i < D; ++i) gm[i] += g * mf[i];
    }
  }
}

Tensor relevance_scores(const ParameterSet& ps, const SamplerParams& sp, const Tensor& M,
                        const Tensor& z_g, Tensor* proj) {
  const std::size_t E = M.dim(0);
  const std::size_t D = M.dim(1);
  Tensor local;
  Tensor& p = proj != nullptr ? *proj : local;
  p = affine(M, ps.entry(sp.rl_w).value, nullptr);
  const double zg_norm = std::sqrt(dot(z_g.data(), z_g.data(), D));
  Tensor s({E});
  for (std::size_t e = 0; e < E; ++e) {
    const double* pe = p.row(e);
    const double pn = std::sqrt(dot(pe, pe, D));
    if (pn < kNormFloor || zg_norm < kNormFloor) {
      s[e] = 0.0;
    } else {
      s[e] = dot(pe, z_g.data(), D) / (pn * zg_norm);
    }
  }
  return s;
}

void relevance_backward(const ParameterSet& ps, const SamplerParams& sp, const Tensor& M,
                        const Tensor& z_g, const Tensor& proj, const Tensor& grad_s,
                        GradBuffer& sink, Tensor* grad_M, Tensor* grad_zg) {
  const std::size_t E = M.dim(0);
  const std::size_t D = M.dim(1);
  const double zg_norm = std::sqrt(dot(z_g.data(), z_g.data(), D));
  Tensor g_proj = Tensor::zeros({E, D});
  for (std::size_t e = 0; e < E; ++e) {
    const double g = grad_s[e];
    if (g == 0.0) continue;
    const double* pe = proj.row(e);
    const double pn = std::sqrt(dot(pe, pe, D));
    if (pn < kNormFloor || zg_norm < kNormFloor) continue;  // flat region
    const double d = dot(pe, z_g.data(), D);
    const double inv = 1.0 / (pn * zg_norm);
    double* gp = g_proj.row(e);
    for (std::size_t i = 0; i < D; ++i) {
      gp[i] += g * (z_g[i] * inv - d * pe[i] / (pn * pn) * inv);
    }
    if (grad_zg != nullptr) {
      for (std::size_t i = 0; i < D; ++i) {
        (*grad_zg)[i] += g * (pe[i] * inv - d * z_g[i] / (zg_norm * zg_norm) * inv);
      }
    }
  }
  affine_backward(M, ps.entry(sp.rl_w).value, g_proj, grad_M, &sink.grad(sp.rl_w),
                  nullptr);
}

Tensor importance_logits(const ParameterSet& ps, const SamplerParams& sp,
                         const Tensor& s_rd, const Tensor& s_rl, const Tensor& M) {
  const std::size_t E = M.dim(0);
  const std::size_t D = M.dim(1);
  const Tensor& w = ps.entry(sp.s_w).value;  // (1, 2 + D)
  const double* wd = w.data();
  Tensor rho({E});
  for (std::size_t e = 0; e < E; ++e) {
    rho[e] = wd[0] * s_rd[e] + wd[1] * s_rl[e] + dot(wd + 2, M.row(e), D);
  }
  return rho;
}

void importance_backward(const ParameterSet& ps, const SamplerParams& sp,
                         const Tensor& s_rd, const Tensor& s_rl, const Tensor& M,
                         const Tensor& grad_rho, GradBuffer& sink, Tensor* grad_srd,
                         Tensor* grad_srl, Tensor* grad_M) {
  const std::size_t E = M.dim(0);
  const std::size_t D = M.dim(1);
  const double* wd = ps.entry(sp.s_w).value.data();
  double* gw = sink.grad(sp.s_w).data();
  for (std::size_t e = 0; e < E; ++e) {
    const double g = grad_rho[e];
    if (grad_srd != nullptr) (*grad_srd)[e] += g * wd[0];
    if (grad_srl != nullptr) (*grad_srl)[e] += g * wd[1];
    gw[0] += g * s_rd[e];
    gw[1] += g * s_rl[e];
    const double* me = M.row(e);
    double* gm = grad_M != nullptr ? grad_M->row(e) : nullptr;
    for (std::size_t i = 0; i < D; ++i) {
      gw[2 + i] += g * me[i];
      if (gm != nullptr) gm[i] += g * wd[2 + i];
    }
  }
}

double concrete_sample_one(double rho, double tau, Rng& rng, double* eps_out) {
  const double eps = std::clamp(rng.uniform(), kEpsClamp, 1.0 - kEpsClamp);
  if (eps_out != nullptr) *eps_out = eps;
  return concrete_replay(rho, tau, eps);
}

void concrete_sample(const Tensor& rho, double tau, Rng& rng, Tensor* y, Tensor* eps) {
  const std::size_t E = rho.size();
  *y = Tensor({E});
  *eps = Tensor({E});
  for (std::size_t e = 0; e < E; ++e) {
    (*y)[e] = concrete_sample_one(rho[e], tau, rng, &(*eps)[e]);
  }
}

double concrete_replay(double rho, double tau, double eps) {
  const double noise = std::log(eps) - std::log1p(-eps);
  return sigmoid((noise + rho) / tau);
}

EdgeScoreBatch score_subgraph(const ParameterSet& ps, const SamplerParams& sp,
                              const Tensor& M, const Tensor& z_g, Rng& rng,
                              ScoreCache* cache) {
  const std::size_t E = M.rank() == 2 ? M.dim(0) : 0;
  Tensor eps({E});
  for (std::size_t e = 0; e < E; ++e) {
    eps[e] = std::clamp(rng.uniform(), kEpsClamp, 1.0 - kEpsClamp);
  }
  return score_subgraph_replay(ps, sp, M, z_g, eps, cache);
}

EdgeScoreBatch score_subgraph_replay(const ParameterSet& ps, const SamplerParams& sp,
                                     const Tensor& M, const Tensor& z_g,
                                     const Tensor& eps, ScoreCache* cache) {
  EdgeScoreBatch batch;
  const std::size_t E = M.rank() == 2 ? M.dim(0) : 0;
  if (E == 0) {
    batch.redundancy = Tensor({0});
    batch.relevance = Tensor({0});
    batch.rho = Tensor({0});
    batch.y = Tensor({0});
    batch.eps = Tensor({0});
    return batch;
  }
  batch.redundancy = sp.use_redundancy ? redundancy_scores(M) : Tensor::zeros({E});
  batch.relevance =
      sp.use_relevance
          ? relevance_scores(ps, sp, M, z_g, cache != nullptr ? &cache->proj : nullptr)
          : Tensor::zeros({E});
  batch.rho = importance_logits(ps, sp, batch.redundancy, batch.relevance, M);
  batch.eps = eps;
  batch.y = Tensor({E});
  for (std::size_t e = 0; e < E; ++e) {
    batch.y[e] = concrete_replay(batch.rho[e], sp.tau, eps[e]);
  }
  return batch;
}

void score_subgraph_backward(const ParameterSet& ps, const SamplerParams& sp,
                             const Tensor& M, const Tensor& z_g,
                             const EdgeScoreBatch& batch, const ScoreCache& cache,
                             const Tensor& grad_y, const Tensor* grad_rho_extra,
                             GradBuffer& sink, Tensor* grad_M, Tensor* grad_zg) {
  const std::size_t E = batch.y.size();
  if (E == 0) return;
  // dy/drho = y (1 - y) / tau; eps is a constant of the draw.
  Tensor g_rho({E});
  for (std::size_t e = 0; e < E; ++e) {
    const double y = batch.y[e];
    g_rho[e] = grad_y[e] * y * (1.0 - y) / sp.tau;
    if (grad_rho_extra != nullptr) g_rho[e] += (*grad_rho_extra)[e];
  }
  Tensor g_srd = Tensor::zeros({E});
  Tensor g_srl = Tensor::zeros({E});
  importance_backward(ps, sp, batch.redundancy, batch.relevance, M, g_rho, sink, &g_srd,
                      &g_srl, grad_M);
  if (sp.use_relevance) {
    relevance_backward(ps, sp, M, z_g, cache.proj, g_srl, sink, grad_M, grad_zg);
  }
  if (sp.use_redundancy) redundancy_backward(M, g_srd, grad_M);
}

}  // namespace step
