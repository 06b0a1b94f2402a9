#include "step/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "step/errors.hpp"
#include "step/losses.hpp"
#include "step/rng.hpp"

namespace step {
namespace {

// Substream tags; every random draw in training derives from
// (config.seed, purpose, ordinal) so trajectories are reproducible and
// independent of worker count.
constexpr std::uint64_t kTagInit = 0x696e6974;    // parameter init
constexpr std::uint64_t kTagSplit = 0x73706c6974; // holdout split
constexpr std::uint64_t kTagEpoch = 0x65706f6368; // epoch shuffle
constexpr std::uint64_t kTagEval = 0x6576616c;    // evaluation stream

std::uint64_t step_seed_for(const TrainConfig& cfg, std::int64_t global_step) {
  return mix64(cfg.seed, static_cast<std::uint64_t>(global_step));
}

// Everything one root contributes to the batch loss; caches are filled only
// on the gradient pass.
struct RootForward {
  TemporalSubgraph sub;
  Tensor z;         // unmasked node embeddings (n, D)
  Tensor z_g;       // graph vector of the intact subgraph (the positive)
  Tensor m;         // edge embeddings (E, D)
  EdgeScoreBatch scores;
  Tensor z_masked;
  Tensor z_g_masked;  // graph vector under the soft mask (the anchor)
  Tensor p;           // graph-less pruner scores (E)

  EncodeCache enc_cache;
  EdgeEmbedCache edge_cache;
  ScoreCache score_cache;
  EncodeCache masked_cache;
  PrunerCache pruner_cache;

  TemporalSubgraph neg_sub;  // random_drop negatives only
  Tensor z_neg;
  Tensor z_g_neg;
  EncodeCache neg_cache;
};

double root_ref_time(const TemporalGraph& g, NodeId root) {
  const auto& inc = g.incident(root);
  if (inc.empty()) throw DataError("root " + std::to_string(root) + " has no events");
  // Just past the newest interaction, so it is visible under strict "< t".
  return std::nextafter(g.event(inc.back()).timestamp,
                        std::numeric_limits<double>::infinity());
}

void forward_root(const TemporalGraph& g, const ModelState& st, NodeId root,
                  std::uint64_t rseed, bool with_caches, const Tensor* replay_eps,
                  RootForward& rf) {
  const TrainConfig& cfg = st.config;
  const ParameterSet& ps = st.params;
  rf.sub = sample_subgraph(g, root, root_ref_time(g, root), cfg.depth, cfg.fanout,
                           cfg.strategy, mix64(rseed, 1));
  rf.z = node_embed(ps, st.encoder, rf.sub, nullptr,
                    with_caches ? &rf.enc_cache : nullptr);
  rf.z_g = graph_repr(rf.z, cfg.pool);
  rf.m = edge_embed_all(ps, st.encoder, rf.sub, rf.z,
                        with_caches ? &rf.edge_cache : nullptr);
  ScoreCache* sc = with_caches ? &rf.score_cache : nullptr;
  if (replay_eps != nullptr) {
    rf.scores = score_subgraph_replay(ps, st.sampler, rf.m, rf.z_g, *replay_eps, sc);
  } else {
    Rng rng(mix64(rseed, 2));
    rf.scores = score_subgraph(ps, st.sampler, rf.m, rf.z_g, rng, sc);
  }
  rf.z_masked = node_embed(ps, st.encoder, rf.sub, &rf.scores.y,
                           with_caches ? &rf.masked_cache : nullptr);
  rf.z_g_masked = graph_repr(rf.z_masked, cfg.pool);
  rf.p = score_edges(ps, st.pruner, st.encoder, rf.sub,
                     with_caches ? &rf.pruner_cache : nullptr);
  if (cfg.neg_policy == NegativePolicy::kRandomDrop) {
    rf.neg_sub = negative_view(rf.sub, cfg.drop_fraction, mix64(rseed, 3));
    rf.z_neg = node_embed(ps, st.encoder, rf.neg_sub, nullptr,
                          with_caches ? &rf.neg_cache : nullptr);
    rf.z_g_neg = graph_repr(rf.z_neg, cfg.pool);
  }
  if (!with_caches) {
    // The loss pass only needs the graph vectors and per-edge scalars; drop
    // the per-node and per-edge matrices so a whole batch stays small.
    rf.sub = TemporalSubgraph();
    rf.neg_sub = TemporalSubgraph();
    rf.z = Tensor();
    rf.m = Tensor();
    rf.z_masked = Tensor();
    rf.z_neg = Tensor();
  }
}

// Upstream loss gradients per root, all scaled by the loss weights so the
// backward pass just propagates them.
struct BatchGrads {
  std::vector<Tensor> anchor;  // d/dz_g_masked
  std::vector<Tensor> pos;     // d/dz_g
  std::vector<Tensor> neg;     // d/dz_g_neg (random_drop)
  std::vector<Tensor> p;       // d/dP
  std::vector<Tensor> y;       // d/dy (loss part; the mask path adds more)
  std::vector<Tensor> rho;     // d/drho (l1 regularizer only)
};

struct BatchLosses {
  double lc = 0.0;
  double ls = 0.0;
  double lb = 0.0;
  double total = 0.0;
};

// `distill_targets`, when given, replaces each root's relaxed samples as the
// distillation targets. The targets are detached, so a finite-difference
// probe of the loss must hold them at their base-point values; everything
// else is recomputed from the perturbed parameters.
BatchLosses assemble_losses(const std::vector<RootForward>& roots, const TrainConfig& cfg,
                            BatchGrads* grads,
                            const std::vector<Tensor>* distill_targets = nullptr) {
  const std::size_t B = roots.size();
  BatchLosses out;

  if (grads != nullptr) {
    const std::size_t D = roots[0].z_g.size();
    grads->anchor.assign(B, Tensor::zeros({D}));
    grads->pos.assign(B, Tensor::zeros({D}));
    if (cfg.neg_policy == NegativePolicy::kRandomDrop) {
      grads->neg.assign(B, Tensor::zeros({D}));
    }
    grads->p.resize(B);
    grads->y.resize(B);
    grads->rho.resize(B);
    for (std::size_t i = 0; i < B; ++i) {
      const std::size_t E = roots[i].p.size();
      grads->p[i] = Tensor::zeros({E});
      grads->y[i] = Tensor::zeros({E});
      grads->rho[i] = Tensor::zeros({E});
    }
  }

  // Contrastive term, averaged over roots. In-batch mode pits each anchor
  // against every other root's intact graph vector, so one root's positive
  // collects negative-path gradients from the whole batch.
  double lc_sum = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    std::vector<const Tensor*> negs;
    std::vector<Tensor*> g_negs;
    if (cfg.neg_policy == NegativePolicy::kInBatch) {
      for (std::size_t j = 0; j < B; ++j) {
        if (j == i) continue;
        negs.push_back(&roots[j].z_g);
        if (grads != nullptr) g_negs.push_back(&grads->pos[j]);
      }
    } else {
      negs.push_back(&roots[i].z_g_neg);
      if (grads != nullptr) g_negs.push_back(&grads->neg[i]);
    }
    lc_sum += loss_contrastive(roots[i].z_g_masked, roots[i].z_g, negs,
                               !cfg.literal_infonce,
                               grads != nullptr ? &grads->anchor[i] : nullptr,
                               grads != nullptr ? &grads->pos[i] : nullptr, g_negs);
  }
  out.lc = lc_sum / static_cast<double>(B);
  if (grads != nullptr) {
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i) {
      grads->anchor[i].scale(inv_b);
      grads->pos[i].scale(inv_b);
      if (!grads->neg.empty()) grads->neg[i].scale(inv_b);
    }
  }

  // Distillation and the regularizer run over the batch's pooled edges.
  std::size_t total_edges = 0;
  for (const RootForward& rf : roots) total_edges += rf.p.size();
  if (total_edges > 0) {
    Tensor pooled_p({total_edges});
    Tensor pooled_y({total_edges});
    Tensor pooled_rho({total_edges});
    std::size_t off = 0;
    for (const RootForward& rf : roots) {
      const std::size_t E = rf.p.size();
      for (std::size_t e = 0; e < E; ++e) {
        pooled_p[off + e] = rf.p[e];
        pooled_y[off + e] = rf.scores.y[e];
        pooled_rho[off + e] = rf.scores.rho[e];
      }
      off += E;
    }

    Tensor pooled_targets = pooled_y;
    if (distill_targets != nullptr) {
      std::size_t t_off = 0;
      for (std::size_t i = 0; i < B; ++i) {
        const Tensor& ti = (*distill_targets)[i];
        for (std::size_t e = 0; e < ti.size(); ++e) pooled_targets[t_off + e] = ti[e];
        t_off += ti.size();
      }
    }

    Tensor g_pooled_p = Tensor::zeros({total_edges});
    out.ls =
        loss_distill(pooled_p, pooled_targets, grads != nullptr ? &g_pooled_p : nullptr);

    Tensor g_pooled_reg = Tensor::zeros({total_edges});
    if (cfg.regularizer == Regularizer::kBernoulli) {
      out.lb = loss_bernoulli(pooled_y, cfg.q, grads != nullptr ? &g_pooled_reg : nullptr);
    } else {
      out.lb = loss_l1(pooled_rho, grads != nullptr ? &g_pooled_reg : nullptr);
    }

    if (grads != nullptr) {
      off = 0;
      for (std::size_t i = 0; i < B; ++i) {
        const std::size_t E = roots[i].p.size();
        for (std::size_t e = 0; e < E; ++e) {
          grads->p[i][e] += cfg.lambda1 * g_pooled_p[off + e];
          if (cfg.regularizer == Regularizer::kBernoulli) {
            grads->y[i][e] += cfg.lambda2 * g_pooled_reg[off + e];
          } else {
            grads->rho[i][e] += cfg.lambda2 * g_pooled_reg[off + e];
          }
        }
        off += E;
      }
    }
  }

  out.total = out.lc + cfg.lambda1 * out.ls + cfg.lambda2 * out.lb;
  return out;
}

void check_finite(const BatchLosses& losses) {
  if (!std::isfinite(losses.lc)) throw NumericError("non-finite contrastive loss");
  if (!std::isfinite(losses.ls)) throw NumericError("non-finite distillation loss");
  if (!std::isfinite(losses.lb)) throw NumericError("non-finite regularizer loss");
}

void backward_root(const ModelState& st, RootForward& rf, const BatchGrads& grads,
                   std::size_t i, GradBuffer& sink) {
  const TrainConfig& cfg = st.config;
  const ParameterSet& ps = st.params;
  const std::size_t n = rf.sub.num_nodes();
  const std::size_t E = rf.sub.num_edges();
  const std::size_t D = st.encoder.dims.embed;

  // Graph-less pruner: its gradient stays inside the MLP (the sampler's
  // targets are detached, the time encoder is shared read-only).
  if (E > 0) score_edges_backward(ps, st.pruner, rf.pruner_cache, grads.p[i], sink);

  // Masked encoding: the anchor gradient flows into encoder parameters and
  // into the mask, i.e. the relaxed samples.
  Tensor g_z_masked = Tensor::zeros({n, D});
  graph_repr_backward(rf.z_masked, cfg.pool, grads.anchor[i], &g_z_masked);
  Tensor g_y = grads.y[i];
  node_embed_backward(ps, st.encoder, rf.sub, &rf.scores.y, rf.masked_cache, g_z_masked,
                      sink, E > 0 ? &g_y : nullptr);

  // Sampling network, then the edge embeddings feeding it.
  Tensor g_m = Tensor::zeros({E, D});
  Tensor g_z_g = grads.pos[i];  // starts with the loss part; relevance adds to it
  if (E > 0) {
    const bool has_rho = cfg.regularizer == Regularizer::kL1;
    score_subgraph_backward(ps, st.sampler, rf.m, rf.z_g, rf.scores, rf.score_cache, g_y,
                            has_rho ? &grads.rho[i] : nullptr, sink, &g_m, &g_z_g);
  }
  Tensor g_z = Tensor::zeros({n, D});
  if (E > 0) {
    edge_embed_all_backward(ps, st.encoder, rf.sub, rf.edge_cache, g_m, sink, &g_z);
  }

  // Intact encoding closes the loop.
  graph_repr_backward(rf.z, cfg.pool, g_z_g, &g_z);
  node_embed_backward(ps, st.encoder, rf.sub, nullptr, rf.enc_cache, g_z, sink, nullptr);

  if (cfg.neg_policy == NegativePolicy::kRandomDrop) {
    Tensor g_z_neg = Tensor::zeros({rf.neg_sub.num_nodes(), D});
    graph_repr_backward(rf.z_neg, cfg.pool, grads.neg[i], &g_z_neg);
    node_embed_backward(ps, st.encoder, rf.neg_sub, nullptr, rf.neg_cache, g_z_neg, sink,
                        nullptr);
  }
}

// Runs fn(i) for i in [0, n) on up to `workers` threads, in fixed chunks so
// any follow-up reduction can stay in index order.
template <typename Fn>
void parallel_roots(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t w = static_cast<std::size_t>(workers);
  for (std::size_t start = 0; start < n; start += w) {
    std::vector<std::thread> pool;
    for (std::size_t i = start; i < std::min(n, start + w); ++i) {
      pool.emplace_back([&fn, i] { fn(i); });
    }
    for (auto& t : pool) t.join();
  }
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.neg_policy == NegativePolicy::kInBatch && cfg.batch_size < 2) {
    throw DataError("in-batch negatives need batch_size >= 2");
  }
  if (cfg.batch_size < 1) throw DataError("batch_size must be >= 1");
  if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0) throw DataError("loss weights must be >= 0");
  if (cfg.epochs < 0) throw DataError("epochs must be >= 0");
  if (cfg.depth < 0) throw DataError("depth must be >= 0");
  if (cfg.fanout < 1) throw DataError("fanout must be >= 1");
  if (!(cfg.lr > 0.0)) throw DataError("learning rate must be > 0");
  if (cfg.drop_fraction < 0.0 || cfg.drop_fraction > 1.0) {
    throw DataError("drop_fraction must lie in [0, 1]");
  }
  if (cfg.holdout_fraction < 0.0 || cfg.holdout_fraction >= 1.0) {
    throw DataError("holdout_fraction must lie in [0, 1)");
  }
  if (cfg.workers < 1) throw DataError("workers must be >= 1");
  if (cfg.embed_dim < 1 || cfg.time_dim < 1 || cfg.hidden_dim < 1) {
    throw DataError("model widths must be >= 1");
  }
}

}  // namespace

ModelState build_model(const TrainConfig& config, const EncoderDims& dims) {
  validate_config(config);
  ModelState st;
  st.config = config;
  Rng rng(mix64(config.seed, kTagInit));
  st.encoder = register_encoder(st.params, dims, rng);
  st.sampler = register_sampler(st.params, dims.embed, rng, config.tau, config.q);
  st.sampler.use_redundancy = !config.ablate_redundancy;
  st.sampler.use_relevance = !config.ablate_relevance;
  st.pruner = register_pruner(st.params, config.hidden_dim, dims.feat, dims.time, rng);
  AdamConfig adam;
  adam.lr = config.lr;
  st.adam = AdamState(st.params, adam);
  return st;
}

ModelState init_model(const TemporalGraph& g, const TrainConfig& config) {
  EncoderDims dims;
  dims.embed = config.embed_dim;
  dims.time = config.time_dim;
  dims.feat = static_cast<std::size_t>(g.feature_dim());
  dims.depth = config.depth;
  if (config.rescale_time && g.t_max() > g.t_min()) {
    dims.time_scale = 1.0 / (g.t_max() - g.t_min());
  }
  return build_model(config, dims);
}

RootSplit split_roots(const TemporalGraph& g, const TrainConfig& config) {
  std::vector<NodeId> pool;
  for (NodeId v : g.nodes()) {
    if (!g.incident(v).empty()) pool.push_back(v);
  }
  Rng rng(mix64(config.seed, kTagSplit));
  for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  const std::size_t n_held = static_cast<std::size_t>(
      std::llround(config.holdout_fraction * static_cast<double>(pool.size())));
  RootSplit split;
  split.held_out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_held));
  split.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_held), pool.end());
  return split;
}

StepStats batch_gradients(const TemporalGraph& g, ModelState& state,
                          const std::vector<NodeId>& roots, std::uint64_t step_seed) {
  if (roots.empty()) throw DataError("batch_gradients: empty batch");
  const auto t0 = std::chrono::steady_clock::now();
  const TrainConfig& cfg = state.config;
  const std::size_t B = roots.size();

  // Pass 1: forward without caches, keeping only what the losses need. The
  // gradient pass recomputes activations per root, which bounds memory by
  // worker count instead of batch size.
  std::vector<RootForward> fw(B);
  parallel_roots(B, cfg.workers, [&](std::size_t i) {
    forward_root(g, state, roots[i], mix64(step_seed, i), false, nullptr, fw[i]);
  });

  BatchGrads grads;
  const BatchLosses losses = assemble_losses(fw, cfg, &grads);
  check_finite(losses);

  // Pass 2: recompute with caches (replaying the stored draws), backprop into
  // per-root buffers, reduce in root order — worker-count independent.
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), B);
  std::vector<GradBuffer> buffers;
  buffers.reserve(w);
  for (std::size_t i = 0; i < w; ++i) buffers.emplace_back(state.params);
  for (std::size_t start = 0; start < B; start += w) {
    const std::size_t end = std::min(B, start + w);
    parallel_roots(end - start, cfg.workers, [&](std::size_t slot) {
      const std::size_t i = start + slot;
      buffers[slot].zero();
      RootForward rf;
      forward_root(g, state, roots[i], mix64(step_seed, i), true, &fw[i].scores.eps, rf);
      backward_root(state, rf, grads, i, buffers[slot]);
    });
    for (std::size_t slot = 0; slot < end - start; ++slot) {
      buffers[slot].reduce_into(state.params);
    }
  }

  StepStats stats;
  stats.loss_c = losses.lc;
  stats.loss_s = losses.ls;
  stats.loss_b = losses.lb;
  stats.loss_total = losses.total;
  stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

StepStats train_step(const TemporalGraph& g, ModelState& state,
                     const std::vector<NodeId>& roots) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t sseed = step_seed_for(state.config, state.global_step);
  StepStats stats = batch_gradients(g, state, roots, sseed);

  adam_step(state.params, state.adam);
  state.global_step += 1;

  stats.step = state.global_step;
  stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

double batch_loss(const TemporalGraph& g, const ModelState& state,
                  const std::vector<NodeId>& roots, std::uint64_t step_seed,
                  const std::vector<Tensor>* distill_targets) {
  if (roots.empty()) throw DataError("batch_loss: empty batch");
  const std::size_t B = roots.size();
  std::vector<RootForward> fw(B);
  for (std::size_t i = 0; i < B; ++i) {
    forward_root(g, state, roots[i], mix64(step_seed, i), false, nullptr, fw[i]);
  }
  return assemble_losses(fw, state.config, nullptr, distill_targets).total;
}

std::vector<Tensor> batch_targets(const TemporalGraph& g, const ModelState& state,
                                  const std::vector<NodeId>& roots,
                                  std::uint64_t step_seed) {
  std::vector<Tensor> targets(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    RootForward rf;
    forward_root(g, state, roots[i], mix64(step_seed, i), false, nullptr, rf);
    targets[i] = rf.scores.y;
  }
  return targets;
}

double evaluate(const TemporalGraph& g, const ModelState& state,
                const std::vector<NodeId>& roots) {
  const TrainConfig& cfg = state.config;
  const std::size_t B = cfg.batch_size;
  double sum = 0.0;
  std::size_t weight = 0;
  std::size_t chunk_ordinal = 0;
  for (std::size_t start = 0; start < roots.size(); start += B, ++chunk_ordinal) {
    const std::size_t end = std::min(roots.size(), start + B);
    const std::size_t size = end - start;
    if (size < 2 && cfg.neg_policy == NegativePolicy::kInBatch) continue;
    const std::vector<NodeId> chunk(roots.begin() + static_cast<std::ptrdiff_t>(start),
                                    roots.begin() + static_cast<std::ptrdiff_t>(end));
    const std::uint64_t seed = mix64(cfg.seed, kTagEval, chunk_ordinal);
    sum += batch_loss(g, state, chunk, seed) * static_cast<double>(size);
    weight += size;
  }
  if (weight == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(weight);
}

TrainReport train(const TemporalGraph& g, ModelState& state, const CheckpointHook& hook) {
  validate_config(state.config);
  const TrainConfig& cfg = state.config;
  const auto t0 = std::chrono::steady_clock::now();
  const RootSplit split = split_roots(g, cfg);
  if (split.train.empty()) throw DataError("train: no nodes with events to train on");

  TrainReport report;
  bool stop = false;
  while (state.epoch < cfg.epochs && !stop) {
    // Deterministic per-epoch order; resume recomputes it from (seed, epoch).
    std::vector<NodeId> order = split.train;
    Rng shuffle(mix64(cfg.seed, kTagEpoch, static_cast<std::uint64_t>(state.epoch)));
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(shuffle.uniform_index(order.size() - i));
      std::swap(order[i], order[j]);
    }

    const std::size_t n_slots = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
    for (auto slot = static_cast<std::size_t>(state.step_in_epoch); slot < n_slots;
         ++slot) {
      const std::size_t start = slot * cfg.batch_size;
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      state.step_in_epoch = static_cast<std::int64_t>(slot) + 1;
      if (end - start < 2 && cfg.neg_policy == NegativePolicy::kInBatch) {
        continue;  // a trailing singleton has no in-batch negatives
      }
      const std::vector<NodeId> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(end));
      report.steps.push_back(train_step(g, state, batch));
      if (hook && cfg.checkpoint_every > 0 &&
          state.global_step % cfg.checkpoint_every == 0) {
        hook(state, false);
      }
      if (cfg.max_steps >= 0 && state.global_step >= cfg.max_steps) {
        stop = true;
        break;
      }
    }
    if (stop) break;

    state.epoch += 1;
    state.step_in_epoch = 0;
    const double ev = evaluate(g, state, split.held_out);
    if (!std::isnan(ev)) {
      report.eval_losses.push_back(ev);
      state.evals_done += 1;
      if (state.evals_done == 1 || ev < state.best_eval) {
        state.best_eval = ev;
        state.evals_since_improve = 0;
      } else {
        state.evals_since_improve += 1;
        if (state.evals_since_improve >= cfg.patience) {
          report.early_stopped = true;
          stop = true;
        }
      }
    }
  }

  if (hook) hook(state, true);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace step
