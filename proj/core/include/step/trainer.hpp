#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "step/encoder.hpp"
#include "step/graph_store.hpp"
#include "step/params.hpp"
#include "step/pruner.hpp"
#include "step/sampler.hpp"
#include "step/subgraph.hpp"

namespace step {

enum class NegativePolicy { kInBatch, kRandomDrop };
enum class Regularizer { kBernoulli, kL1 };

struct TrainConfig {
  std::size_t batch_size = 128;
  std::int64_t epochs = 10;
  std::int64_t max_steps = -1;  // -1: bounded by epochs only

  double lambda1 = 0.01;  // distillation weight
  double lambda2 = 0.01;  // regularizer weight
  double q = 0.5;         // Bernoulli keep prior
  double tau = 0.5;       // concrete temperature
  double lr = 0.001;

  int depth = 2;    // subgraph hops
  int fanout = 20;  // neighbors per hop
  NeighborStrategy strategy = NeighborStrategy::kMostRecent;
  PoolMode pool = PoolMode::kCentral;

  NegativePolicy neg_policy = NegativePolicy::kInBatch;
  double drop_fraction = 0.5;  // random_drop negative strength
  Regularizer regularizer = Regularizer::kBernoulli;
  bool literal_infonce = false;  // denominator without the positive pair
  bool ablate_redundancy = false;  // zero s_rd in the importance logit
  bool ablate_relevance = false;   // zero s_rl in the importance logit

  std::size_t embed_dim = 128;
  std::size_t time_dim = 32;
  std::size_t hidden_dim = 128;
  bool rescale_time = false;  // divide dt by the graph's time range

  double holdout_fraction = 0.1;  // nodes held out for the stopping signal
  int patience = 5;               // evaluations without improvement
  std::int64_t checkpoint_every = 0;  // steps between checkpoint hooks; 0 = end only
  int workers = 1;

  std::uint64_t seed = 1;
};

// Everything that defines a trained (or in-training) model; checkpoints
// round-trip this struct exactly.
struct ModelState {
  ParameterSet params;
  EncoderParams encoder;
  SamplerParams sampler;
  PrunerParams pruner;
  AdamState adam;
  TrainConfig config;

  std::int64_t global_step = 0;
  std::int64_t epoch = 0;
  std::int64_t step_in_epoch = 0;
  double best_eval = 0.0;  // meaningful only when evals_done > 0
  std::int64_t evals_done = 0;
  std::int64_t evals_since_improve = 0;
};

// Builds parameters (seeded by config.seed) for explicit encoder dimensions.
ModelState build_model(const TrainConfig& config, const EncoderDims& dims);

// Builds parameters (seeded by config.seed) sized for the graph's feature
// dimension; sets time_scale from the graph when config.rescale_time is on.
ModelState init_model(const TemporalGraph& g, const TrainConfig& config);

struct StepStats {
  std::int64_t step = 0;
  double loss_c = 0.0;
  double loss_s = 0.0;
  double loss_b = 0.0;  // regularizer value (bernoulli or l1)
  double loss_total = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<StepStats> steps;
  std::vector<double> eval_losses;  // one per evaluation
  double wall_seconds = 0.0;
  bool early_stopped = false;
};

// Nodes eligible as training roots (at least one incident event), split
// deterministically by config.seed into train and held-out sets.
struct RootSplit {
  std::vector<NodeId> train;
  std::vector<NodeId> held_out;
};
RootSplit split_roots(const TemporalGraph& g, const TrainConfig& config);

// Accumulates d(batch loss)/d(params) into the parameter gradients with the
// exact draws of `step_seed` and returns the losses; no optimizer update,
// global_step untouched. Zero the gradients first for a standalone gradient.
StepStats batch_gradients(const TemporalGraph& g, ModelState& state,
                          const std::vector<NodeId>& roots, std::uint64_t step_seed);

// One optimizer step over a batch of roots, per the training algorithm:
// sample, encode, score, relax, re-encode under the soft mask, distill, then
// a single Adam update. Deterministic for (config.seed, state.global_step):
// every random draw derives from those two plus the root's batch position, so
// results are identical for any worker count.
StepStats train_step(const TemporalGraph& g, ModelState& state,
                     const std::vector<NodeId>& roots);

// Total batch loss at the current parameters, no gradients, no update, with
// the same draws train_step would make at `step_seed`. This is what the
// finite-difference oracle probes. The distillation targets are detached
// from the objective: pass the base-point relaxed samples (`batch_targets`)
// as `distill_targets` so a parameter perturbation cannot move them.
double batch_loss(const TemporalGraph& g, const ModelState& state,
                  const std::vector<NodeId>& roots, std::uint64_t step_seed,
                  const std::vector<Tensor>* distill_targets = nullptr);

// The per-root relaxed samples the step at `step_seed` would produce; the
// frozen distillation targets for batch_loss.
std::vector<Tensor> batch_targets(const TemporalGraph& g, const ModelState& state,
                                  const std::vector<NodeId>& roots,
                                  std::uint64_t step_seed);

// Mean self-supervised loss over the held-out roots under a fixed evaluation
// stream (comparable across epochs).
double evaluate(const TemporalGraph& g, const ModelState& state,
                const std::vector<NodeId>& roots);

using CheckpointHook = std::function<void(const ModelState&, bool is_final)>;

// Epoch loop over shuffled root batches with per-epoch evaluation, early
// stopping, and optional periodic checkpointing. Resumes exactly from a
// loaded state: the trajectory depends only on (graph, config, state).
TrainReport train(const TemporalGraph& g, ModelState& state,
                  const CheckpointHook& hook = {});

}  // namespace step
