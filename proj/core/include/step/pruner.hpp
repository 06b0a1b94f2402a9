#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "step/encoder.hpp"
#include "step/event.hpp"
#include "step/graph_store.hpp"
#include "step/params.hpp"
#include "step/subgraph.hpp"
#include "step/tensor.hpp"

namespace step {

// The graph-less scorer: a two-layer MLP over [x_ij || phi(dt)]. It shares
// the encoder's time encoder read-only — gradients never flow into the time
// parameters from this path.
struct PrunerParams {
  std::size_t w1 = 0;  // (H, d + D_t)
  std::size_t b1 = 0;  // (H)
  std::size_t w2 = 0;  // (1, H)
  std::size_t b2 = 0;  // (1)
  std::size_t hidden = 128;
};

PrunerParams register_pruner(ParameterSet& ps, std::size_t hidden, std::size_t feat_dim,
                             std::size_t time_dim, Rng& rng);

// P = sigmoid(W2 relu(W1 [x || phi(dt)] + b1) + b2), strictly in (0, 1).
// No graph access: the score depends on the event's own payload only.
double score_event(const ParameterSet& ps, const PrunerParams& pp,
                   const EncoderParams& enc, const double* x, double dt);

// Reusable scoring scratch for hot loops; caches phi across calls with the
// same dt, which makes constant-dt streaming nearly twice as cheap.
class PrunerScorer {
 public:
  PrunerScorer(const ParameterSet& ps, const PrunerParams& pp, const EncoderParams& enc);
  double score(const double* x, double dt);

 private:
  const ParameterSet& ps_;
  const PrunerParams& pp_;
  const EncoderParams& enc_;
  std::vector<double> input_;
  std::vector<double> hidden_;
  double cached_dt_ = 0.0;
  bool phi_valid_ = false;
};

struct PrunerCache {
  Tensor inputs;  // (E, d + D_t)
  Tensor pre;     // (E, H) pre-ReLU
  Tensor hidden;  // (E, H)
  Tensor logits;  // (E)
  Tensor p;       // (E)
};

// Scores of every sampled edge of a subgraph (dt as recorded per edge);
// this is the training-time path the distillation loss drives.
Tensor score_edges(const ParameterSet& ps, const PrunerParams& pp,
                   const EncoderParams& enc, const TemporalSubgraph& sub,
                   PrunerCache* cache);

// Accumulates gradients of the MLP parameters given d(loss)/dP. The shared
// time encoder is treated as a constant.
void score_edges_backward(const ParameterSet& ps, const PrunerParams& pp,
                          const PrunerCache& cache, const Tensor& grad_p,
                          GradBuffer& sink);

struct ThresholdCalibration {
  double theta = 0.0;          // k-th smallest score; -inf when k = 0
  double target_ratio = 0.0;   // p
  double achieved_ratio = 0.0; // round(p n) / n, exact
  std::size_t calibration_size = 0;
};

// Threshold that drops exactly round(p * n) of the given scores.
ThresholdCalibration calibrate_threshold(std::vector<double> scores, double p);

struct PruneDecision {
  EventId event_id = 0;
  double score = 0.0;
  bool keep = true;
  double threshold = 0.0;
};

// How dt is derived when scoring bare events. kRefMax measures staleness
// against a reference time (offline: the dataset's t_max); kZero scores each
// event as if it just arrived.
enum class DtPolicy { kZero, kRefMax };

// Exactly one of ratio/theta must be set. With `ratio`, the threshold is
// calibrated on the full score set and ties are resolved by ascending
// event id so exactly round(ratio * m) events drop. With `theta`, keep
// strictly requires score > theta (ties drop).
struct PruneSpec {
  std::optional<double> ratio;
  std::optional<double> theta;
  DtPolicy dt_policy = DtPolicy::kRefMax;
};

// Scores every event, applies the spec, and returns the kept-event graph
// (node set preserved) plus one decision per event in graph order.
std::pair<TemporalGraph, std::vector<PruneDecision>> prune_offline(
    const TemporalGraph& g, const ParameterSet& ps, const PrunerParams& pp,
    const EncoderParams& enc, const PruneSpec& spec);

// One parsed item of an event stream; `ok` false routes to the error counter.
struct StreamItem {
  bool ok = true;
  EventRecord record;
  std::string error;
};

using StreamSource = std::function<std::optional<StreamItem>()>;  // nullopt = end
using StreamSink = std::function<void(const EventRecord&, const PruneDecision&)>;

struct StreamSummary {
  std::size_t n_in = 0;
  std::size_t n_kept = 0;
  std::size_t n_dropped = 0;
  std::size_t n_errors = 0;
  double score_seconds = 0.0;    // scoring + routing only, excludes the source
  double events_per_sec = 0.0;
};

// Filters an ordered event stream against a fixed threshold. Each event is
// scored in O(1) — independent of any graph history — and routed immediately.
// `workers` > 1 scores chunks in parallel with an order-preserving merge; the
// decisions are identical for any worker count. `ref_time` feeds the kRefMax
// policy (streaming default is kZero). Event ids are arrival ordinals.
StreamSummary stream_prune(const StreamSource& next, const ParameterSet& ps,
                           const PrunerParams& pp, const EncoderParams& enc, double theta,
                           DtPolicy policy, double ref_time, int workers,
                           const StreamSink& sink_keep, const StreamSink& sink_drop);

}  // namespace step
