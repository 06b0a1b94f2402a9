#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "step/event.hpp"
#include "step/graph_store.hpp"
#include "step/pruner.hpp"
#include "step/trainer.hpp"

namespace step {

// Noise-robustness metrics of one pruning run, measured against the set of
// injected events. Fractions are NaN when their denominator is empty.
struct EvalReport {
  std::size_t n_events = 0;
  std::size_t n_injected = 0;
  std::size_t n_kept = 0;
  std::size_t n_dropped = 0;

  double precision = 0.0;       // dropped ∩ injected / dropped
  double recall = 0.0;          // dropped ∩ injected / injected
  double true_retention = 0.0;  // kept true events / total true events
  double achieved_ratio = 0.0;  // dropped / total

  std::vector<double> hist_edges;        // 33 edges over [0, 1]
  std::vector<std::int64_t> hist_counts; // 32 bins of decision scores

  std::optional<double> proxy_auc_full;    // labeled non-comparable
  std::optional<double> proxy_auc_pruned;  // labeled non-comparable
};

// Scores one decision log against a noise mask. Every injected id must appear
// in the log (DataError otherwise); the log is expected to cover all events.
EvalReport evaluate_pruning(const NoiseMask& mask, const std::vector<PruneDecision>& log);

// Spearman rank correlation with average ranks for ties; NaN when either
// side has zero rank variance. Lengths must match and be >= 2.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// ROC AUC by the Mann-Whitney statistic with tie-averaged ranks. Labels are
// 0/1; both classes must be present (DataError otherwise).
double auc_score(const std::vector<int>& labels, const std::vector<double>& scores);

struct ProxyConfig {
  int iters = 300;
  double lr = 0.1;
  double l2 = 1e-4;
  std::uint64_t seed = 1;
};

// The tiny downstream probe: a logistic head over frozen encoder embeddings
// of the two endpoints, trained on a 70/15/15 chronological split of the
// labeled events, scored by test AUC. `history` supplies the embeddings (the
// full or the pruned graph); `labeled` supplies the task. Returns nullopt
// when a split lacks both classes. Not comparable to any full-model numbers.
std::optional<double> proxy_auc(const TemporalGraph& history, const ModelState& model,
                                const std::vector<EventRecord>& labeled,
                                const ProxyConfig& cfg);

}  // namespace step
