#include "step/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "step/encoder.hpp"
#include "step/errors.hpp"
#include "step/nn.hpp"
#include "step/rng.hpp"
#include "step/subgraph.hpp"

namespace step {

namespace {

constexpr std::size_t kHistBins = 32;

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double mean_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

EvalReport evaluate_pruning(const NoiseMask& mask, const std::vector<PruneDecision>& log) {
  if (log.empty()) throw DataError("empty decision log");
  std::unordered_set<EventId> seen;
  seen.reserve(log.size());
  EvalReport rep;
  rep.n_events = log.size();
  rep.n_injected = mask.injected_event_ids.size();
  std::size_t dropped_injected = 0;
  std::size_t kept_true = 0;
  rep.hist_edges.resize(kHistBins + 1);
  for (std::size_t i = 0; i <= kHistBins; ++i) {
    rep.hist_edges[i] = static_cast<double>(i) / kHistBins;
  }
  rep.hist_counts.assign(kHistBins, 0);
  for (const PruneDecision& d : log) {
    if (!seen.insert(d.event_id).second) {
      throw DataError("duplicate event id " + std::to_string(d.event_id) +
                      " in decision log");
    }
    const bool injected = mask.contains(d.event_id);
    if (d.keep) {
      ++rep.n_kept;
      if (!injected) ++kept_true;
    } else {
      ++rep.n_dropped;
      if (injected) ++dropped_injected;
    }
    double s = d.score;
    if (std::isfinite(s)) {
      s = std::min(std::max(s, 0.0), 1.0);
      std::size_t bin = static_cast<std::size_t>(s * kHistBins);
      if (bin >= kHistBins) bin = kHistBins - 1;
      ++rep.hist_counts[bin];
    }
  }
  for (EventId id : mask.injected_event_ids) {
    if (seen.count(id) == 0) {
      throw DataError("injected event " + std::to_string(id) +
                      " is missing from the decision log");
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n_true = rep.n_events - rep.n_injected;
  rep.precision = rep.n_dropped > 0
                      ? static_cast<double>(dropped_injected) / static_cast<double>(rep.n_dropped)
                      : nan;
  rep.recall = rep.n_injected > 0 ? static_cast<double>(dropped_injected) /
                                        static_cast<double>(rep.n_injected)
                                  : nan;
  rep.true_retention =
      n_true > 0 ? static_cast<double>(kept_true) / static_cast<double>(n_true) : nan;
  rep.achieved_ratio = static_cast<double>(rep.n_dropped) / static_cast<double>(rep.n_events);
  return rep;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("spearman inputs differ in length");
  if (a.size() < 2) throw DataError("spearman needs at least two pairs");
  return pearson(average_ranks(a), average_ranks(b));
}

double auc_score(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw DataError("auc inputs differ in length");
  std::size_t n_pos = 0, n_neg = 0;
  for (int l : labels) {
    if (l == 1) {
      ++n_pos;
    } else if (l == 0) {
      ++n_neg;
    } else {
      throw DataError("auc labels must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) throw DataError("auc needs both classes");
  const std::vector<double> ranks = average_ranks(scores);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) rank_sum_pos += ranks[i];
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

// Frozen-encoder embedding of one node at just-after its last event; zeros
// for a node with no history in `g`.
Tensor embed_node(const TemporalGraph& g, const ModelState& model, NodeId v,
                  std::uint64_t seed) {
  const std::size_t D = model.encoder.dims.embed;
  Tensor z = Tensor::zeros({D});
  if (!g.has_node(v) || g.incident(v).empty()) return z;
  const Event& last = g.event(g.incident(v).back());
  const double ref = std::nextafter(last.timestamp, std::numeric_limits<double>::infinity());
  TemporalSubgraph sub =
      sample_subgraph(g, v, ref, model.config.depth, model.config.fanout,
                      model.config.strategy, seed);
  Tensor h = node_embed(model.params, model.encoder, sub, nullptr, nullptr);
  for (std::size_t j = 0; j < D; ++j) z[j] = h.at(0, j);
  return z;
}

}  // namespace

std::optional<double> proxy_auc(const TemporalGraph& history, const ModelState& model,
                                const std::vector<EventRecord>& labeled,
                                const ProxyConfig& cfg) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (labeled[i].label == 0 || labeled[i].label == 1) rows.push_back(i);
  }
  if (rows.size() < 20) return std::nullopt;
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return labeled[a].timestamp < labeled[b].timestamp;
  });
  const std::size_t n = rows.size();
  const std::size_t n_train = static_cast<std::size_t>(std::llround(0.70 * static_cast<double>(n)));
  const std::size_t n_val = static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(n)));
  if (n_train < 2 || n_val < 1 || n_train + n_val >= n) return std::nullopt;

  // Frozen embeddings, one per endpoint node.
  std::unordered_map<NodeId, Tensor> emb;
  for (std::size_t r : rows) {
    for (NodeId v : {labeled[r].src, labeled[r].dst}) {
      if (emb.count(v) == 0) {
        emb.emplace(v, embed_node(history, model, v,
                                  mix64(cfg.seed, static_cast<std::uint64_t>(v))));
      }
    }
  }
  const std::size_t D = model.encoder.dims.embed;
  const std::size_t F = 2 * D;
  Tensor X({n, F});
  std::vector<int> y(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const EventRecord& rec = labeled[rows[i]];
    const Tensor& zs = emb.at(rec.src);
    const Tensor& zd = emb.at(rec.dst);
    for (std::size_t j = 0; j < D; ++j) {
      X.at(i, j) = zs[j];
      X.at(i, D + j) = zd[j];
    }
    y[i] = rec.label;
  }

  // Standardize by the train split.
  for (std::size_t j = 0; j < F; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) mean += X.at(i, j);
    mean /= static_cast<double>(n_train);
    double var = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) {
      var += (X.at(i, j) - mean) * (X.at(i, j) - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(n_train)) + 1e-8;
    for (std::size_t i = 0; i < n; ++i) X.at(i, j) = (X.at(i, j) - mean) / sd;
  }

  auto has_both = [&](std::size_t lo, std::size_t hi) {
    bool p = false, q = false;
    for (std::size_t i = lo; i < hi; ++i) {
      p = p || y[i] == 1;
      q = q || y[i] == 0;
    }
    return p && q;
  };
  if (!has_both(0, n_train) || !has_both(n_train + n_val, n)) return std::nullopt;

  // Full-batch logistic regression; the validation slice picks the iterate.
  std::vector<double> w(F, 0.0), best_w(F, 0.0);
  double b = 0.0, best_b = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> margin(n, 0.0);
  for (int it = 0; it < cfg.iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double m = b;
      const double* xi = X.data() + i * F;
      for (std::size_t j = 0; j < F; ++j) m += xi[j] * w[j];
      margin[i] = m;
    }
    std::vector<double> gw(F, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) {
      const double diff = sigmoid(margin[i]) - static_cast<double>(y[i]);
      const double* xi = X.data() + i * F;
      for (std::size_t j = 0; j < F; ++j) gw[j] += diff * xi[j];
      gb += diff;
    }
    const double inv = 1.0 / static_cast<double>(n_train);
    for (std::size_t j = 0; j < F; ++j) w[j] = w[j] - cfg.lr * (gw[j] * inv + cfg.l2 * w[j]);
    b -= cfg.lr * gb * inv;

    double val = 0.0;
    for (std::size_t i = n_train; i < n_train + n_val; ++i) {
      const double p = std::min(std::max(sigmoid(margin[i]), 1e-12), 1.0 - 1e-12);
      val += y[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    if (val < best_val) {
      best_val = val;
      best_w = w;
      best_b = b;
    }
  }

  std::vector<int> test_y;
  std::vector<double> test_s;
  for (std::size_t i = n_train + n_val; i < n; ++i) {
    double m = best_b;
    const double* xi = X.data() + i * F;
    for (std::size_t j = 0; j < F; ++j) m += xi[j] * best_w[j];
    test_y.push_back(y[i]);
    test_s.push_back(m);
  }
  return auc_score(test_y, test_s);
}

}  // namespace step
