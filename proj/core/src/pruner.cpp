#include "step/pruner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "step/errors.hpp"
#include "step/nn.hpp"

namespace step {

PrunerParams register_pruner(ParameterSet& ps, std::size_t hidden, std::size_t feat_dim,
                             std::size_t time_dim, Rng& rng) {
  if (hidden < 1) throw DataError("pruner hidden width must be >= 1");
  PrunerParams pp;
  pp.hidden = hidden;
  const std::size_t in = feat_dim + time_dim;
  Tensor w1({hidden, in});
  glorot_init(w1, in, hidden, rng);
  pp.w1 = ps.add("pruner.w1", std::move(w1));
  pp.b1 = ps.add("pruner.b1", Tensor::zeros({hidden}));
  Tensor w2({1, hidden});
  glorot_init(w2, hidden, 1, rng);
  pp.w2 = ps.add("pruner.w2", std::move(w2));
  pp.b2 = ps.add("pruner.b2", Tensor::zeros({1}));
  return pp;
}

PrunerScorer::PrunerScorer(const ParameterSet& ps, const PrunerParams& pp,
                           const EncoderParams& enc)
    : ps_(ps), pp_(pp), enc_(enc) {
  input_.resize(enc.dims.feat + enc.dims.time);
  hidden_.resize(pp.hidden);
}

double PrunerScorer::score(const double* x, double dt) {
  const std::size_t d = enc_.dims.feat;
  const std::size_t Dt = enc_.dims.time;
  for (std::size_t i = 0; i < d; ++i) input_[i] = x[i];
  if (!phi_valid_ || dt != cached_dt_) {
    const Tensor& tw = ps_.entry(enc_.time_w).value;
    const Tensor& tb = ps_.entry(enc_.time_b).value;
    const double u = dt * enc_.dims.time_scale;
    for (std::size_t i = 0; i < Dt; ++i) input_[d + i] = std::cos(tw[i] * u + tb[i]);
    cached_dt_ = dt;
    phi_valid_ = true;
  }
  const Tensor& w1 = ps_.entry(pp_.w1).value;
  const Tensor& b1 = ps_.entry(pp_.b1).value;
  for (std::size_t h = 0; h < pp_.hidden; ++h) {
    const double a = b1[h] + dot(w1.row(h), input_.data(), input_.size());
    hidden_[h] = a > 0.0 ? a : 0.0;
  }
  const Tensor& w2 = ps_.entry(pp_.w2).value;
  const double logit =
      ps_.entry(pp_.b2).value[0] + dot(w2.row(0), hidden_.data(), pp_.hidden);
  return sigmoid(logit);
}

double score_event(const ParameterSet& ps, const PrunerParams& pp,
                   const EncoderParams& enc, const double* x, double dt) {
  PrunerScorer scorer(ps, pp, enc);
  return scorer.score(x, dt);
}

Tensor score_edges(const ParameterSet& ps, const PrunerParams& pp,
                   const EncoderParams& enc, const TemporalSubgraph& sub,
                   PrunerCache* cache) {
  const std::size_t E = sub.num_edges();
  const std::size_t d = enc.dims.feat;
  const std::size_t Dt = enc.dims.time;
  PrunerCache local;
  PrunerCache& c = cache != nullptr ? *cache : local;

  c.inputs = Tensor({E, d + Dt});
  const Tensor& tw = ps.entry(enc.time_w).value;
  const Tensor& tb = ps.entry(enc.time_b).value;
  for (std::size_t e = 0; e < E; ++e) {
    const SampledEdge& edge = sub.edges[e];
    double* row = c.inputs.row(e);
    for (std::size_t i = 0; i < d; ++i) row[i] = edge.features[i];
    const double u = edge.dt * enc.dims.time_scale;
    for (std::size_t i = 0; i < Dt; ++i) row[d + i] = std::cos(tw[i] * u + tb[i]);
  }
  c.pre = affine(c.inputs, ps.entry(pp.w1).value, &ps.entry(pp.b1).value);
  c.hidden = elementwise(Elementwise::kRelu, c.pre);
  const Tensor logits2 = affine(c.hidden, ps.entry(pp.w2).value, &ps.entry(pp.b2).value);
  c.logits = Tensor({E});
  c.p = Tensor({E});
  for (std::size_t e = 0; e < E; ++e) {
    c.logits[e] = logits2[e];
    c.p[e] = sigmoid(logits2[e]);
  }
  return c.p;
}

void score_edges_backward(const ParameterSet& ps, const PrunerParams& pp,
                          const PrunerCache& cache, const Tensor& grad_p,
                          GradBuffer& sink) {
  const std::size_t E = cache.p.size();
  if (E == 0) return;
  Tensor g_logit({E, 1});
  for (std::size_t e = 0; e < E; ++e) {
    const double p = cache.p[e];
    g_logit[e] = grad_p[e] * p * (1.0 - p);
  }
  Tensor g_hidden = Tensor::zeros({E, pp.hidden});
  affine_backward(cache.hidden, ps.entry(pp.w2).value, g_logit, &g_hidden,
                  &sink.grad(pp.w2), &sink.grad(pp.b2));
  Tensor g_pre = Tensor::zeros({E, pp.hidden});
  elementwise_backward(Elementwise::kRelu, cache.pre, cache.hidden, g_hidden, &g_pre);
  // Inputs are data plus the read-only time encoding: no grad_x needed.
  affine_backward(cache.inputs, ps.entry(pp.w1).value, g_pre, nullptr, &sink.grad(pp.w1),
                  &sink.grad(pp.b1));
}

ThresholdCalibration calibrate_threshold(std::vector<double> scores, double p) {
  if (scores.empty()) throw DataError("calibrate_threshold: no scores");
  if (p < 0.0 || p > 1.0) throw DataError("pruning ratio must lie in [0, 1]");
  const std::size_t n = scores.size();
  const std::size_t k = static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
  ThresholdCalibration cal;
  cal.target_ratio = p;
  cal.calibration_size = n;
  cal.achieved_ratio = static_cast<double>(k) / static_cast<double>(n);
  if (k == 0) {
    cal.theta = -std::numeric_limits<double>::infinity();
  } else {
    std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     scores.end());
    cal.theta = scores[k - 1];
  }
  return cal;
}

std::pair<TemporalGraph, std::vector<PruneDecision>> prune_offline(
    const TemporalGraph& g, const ParameterSet& ps, const PrunerParams& pp,
    const EncoderParams& enc, const PruneSpec& spec) {
  if (spec.ratio.has_value() == spec.theta.has_value()) {
    throw DataError("prune_offline: exactly one of ratio/theta must be given");
  }
  const std::size_t m = g.num_events();
  const double ref = spec.dt_policy == DtPolicy::kRefMax ? g.t_max() : 0.0;

  std::vector<PruneDecision> decisions(m);
  PrunerScorer scorer(ps, pp, enc);
  for (std::size_t i = 0; i < m; ++i) {
    const Event& e = g.event(i);
    const double dt = spec.dt_policy == DtPolicy::kRefMax ? ref - e.timestamp : 0.0;
    decisions[i].event_id = e.event_id;
    decisions[i].score = scorer.score(e.features.data(), dt);
  }

  double theta = 0.0;
  if (spec.theta.has_value()) {
    theta = *spec.theta;
    for (auto& d : decisions) d.keep = d.score > theta;
  } else if (m > 0) {
    std::vector<double> scores(m);
    for (std::size_t i = 0; i < m; ++i) scores[i] = decisions[i].score;
    const ThresholdCalibration cal = calibrate_threshold(scores, *spec.ratio);
    theta = cal.theta;
    // Drop exactly k via (score, event_id) order; ties at theta resolve by id.
    const std::size_t k =
        static_cast<std::size_t>(std::llround(*spec.ratio * static_cast<double>(m)));
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (decisions[a].score != decisions[b].score) {
        return decisions[a].score < decisions[b].score;
      }
      return decisions[a].event_id < decisions[b].event_id;
    });
    for (std::size_t r = 0; r < m; ++r) decisions[order[r]].keep = r >= k;
  }
  for (auto& d : decisions) d.threshold = theta;

  std::vector<Event> kept;
  kept.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (decisions[i].keep) kept.push_back(g.event(i));
  }
  TemporalGraph pruned = TemporalGraph::build(std::move(kept), g.nodes(), g.feature_dim());
  return {std::move(pruned), std::move(decisions)};
}

StreamSummary stream_prune(const StreamSource& next, const ParameterSet& ps,
                           const PrunerParams& pp, const EncoderParams& enc, double theta,
                           DtPolicy policy, double ref_time, int workers,
                           const StreamSink& sink_keep, const StreamSink& sink_drop) {
  if (workers < 1) throw DataError("stream_prune: workers must be >= 1");
  constexpr std::size_t kChunk = 4096;
  StreamSummary summary;
  std::vector<EventRecord> chunk;
  std::vector<double> scores;
  chunk.reserve(kChunk);
  scores.reserve(kChunk);
  std::int64_t next_id = 0;
  double score_seconds = 0.0;

  const auto drain = [&]() {
    if (chunk.empty()) return;
    const auto t0 = std::chrono::steady_clock::now();
    scores.assign(chunk.size(), 0.0);
    const auto run = [&](std::size_t lo, std::size_t hi) {
      PrunerScorer scorer(ps, pp, enc);
      for (std::size_t i = lo; i < hi; ++i) {
        const double dt =
            policy == DtPolicy::kRefMax ? ref_time - chunk[i].timestamp : 0.0;
        scores[i] = scorer.score(chunk[i].features.data(), dt);
      }
    };
    if (workers == 1 || chunk.size() < 2) {
      run(0, chunk.size());
    } else {
      const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                  chunk.size());
      std::vector<std::thread> pool;
      pool.reserve(w);
      const std::size_t per = (chunk.size() + w - 1) / w;
      for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = t * per;
        const std::size_t hi = std::min(chunk.size(), lo + per);
        if (lo < hi) pool.emplace_back(run, lo, hi);
      }
      for (auto& t : pool) t.join();
    }
    // Order-preserving merge: decisions are emitted in arrival order no
    // matter how the chunk was split.
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      PruneDecision d;
      d.event_id = next_id++;
      d.score = scores[i];
      d.threshold = theta;
      d.keep = d.score > theta;
      if (d.keep) {
        ++summary.n_kept;
        if (sink_keep) sink_keep(chunk[i], d);
      } else {
        ++summary.n_dropped;
        if (sink_drop) sink_drop(chunk[i], d);
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    score_seconds += std::chrono::duration<double>(t1 - t0).count();
    chunk.clear();
  };

  while (auto item = next()) {
    if (!item->ok) {
      ++summary.n_errors;
      continue;
    }
    ++summary.n_in;
    chunk.push_back(std::move(item->record));
    if (chunk.size() >= kChunk) drain();
  }
  drain();

  summary.score_seconds = score_seconds;
  summary.events_per_sec =
      score_seconds > 0.0 ? static_cast<double>(summary.n_in) / score_seconds : 0.0;
  return summary;
}

}  // namespace step
