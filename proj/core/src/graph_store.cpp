#include "step/graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "step/errors.hpp"
#include "step/rng.hpp"

namespace step {
namespace {

// Partial Fisher-Yates: deterministically selects k of the first n positions.
// Returns the selected values of `pool` (which it permutes in place).
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T>& pool, std::size_t k, Rng& rng) {
  const std::size_t n = pool.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(pool[i], pool[j]);
  }
  return std::vector<T>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
}

}  // namespace

TemporalGraph TemporalGraph::build(std::vector<Event> events, std::vector<NodeId> nodes,
                                   int feature_dim) {
  TemporalGraph g;
  g.feature_dim_ = feature_dim;
  g.events_ = std::move(events);
  std::sort(g.events_.begin(), g.events_.end(), [](const Event& a, const Event& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.event_id < b.event_id;
  });

  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  g.nodes_ = std::move(nodes);
  g.node_slot_.reserve(g.nodes_.size());
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    g.node_slot_.emplace(g.nodes_[i], static_cast<std::uint32_t>(i));
  }

  g.adjacency_.assign(g.nodes_.size(), {});
  for (std::size_t i = 0; i < g.events_.size(); ++i) {
    const Event& e = g.events_[i];
    const auto src_it = g.node_slot_.find(e.src);
    const auto dst_it = g.node_slot_.find(e.dst);
    if (src_it == g.node_slot_.end() || dst_it == g.node_slot_.end()) {
      throw DataError("graph build: event " + std::to_string(e.event_id) +
                      " references a node outside the node set");
    }
    g.adjacency_[src_it->second].push_back(static_cast<std::uint32_t>(i));
    if (dst_it->second != src_it->second) {
      g.adjacency_[dst_it->second].push_back(static_cast<std::uint32_t>(i));
    }
  }

  if (!g.events_.empty()) {
    g.t_min_ = g.events_.front().timestamp;
    g.t_max_ = g.events_.back().timestamp;
  }
  return g;
}

const std::vector<std::uint32_t>& TemporalGraph::incident(NodeId v) const {
  const auto it = node_slot_.find(v);
  if (it == node_slot_.end()) {
    throw DataError("unknown node id " + std::to_string(v));
  }
  return adjacency_[it->second];
}

TemporalGraph ingest_events(const std::vector<EventRecord>& records, int feature_dim) {
  std::vector<Event> events;
  events.reserve(records.size());
  std::vector<NodeId> nodes;
  nodes.reserve(records.size() * 2);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EventRecord& r = records[i];
    if (static_cast<int>(r.features.size()) != feature_dim) {
      throw DataError("record " + std::to_string(i) + ": expected " +
                      std::to_string(feature_dim) + " feature values, got " +
                      std::to_string(r.features.size()));
    }
    if (!std::isfinite(r.timestamp)) {
      throw DataError("record " + std::to_string(i) + ": non-finite timestamp");
    }
    for (double f : r.features) {
      if (!std::isfinite(f)) {
        throw DataError("record " + std::to_string(i) + ": non-finite feature value");
      }
    }
    Event e;
    e.event_id = static_cast<EventId>(i);
    e.src = r.src;
    e.dst = r.dst;
    e.features = r.features;
    e.timestamp = r.timestamp;
    events.push_back(std::move(e));
    nodes.push_back(r.src);
    nodes.push_back(r.dst);
  }
  return TemporalGraph::build(std::move(events), std::move(nodes), feature_dim);
}

std::vector<NeighborHit> temporal_neighbors(const TemporalGraph& g, NodeId v, double t,
                                            int limit, NeighborStrategy strategy,
                                            std::uint64_t seed) {
  if (limit < 1) throw DataError("neighbor limit must be >= 1");
  const std::vector<std::uint32_t>& inc = g.incident(v);
  // Incident indices are sorted by time, so the events strictly before t form
  // a prefix.
  const auto prior_end = std::partition_point(
      inc.begin(), inc.end(),
      [&](std::uint32_t idx) { return g.event(idx).timestamp < t; });
  const std::size_t n_prior = static_cast<std::size_t>(prior_end - inc.begin());
  const std::size_t want = std::min(n_prior, static_cast<std::size_t>(limit));

  std::vector<std::uint32_t> chosen;
  if (want == n_prior) {
    chosen.assign(inc.begin(), prior_end);
  } else if (strategy == NeighborStrategy::kMostRecent) {
    chosen.assign(prior_end - static_cast<std::ptrdiff_t>(want), prior_end);
  } else {
    std::vector<std::uint32_t> pool(inc.begin(), prior_end);
    Rng rng(mix64(seed, static_cast<std::uint64_t>(v)));
    chosen = sample_without_replacement(pool, want, rng);
    std::sort(chosen.begin(), chosen.end());  // back to chronological order
  }

  std::vector<NeighborHit> hits;
  hits.reserve(chosen.size());
  for (std::uint32_t idx : chosen) {
    const Event& e = g.event(idx);
    hits.push_back({e.src == v ? e.dst : e.src, static_cast<std::size_t>(idx)});
  }
  return hits;
}

std::pair<TemporalGraph, NoiseMask> inject_noise(const TemporalGraph& g, double ratio,
                                                 std::uint64_t seed) {
  if (ratio < 0.0) throw DataError("noise ratio must be >= 0");
  const std::size_t m = g.num_events();
  const std::size_t k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(m)));

  NoiseMask mask;
  mask.ratio = ratio;
  std::vector<Event> events = g.events();
  events.reserve(m + k);
  Rng rng(mix64(seed, 0x6e6f697365ull));  // "noise"
  const std::size_t n_nodes = g.num_nodes();
  for (std::size_t i = 0; i < k; ++i) {
    Event e;
    e.event_id = static_cast<EventId>(m + i);
    e.src = g.nodes()[rng.uniform_index(n_nodes)];
    e.dst = g.nodes()[rng.uniform_index(n_nodes)];
    e.timestamp = rng.uniform(g.t_min(), g.t_max());
    e.features.resize(static_cast<std::size_t>(g.feature_dim()));
    for (double& f : e.features) f = rng.normal();
    mask.injected_event_ids.insert(e.event_id);
    events.push_back(std::move(e));
  }
  TemporalGraph noisy = TemporalGraph::build(std::move(events), g.nodes(), g.feature_dim());
  return {std::move(noisy), std::move(mask)};
}

std::vector<EventRecord> generate_synthetic_records(const SynthSpec& spec) {
  if (spec.n_nodes < 1 || spec.n_events < 1 || spec.n_communities < 1) {
    throw DataError("synthetic spec: node, event, and community counts must be >= 1");
  }
  if (spec.n_communities > spec.n_nodes) {
    throw DataError("synthetic spec: more communities than nodes");
  }
  if (spec.feature_dim < 0) throw DataError("synthetic spec: negative feature dim");
  if (spec.intra_prob < 0.0 || spec.intra_prob > 1.0) {
    throw DataError("synthetic spec: intra_prob must lie in [0, 1]");
  }
  if (!(spec.time_span > 0.0)) throw DataError("synthetic spec: time_span must be > 0");

  const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
  const std::uint64_t n = static_cast<std::uint64_t>(spec.n_nodes);
  const std::uint64_t k = static_cast<std::uint64_t>(spec.n_communities);
  Rng rng(mix64(spec.seed, 0x73796e7468ull));  // "synth"

  // Community of node v is v % k; centers anchor the intra-community features.
  std::vector<std::vector<double>> centers(k, std::vector<double>(d));
  for (auto& c : centers) {
    for (double& x : c) x = rng.normal();
  }

  std::vector<EventRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n_events));
  for (std::int64_t i = 0; i < spec.n_events; ++i) {
    EventRecord r;
    r.src = static_cast<NodeId>(rng.uniform_index(n));
    const std::uint64_t src_comm = static_cast<std::uint64_t>(r.src) % k;
    const bool intra = k == 1 || rng.uniform() < spec.intra_prob;
    if (intra) {
      // Peers of src's community: src_comm, src_comm + k, ... Avoid self-loops
      // unless the community is a singleton.
      const std::uint64_t comm_size = (n - src_comm + k - 1) / k;
      for (int attempt = 0; attempt < 100; ++attempt) {
        r.dst = static_cast<NodeId>(src_comm + k * rng.uniform_index(comm_size));
        if (r.dst != r.src || comm_size == 1) break;
      }
    } else {
      do {
        r.dst = static_cast<NodeId>(rng.uniform_index(n));
      } while (static_cast<std::uint64_t>(r.dst) % k == src_comm);
    }
    r.timestamp = rng.uniform(0.0, spec.time_span);
    r.features.resize(d);
    if (intra) {
      const std::vector<double>& c = centers[src_comm];
      for (std::size_t j = 0; j < d; ++j) r.features[j] = c[j] + 0.5 * rng.normal();
    } else {
      for (std::size_t j = 0; j < d; ++j) r.features[j] = rng.normal();
    }
    r.label = intra ? 1 : 0;
    records.push_back(std::move(r));
  }
  return records;
}

TemporalGraph generate_synthetic(const SynthSpec& spec) {
  return ingest_events(generate_synthetic_records(spec), spec.feature_dim);
}

TemporalGraph negative_view(const TemporalGraph& g, double drop_fraction,
                            std::uint64_t seed) {
  if (drop_fraction < 0.0 || drop_fraction > 1.0) {
    throw DataError("drop fraction must lie in [0, 1]");
  }
  const std::size_t m = g.num_events();
  const std::size_t k =
      static_cast<std::size_t>(std::llround(drop_fraction * static_cast<double>(m)));
  std::vector<std::size_t> pool(m);
  for (std::size_t i = 0; i < m; ++i) pool[i] = i;
  Rng rng(mix64(seed, 0x64726f70ull));  // "drop"
  std::vector<std::size_t> dropped = sample_without_replacement(pool, k, rng);
  std::vector<char> keep(m, 1);
  for (std::size_t i : dropped) keep[i] = 0;

  std::vector<Event> events;
  events.reserve(m - k);
  for (std::size_t i = 0; i < m; ++i) {
    if (keep[i]) events.push_back(g.event(i));
  }
  return TemporalGraph::build(std::move(events), g.nodes(), g.feature_dim());
}

}  // namespace step
