#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "step/event.hpp"

namespace step {

// Continuous-time dynamic graph: an immutable, time-ordered event stream with
// per-node incidence lists. Multi-edges and self-loops are permitted; every
// event is incident to both endpoints (interaction symmetry).
class TemporalGraph {
 public:
  TemporalGraph() = default;

  // Sorts `events` by (timestamp, event_id) and indexes them. `nodes` must
  // cover every endpoint; it may contain extra nodes with no incident events
  // (corrupted views keep the full node set).
  static TemporalGraph build(std::vector<Event> events, std::vector<NodeId> nodes,
                             int feature_dim);

  const std::vector<Event>& events() const { return events_; }
  const Event& event(std::size_t i) const { return events_[i]; }
  std::size_t num_events() const { return events_.size(); }

  const std::vector<NodeId>& nodes() const { return nodes_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  bool has_node(NodeId v) const { return node_slot_.count(v) > 0; }

  // Incident event indices (into events()) for v, sorted by (timestamp,
  // event_id). Throws DataError for unknown nodes.
  const std::vector<std::uint32_t>& incident(NodeId v) const;

  int feature_dim() const { return feature_dim_; }
  double t_min() const { return t_min_; }  // 0 when the graph is empty
  double t_max() const { return t_max_; }

 private:
  std::vector<Event> events_;                         // sorted by (timestamp, event_id)
  std::vector<NodeId> nodes_;                         // sorted ascending
  std::unordered_map<NodeId, std::uint32_t> node_slot_;  // node id -> index in nodes_
  std::vector<std::vector<std::uint32_t>> adjacency_;    // per slot, sorted event indices
  int feature_dim_ = 0;
  double t_min_ = 0.0;
  double t_max_ = 0.0;
};

// One neighbor returned by a temporal neighbor query.
struct NeighborHit {
  NodeId neighbor = 0;
  std::size_t event_index = 0;  // index into TemporalGraph::events()
};

enum class NeighborStrategy { kMostRecent, kUniform };

// Builds a graph from unordered records, assigning event ids in record order.
// Rejects wrong feature arity and non-finite values with the record index.
TemporalGraph ingest_events(const std::vector<EventRecord>& records, int feature_dim);

// Up to `limit` incident events of v strictly before t, in chronological
// order. kMostRecent keeps the latest ones (a suffix of the incident list);
// kUniform samples without replacement under `seed`.
std::vector<NeighborHit> temporal_neighbors(const TemporalGraph& g, NodeId v, double t,
                                            int limit, NeighborStrategy strategy,
                                            std::uint64_t seed);

// Adds round(ratio * m) spurious events: endpoints uniform over the node set,
// standard-normal features, timestamps uniform in [t_min, t_max]. Injected
// events get fresh ids after the originals, so removing the masked ids
// restores the original event multiset exactly.
std::pair<TemporalGraph, NoiseMask> inject_noise(const TemporalGraph& g, double ratio,
                                                 std::uint64_t seed);

// Planted-community generator: a desk-scale stand-in for real interaction
// datasets. Nodes are assigned round-robin to communities; with probability
// intra_prob an event stays inside its source community and carries features
// correlated with that community's center, otherwise it crosses communities
// with uncorrelated features.
struct SynthSpec {
  std::int64_t n_nodes = 2000;
  std::int64_t n_events = 20000;
  std::int64_t n_communities = 10;
  double intra_prob = 0.9;
  int feature_dim = 8;
  double time_span = 1000.0;
  std::uint64_t seed = 1;
};

// Records in generation order, label 1 for intra-community events, 0 otherwise.
std::vector<EventRecord> generate_synthetic_records(const SynthSpec& spec);

TemporalGraph generate_synthetic(const SynthSpec& spec);

// Uniformly removes round(drop_fraction * m) events; the node set is kept.
TemporalGraph negative_view(const TemporalGraph& g, double drop_fraction,
                            std::uint64_t seed);

}  // namespace step
