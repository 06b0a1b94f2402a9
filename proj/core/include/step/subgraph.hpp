#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "step/graph_store.hpp"

namespace step {

// One traversal of an event during expansion: `parent` aggregated a message
// from `neighbor` over this event. The same event can be traversed from both
// endpoints; both traversals share one local edge id (and thus one mask slot).
struct SubgraphEdgeRef {
  std::uint32_t parent = 0;    // local node index
  std::uint32_t neighbor = 0;  // local node index
  std::size_t event_index = 0; // into the source graph's events()
  std::uint32_t edge = 0;      // local edge index
  double dt = 0.0;             // parent query time - event timestamp; > 0
};

// One distinct sampled event, in first-traversal order. Endpoints are local
// node indices in the event's own orientation; dt comes from the traversal
// that introduced the edge. Features are copied so the subgraph is
// self-contained for encoding.
struct SampledEdge {
  std::size_t event_index = 0;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double dt = 0.0;
  std::vector<double> features;
};

// Temporally-causal K-hop neighborhood of (root, ref_time). Each node appears
// once (node_index); hop-k neighbors of a node were queried at the timestamp
// of the event that introduced it, so no sampled event postdates its parent's
// query time.
struct TemporalSubgraph {
  NodeId root = 0;
  double ref_time = 0.0;
  std::vector<NodeId> node_ids;  // local index -> node id; index 0 is the root
  std::unordered_map<NodeId, std::uint32_t> node_index;
  std::vector<std::vector<SubgraphEdgeRef>> layers;  // layers[k] = hop k+1 traversals
  std::vector<SampledEdge> edges;
  std::unordered_map<std::size_t, std::uint32_t> edge_index;  // event_index -> edge

  std::size_t num_nodes() const { return node_ids.size(); }
  std::size_t num_edges() const { return edges.size(); }
};

// Breadth-wise recursive expansion: the root is expanded at ref_time, every
// other node once, at the timestamp of its introducing event. Deterministic
// for (seed, strategy).
TemporalSubgraph sample_subgraph(const TemporalGraph& g, NodeId root, double ref_time,
                                 int depth, int fanout, NeighborStrategy strategy,
                                 std::uint64_t seed);

// Uniformly removes round(drop_fraction * num_edges) sampled edges together
// with their traversals; the node set is kept.
TemporalSubgraph negative_view(const TemporalSubgraph& sub, double drop_fraction,
                               std::uint64_t seed);

}  // namespace step
