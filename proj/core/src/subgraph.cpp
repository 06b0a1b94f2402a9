#include "step/subgraph.hpp"

#include <algorithm>

#include "step/errors.hpp"
#include "step/rng.hpp"

namespace step {

TemporalSubgraph sample_subgraph(const TemporalGraph& g, NodeId root, double ref_time,
                                 int depth, int fanout, NeighborStrategy strategy,
                                 std::uint64_t seed) {
  if (depth < 0) throw DataError("subgraph depth must be >= 0");
  if (!g.has_node(root)) throw DataError("unknown root node " + std::to_string(root));

  TemporalSubgraph sub;
  sub.root = root;
  sub.ref_time = ref_time;
  sub.node_ids.push_back(root);
  sub.node_index.emplace(root, 0u);
  sub.layers.resize(static_cast<std::size_t>(depth));

  // Frontier carries (local node, query time); every node is expanded at most
  // once, seeded by its local ordinal so the draw stream is per-parent.
  std::vector<std::pair<std::uint32_t, double>> frontier{{0u, ref_time}};
  for (int hop = 0; hop < depth && !frontier.empty(); ++hop) {
    std::vector<std::pair<std::uint32_t, double>> next;
    for (const auto& [parent, query_time] : frontier) {
      const auto hits = temporal_neighbors(g, sub.node_ids[parent], query_time, fanout,
                                           strategy, mix64(seed, parent));
      for (const NeighborHit& hit : hits) {
        const Event& e = g.event(hit.event_index);
        auto [node_it, node_is_new] =
            sub.node_index.emplace(hit.neighbor, static_cast<std::uint32_t>(sub.node_ids.size()));
        if (node_is_new) {
          sub.node_ids.push_back(hit.neighbor);
          next.emplace_back(node_it->second, e.timestamp);
        }
        auto [edge_it, edge_is_new] =
            sub.edge_index.emplace(hit.event_index, static_cast<std::uint32_t>(sub.edges.size()));
        const double dt = query_time - e.timestamp;
        if (edge_is_new) {
          SampledEdge se;
          se.event_index = hit.event_index;
          se.src = sub.node_index.at(e.src);
          se.dst = sub.node_index.at(e.dst);
          se.dt = dt;
          se.features = e.features;
          sub.edges.push_back(se);
        }
        sub.layers[static_cast<std::size_t>(hop)].push_back(
            {parent, node_it->second, hit.event_index, edge_it->second, dt});
      }
    }
    frontier = std::move(next);
  }
  return sub;
}

TemporalSubgraph negative_view(const TemporalSubgraph& sub, double drop_fraction,
                               std::uint64_t seed) {
  if (drop_fraction < 0.0 || drop_fraction > 1.0) {
    throw DataError("drop fraction must lie in [0, 1]");
  }
  const std::size_t n_edges = sub.num_edges();
  const std::size_t k =
      static_cast<std::size_t>(std::llround(drop_fraction * static_cast<double>(n_edges)));

  std::vector<std::uint32_t> pool(n_edges);
  for (std::size_t i = 0; i < n_edges; ++i) pool[i] = static_cast<std::uint32_t>(i);
  Rng rng(mix64(seed, 0x737562ull));  // "sub"
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n_edges - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<char> dropped(n_edges, 0);
  for (std::size_t i = 0; i < k; ++i) dropped[pool[i]] = 1;

  TemporalSubgraph out;
  out.root = sub.root;
  out.ref_time = sub.ref_time;
  out.node_ids = sub.node_ids;
  out.node_index = sub.node_index;
  std::vector<std::uint32_t> remap(n_edges, 0);
  for (std::size_t i = 0; i < n_edges; ++i) {
    if (dropped[i]) continue;
    remap[i] = static_cast<std::uint32_t>(out.edges.size());
    out.edge_index.emplace(sub.edges[i].event_index, remap[i]);
    out.edges.push_back(sub.edges[i]);
  }
  out.layers.resize(sub.layers.size());
  for (std::size_t hop = 0; hop < sub.layers.size(); ++hop) {
    for (const SubgraphEdgeRef& ref : sub.layers[hop]) {
      if (dropped[ref.edge]) continue;
      SubgraphEdgeRef kept = ref;
      kept.edge = remap[ref.edge];
      out.layers[hop].push_back(kept);
    }
  }
  return out;
}

}  // namespace step
