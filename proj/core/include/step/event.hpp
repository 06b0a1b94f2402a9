#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

namespace step {

using NodeId = std::int64_t;
using EventId = std::int64_t;

// One timestamped directed interaction; the atom of a dynamic graph.
struct Event {
  EventId event_id = 0;  // ingestion ordinal, unique, strictly increasing
  NodeId src = 0;
  NodeId dst = 0;
  std::vector<double> features;  // length d for the whole dataset; d may be 0
  double timestamp = 0.0;
};

// An event record before ingestion (no id yet, no ordering guarantee).
struct EventRecord {
  NodeId src = 0;
  NodeId dst = 0;
  double timestamp = 0.0;
  std::vector<double> features;
  int label = -1;  // optional per-event label; -1 when absent
};

// Identifies events injected as structural noise.
struct NoiseMask {
  std::unordered_set<EventId> injected_event_ids;
  double ratio = 0.0;

  bool contains(EventId id) const { return injected_event_ids.count(id) > 0; }
};

}  // namespace step
