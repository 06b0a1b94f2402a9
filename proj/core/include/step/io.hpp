#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "step/event.hpp"
#include "step/pruner.hpp"
#include "step/trainer.hpp"

namespace step {

// Shortest decimal form that parses back to the same double (and "inf",
// "-inf", "nan" for the non-finite values). All text output goes through
// this, which makes files byte-deterministic.
std::string format_double(double v);

// Strict double parse of a whole token; throws DataError otherwise.
double parse_double(const std::string& token, const std::string& what);

// Dense integer ids for arbitrary string node names, in first-appearance
// order. Persisted as a JSON array of names so outputs stay relatable to the
// original ids.
class NodeIdMap {
 public:
  NodeId intern(const std::string& name);
  std::optional<NodeId> find(const std::string& name) const;
  const std::string& name(NodeId id) const;
  std::size_t size() const { return names_.size(); }

  void save(const std::string& path) const;
  static NodeIdMap load(const std::string& path);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
};

// A parsed event file: records with dense node ids plus the name mapping.
struct EventTable {
  std::vector<EventRecord> records;
  NodeIdMap ids;
  int feature_dim = 0;
  bool has_labels = false;
};

// CSV with header `src,dst,timestamp,f0,...,f{d-1}` and an optional trailing
// `label` column; no quoting, node ids must not contain commas.
EventTable read_events_csv(const std::string& path);
void write_events_csv(const std::string& path, const std::vector<EventRecord>& records,
                      const NodeIdMap* ids, int feature_dim, bool with_labels);

// JSON-lines with fields `src`, `dst`, `ts`, `feat` (array) and optional
// `label`.
EventTable read_events_jsonl(const std::string& path);
void write_events_jsonl(const std::string& path, const std::vector<EventRecord>& records,
                        const NodeIdMap* ids, bool with_labels);

// Dispatches on extension: .jsonl/.ndjson is JSON-lines, anything else CSV.
EventTable read_events(const std::string& path);

// One event as a JSON-lines row (the cmd_stream stdout format).
void write_event_jsonl_row(std::ostream& out, const EventRecord& rec, const NodeIdMap* ids,
                           bool with_label);

// A StreamSource that parses JSON-lines from `in`. Node names are interned
// into `ids`; a record whose feature arity differs from `feature_dim` (or any
// malformed line) comes back with ok = false.
StreamSource jsonl_stream_source(std::istream& in, NodeIdMap& ids, int feature_dim);

// Decision log: CSV `event_id,score,keep,threshold` with keep as 0/1.
void write_decision_log(const std::string& path, const std::vector<PruneDecision>& log);
std::vector<PruneDecision> read_decision_log(const std::string& path);

// Noise mask: JSON object {ratio, injected_event_ids}.
void write_noise_mask(const std::string& path, const NoiseMask& mask);
NoiseMask read_noise_mask(const std::string& path);

// Per-step losses: CSV `step,loss_c,loss_s,loss_b,loss_total,seconds`.
void write_loss_csv(const std::string& path, const std::vector<StepStats>& steps);

// Histogram rows: CSV `bin_lo,bin_hi,count`.
void write_histogram_csv(const std::string& path, const std::vector<double>& edges,
                         const std::vector<std::int64_t>& counts);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace step
