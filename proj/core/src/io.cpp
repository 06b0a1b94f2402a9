#include "step/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "step/errors.hpp"

namespace step {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string node_token(NodeId id, const NodeIdMap* ids) {
  if (ids != nullptr) return ids->name(id);
  return std::to_string(id);
}

int parse_label(const std::string& token, const std::string& what) {
  int v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw DataError(what + ": bad label '" + token + "'");
  }
  return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// src/dst may be a JSON string or an integer; both intern by their text form
// so numeric and string id files behave the same.
NodeId intern_json_id(const json& j, NodeIdMap& ids, const char* key) {
  if (j.is_string()) return ids.intern(j.get<std::string>());
  if (j.is_number_integer()) return ids.intern(std::to_string(j.get<std::int64_t>()));
  throw DataError(std::string("field '") + key + "' must be a string or integer id");
}

EventRecord record_from_json(const json& j, NodeIdMap& ids, const std::string& what) {
  if (!j.is_object()) throw DataError(what + ": not a JSON object");
  for (const char* key : {"src", "dst", "ts"}) {
    if (!j.contains(key)) throw DataError(what + ": missing field '" + key + "'");
  }
  EventRecord rec;
  rec.src = intern_json_id(j.at("src"), ids, "src");
  rec.dst = intern_json_id(j.at("dst"), ids, "dst");
  if (!j.at("ts").is_number()) throw DataError(what + ": 'ts' must be a number");
  rec.timestamp = j.at("ts").get<double>();
  if (j.contains("feat")) {
    const json& f = j.at("feat");
    if (!f.is_array()) throw DataError(what + ": 'feat' must be an array");
    rec.features.reserve(f.size());
    for (const auto& v : f) {
      if (!v.is_number()) throw DataError(what + ": 'feat' entries must be numbers");
      rec.features.push_back(v.get<double>());
    }
  }
  if (j.contains("label")) rec.label = j.at("label").get<int>();
  return rec;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& what) {
  if (token == "inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw DataError(what + ": bad number '" + token + "'");
  }
  return v;
}

NodeId NodeIdMap::intern(const std::string& name) {
  const auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  const NodeId id = static_cast<NodeId>(names_.size());
  names_.push_back(name);
  index_.emplace(name, id);
  return id;
}

std::optional<NodeId> NodeIdMap::find(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& NodeIdMap::name(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= names_.size()) {
    throw DataError("unknown node id " + std::to_string(id));
  }
  return names_[static_cast<std::size_t>(id)];
}

void NodeIdMap::save(const std::string& path) const {
  json j = json::array();
  for (const auto& n : names_) j.push_back(n);
  write_text_file(path, j.dump() + "\n");
}

NodeIdMap NodeIdMap::load(const std::string& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw DataError("invalid node id mapping in " + path);
  }
  NodeIdMap ids;
  for (const auto& n : j) ids.intern(n.get<std::string>());
  return ids;
}

EventTable read_events_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event file " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty event file");
  strip_cr(line);
  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 3 || header[0] != "src" || header[1] != "dst" ||
      header[2] != "timestamp") {
    throw DataError(path + ": header must start with src,dst,timestamp");
  }
  EventTable table;
  std::size_t cols = header.size();
  table.has_labels = header.back() == "label";
  const std::size_t d = cols - 3 - (table.has_labels ? 1 : 0);
  for (std::size_t i = 0; i < d; ++i) {
    if (header[3 + i] != "f" + std::to_string(i)) {
      throw DataError(path + ": feature column " + std::to_string(3 + i) +
                      " must be named f" + std::to_string(i));
    }
  }
  table.feature_dim = static_cast<int>(d);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.empty()) continue;
    const std::string what = path + " row " + std::to_string(row);
    const std::vector<std::string> tok = split_csv(line);
    if (tok.size() != cols) {
      throw DataError(what + ": expected " + std::to_string(cols) + " columns, got " +
                      std::to_string(tok.size()));
    }
    EventRecord rec;
    rec.src = table.ids.intern(tok[0]);
    rec.dst = table.ids.intern(tok[1]);
    rec.timestamp = parse_double(tok[2], what);
    rec.features.reserve(d);
    for (std::size_t i = 0; i < d; ++i) rec.features.push_back(parse_double(tok[3 + i], what));
    if (table.has_labels) rec.label = parse_label(tok.back(), what);
    table.records.push_back(std::move(rec));
  }
  return table;
}

void write_events_csv(const std::string& path, const std::vector<EventRecord>& records,
                      const NodeIdMap* ids, int feature_dim, bool with_labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "src,dst,timestamp";
  for (int i = 0; i < feature_dim; ++i) out << ",f" << i;
  if (with_labels) out << ",label";
  out << '\n';
  for (const EventRecord& rec : records) {
    out << node_token(rec.src, ids) << ',' << node_token(rec.dst, ids) << ','
        << format_double(rec.timestamp);
    for (double f : rec.features) out << ',' << format_double(f);
    if (with_labels) out << ',' << rec.label;
    out << '\n';
  }
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

EventTable read_events_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event file " + path);
  EventTable table;
  std::string line;
  std::size_t row = 0;
  int d = -1;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.empty()) continue;
    const std::string what = path + " line " + std::to_string(row);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError(what + ": invalid JSON");
    EventRecord rec = record_from_json(j, table.ids, what);
    if (d < 0) d = static_cast<int>(rec.features.size());
    if (static_cast<int>(rec.features.size()) != d) {
      throw DataError(what + ": feature arity " + std::to_string(rec.features.size()) +
                      " != " + std::to_string(d));
    }
    table.has_labels = table.has_labels || rec.label >= 0;
    table.records.push_back(std::move(rec));
  }
  table.feature_dim = d < 0 ? 0 : d;
  return table;
}

void write_event_jsonl_row(std::ostream& out, const EventRecord& rec, const NodeIdMap* ids,
                           bool with_label) {
  json j;
  if (ids != nullptr) {
    j["src"] = ids->name(rec.src);
    j["dst"] = ids->name(rec.dst);
  } else {
    j["src"] = rec.src;
    j["dst"] = rec.dst;
  }
  j["ts"] = rec.timestamp;
  j["feat"] = rec.features;
  if (with_label && rec.label >= 0) j["label"] = rec.label;
  out << j.dump() << '\n';
}

void write_events_jsonl(const std::string& path, const std::vector<EventRecord>& records,
                        const NodeIdMap* ids, bool with_labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (const EventRecord& rec : records) {
    write_event_jsonl_row(out, rec, ids, with_labels);
  }
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

EventTable read_events(const std::string& path) {
  if (ends_with(path, ".jsonl") || ends_with(path, ".ndjson")) {
    return read_events_jsonl(path);
  }
  return read_events_csv(path);
}

StreamSource jsonl_stream_source(std::istream& in, NodeIdMap& ids, int feature_dim) {
  auto line_no = std::make_shared<std::size_t>(0);
  return [&in, &ids, feature_dim, line_no]() -> std::optional<StreamItem> {
    std::string line;
    while (std::getline(in, line)) {
      ++*line_no;
      strip_cr(line);
      if (line.empty()) continue;
      StreamItem item;
      const std::string what = "stdin line " + std::to_string(*line_no);
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        item.ok = false;
        item.error = what + ": invalid JSON";
        return item;
      }
      try {
        item.record = record_from_json(j, ids, what);
      } catch (const DataError& e) {
        item.ok = false;
        item.error = e.what();
        return item;
      }
      if (static_cast<int>(item.record.features.size()) != feature_dim) {
        item.ok = false;
        item.error = what + ": feature arity " +
                     std::to_string(item.record.features.size()) + " != " +
                     std::to_string(feature_dim);
      }
      return item;
    }
    return std::nullopt;
  };
}

void write_decision_log(const std::string& path, const std::vector<PruneDecision>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "event_id,score,keep,threshold\n";
  for (const PruneDecision& d : log) {
    out << d.event_id << ',' << format_double(d.score) << ',' << (d.keep ? 1 : 0) << ','
        << format_double(d.threshold) << '\n';
  }
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

std::vector<PruneDecision> read_decision_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open decision log " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty decision log");
  strip_cr(line);
  if (line != "event_id,score,keep,threshold") {
    throw DataError(path + ": unexpected decision log header");
  }
  std::vector<PruneDecision> log;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.empty()) continue;
    const std::string what = path + " row " + std::to_string(row);
    const std::vector<std::string> tok = split_csv(line);
    if (tok.size() != 4) throw DataError(what + ": expected 4 columns");
    PruneDecision d;
    d.event_id = static_cast<EventId>(std::llround(parse_double(tok[0], what)));
    d.score = parse_double(tok[1], what);
    if (tok[2] == "1") {
      d.keep = true;
    } else if (tok[2] == "0") {
      d.keep = false;
    } else {
      throw DataError(what + ": keep must be 0 or 1");
    }
    d.threshold = parse_double(tok[3], what);
    log.push_back(d);
  }
  return log;
}

void write_noise_mask(const std::string& path, const NoiseMask& mask) {
  std::vector<EventId> ids(mask.injected_event_ids.begin(), mask.injected_event_ids.end());
  std::sort(ids.begin(), ids.end());
  json j;
  j["ratio"] = mask.ratio;
  j["injected_event_ids"] = ids;
  write_text_file(path, j.dump() + "\n");
}

NoiseMask read_noise_mask(const std::string& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("invalid noise mask in " + path);
  NoiseMask mask;
  mask.ratio = j.at("ratio").get<double>();
  for (const auto& id : j.at("injected_event_ids")) {
    mask.injected_event_ids.insert(id.get<EventId>());
  }
  return mask;
}

void write_loss_csv(const std::string& path, const std::vector<StepStats>& steps) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "step,loss_c,loss_s,loss_b,loss_total,seconds\n";
  for (const StepStats& s : steps) {
    out << s.step << ',' << format_double(s.loss_c) << ',' << format_double(s.loss_s)
        << ',' << format_double(s.loss_b) << ',' << format_double(s.loss_total) << ','
        << format_double(s.seconds) << '\n';
  }
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

void write_histogram_csv(const std::string& path, const std::vector<double>& edges,
                         const std::vector<std::int64_t>& counts) {
  if (edges.size() != counts.size() + 1) {
    throw DataError("histogram edges must outnumber counts by one");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out << format_double(edges[i]) << ',' << format_double(edges[i + 1]) << ','
        << counts[i] << '\n';
  }
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace step
