#include "step/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "step/errors.hpp"

namespace step {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'T', 'E', 'P', 'C', 'K', 'P', 'T'};
constexpr int kFormatVersion = 1;

void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_doubles_le(std::ostream& out, const double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      write_u64_le(out, std::bit_cast<std::uint64_t>(p[i]));
    }
  }
}

void read_doubles_le(std::istream& in, double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) p[i] = std::bit_cast<double>(read_u64_le(in));
  }
}

// JSON has no NaN/inf literals; tag non-finite doubles as strings.
json json_double(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double double_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw DataError("expected a number, got " + j.dump());
}

json config_json(const TrainConfig& c) {
  json j;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["max_steps"] = c.max_steps;
  j["lambda1"] = c.lambda1;
  j["lambda2"] = c.lambda2;
  j["q"] = c.q;
  j["tau"] = c.tau;
  j["lr"] = c.lr;
  j["depth"] = c.depth;
  j["fanout"] = c.fanout;
  j["strategy"] = to_string(c.strategy);
  j["pool"] = to_string(c.pool);
  j["neg_policy"] = to_string(c.neg_policy);
  j["drop_fraction"] = c.drop_fraction;
  j["regularizer"] = to_string(c.regularizer);
  j["literal_infonce"] = c.literal_infonce;
  j["ablate_redundancy"] = c.ablate_redundancy;
  j["ablate_relevance"] = c.ablate_relevance;
  j["embed_dim"] = c.embed_dim;
  j["time_dim"] = c.time_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["rescale_time"] = c.rescale_time;
  j["holdout_fraction"] = c.holdout_fraction;
  j["patience"] = c.patience;
  j["checkpoint_every"] = c.checkpoint_every;
  j["workers"] = c.workers;
  j["seed"] = c.seed;
  return j;
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("config key '") + key + "': " + e.what());
  }
}

TrainConfig config_from(const json& j) {
  if (!j.is_object()) throw DataError("config must be a JSON object");
  static const char* known[] = {
      "batch_size", "epochs", "max_steps", "lambda1", "lambda2", "q", "tau", "lr",
      "depth", "fanout", "strategy", "pool", "neg_policy", "drop_fraction",
      "regularizer", "literal_infonce", "ablate_redundancy", "ablate_relevance",
      "embed_dim", "time_dim", "hidden_dim", "rescale_time", "holdout_fraction",
      "patience", "checkpoint_every", "workers", "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw DataError("unknown config key '" + it.key() + "'");
  }
  TrainConfig c;
  take(j, "batch_size", c.batch_size);
  take(j, "epochs", c.epochs);
  take(j, "max_steps", c.max_steps);
  take(j, "lambda1", c.lambda1);
  take(j, "lambda2", c.lambda2);
  take(j, "q", c.q);
  take(j, "tau", c.tau);
  take(j, "lr", c.lr);
  take(j, "depth", c.depth);
  take(j, "fanout", c.fanout);
  if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  if (j.contains("pool")) c.pool = parse_pool(j.at("pool").get<std::string>());
  if (j.contains("neg_policy")) {
    c.neg_policy = parse_neg_policy(j.at("neg_policy").get<std::string>());
  }
  take(j, "drop_fraction", c.drop_fraction);
  if (j.contains("regularizer")) {
    c.regularizer = parse_regularizer(j.at("regularizer").get<std::string>());
  }
  take(j, "literal_infonce", c.literal_infonce);
  take(j, "ablate_redundancy", c.ablate_redundancy);
  take(j, "ablate_relevance", c.ablate_relevance);
  take(j, "embed_dim", c.embed_dim);
  take(j, "time_dim", c.time_dim);
  take(j, "hidden_dim", c.hidden_dim);
  take(j, "rescale_time", c.rescale_time);
  take(j, "holdout_fraction", c.holdout_fraction);
  take(j, "patience", c.patience);
  take(j, "checkpoint_every", c.checkpoint_every);
  take(j, "workers", c.workers);
  take(j, "seed", c.seed);
  return c;
}

json parse_json(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError(std::string("invalid JSON in ") + what);
  return j;
}

}  // namespace

std::string to_string(NeighborStrategy s) {
  return s == NeighborStrategy::kMostRecent ? "most-recent" : "uniform";
}
std::string to_string(PoolMode p) {
  switch (p) {
    case PoolMode::kCentral: return "central";
    case PoolMode::kMean: return "mean";
    default: return "sum";
  }
}
std::string to_string(NegativePolicy p) {
  return p == NegativePolicy::kInBatch ? "in-batch" : "random-drop";
}
std::string to_string(Regularizer r) {
  return r == Regularizer::kBernoulli ? "bernoulli" : "l1";
}

NeighborStrategy parse_strategy(const std::string& s) {
  if (s == "most-recent") return NeighborStrategy::kMostRecent;
  if (s == "uniform") return NeighborStrategy::kUniform;
  throw DataError("unknown neighbor strategy '" + s + "'");
}
PoolMode parse_pool(const std::string& s) {
  if (s == "central") return PoolMode::kCentral;
  if (s == "mean") return PoolMode::kMean;
  if (s == "sum") return PoolMode::kSum;
  throw DataError("unknown pool mode '" + s + "'");
}
NegativePolicy parse_neg_policy(const std::string& s) {
  if (s == "in-batch") return NegativePolicy::kInBatch;
  if (s == "random-drop") return NegativePolicy::kRandomDrop;
  throw DataError("unknown negative policy '" + s + "'");
}
Regularizer parse_regularizer(const std::string& s) {
  if (s == "bernoulli") return Regularizer::kBernoulli;
  if (s == "l1") return Regularizer::kL1;
  throw DataError("unknown regularizer '" + s + "'");
}

std::string config_to_json(const TrainConfig& config) {
  return config_json(config).dump(2) + "\n";
}

TrainConfig config_from_json(const std::string& text) {
  return config_from(parse_json(text, "config"));
}

TrainConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_checkpoint(const ModelState& state, const std::string& path) {
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["dtype"] = "float64";
  manifest["seed"] = state.config.seed;
  manifest["config"] = config_json(state.config);
  manifest["encoder"] = {{"embed", state.encoder.dims.embed},
                         {"time", state.encoder.dims.time},
                         {"feat", state.encoder.dims.feat},
                         {"depth", state.encoder.dims.depth},
                         {"time_scale", state.encoder.dims.time_scale}};
  manifest["trainer"] = {{"global_step", state.global_step},
                         {"epoch", state.epoch},
                         {"step_in_epoch", state.step_in_epoch},
                         {"best_eval", json_double(state.best_eval)},
                         {"evals_done", state.evals_done},
                         {"evals_since_improve", state.evals_since_improve},
                         {"adam_step", state.adam.step()}};
  json params = json::array();
  for (std::size_t i = 0; i < state.params.count(); ++i) {
    const auto& e = state.params.entry(i);
    json shape = json::array();
    for (std::size_t d = 0; d < e.value.rank(); ++d) shape.push_back(e.value.dim(d));
    params.push_back({{"path", e.path}, {"shape", shape}});
  }
  manifest["params"] = params;
  manifest["payload_sections"] = {"values", "adam_m", "adam_v"};

  const std::string text = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint file " + path + " for writing");
  out.write(kMagic, 8);
  write_u64_le(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t i = 0; i < state.params.count(); ++i) {
    const Tensor& t = state.params.entry(i).value;
    write_doubles_le(out, t.data(), t.size());
  }
  for (std::size_t i = 0; i < state.params.count(); ++i) {
    const Tensor& t = state.adam.m(i);
    write_doubles_le(out, t.data(), t.size());
  }
  for (std::size_t i = 0; i < state.params.count(); ++i) {
    const Tensor& t = state.adam.v(i);
    write_doubles_le(out, t.data(), t.size());
  }
  out.flush();
  if (!out) throw DataError("failed writing checkpoint file " + path);
}

namespace {

json read_manifest(std::istream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError(path + " is not a checkpoint file");
  }
  const std::uint64_t len = read_u64_le(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint manifest in " + path);
  json manifest = parse_json(text, "checkpoint manifest");
  if (manifest.at("format_version").get<int>() != kFormatVersion) {
    throw DataError("unsupported checkpoint format version in " + path);
  }
  if (manifest.at("dtype").get<std::string>() != "float64") {
    throw DataError("unsupported checkpoint dtype in " + path);
  }
  return manifest;
}

}  // namespace

ModelState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint file " + path);
  json manifest = read_manifest(in, path);

  TrainConfig config = config_from(manifest.at("config"));
  const json& enc = manifest.at("encoder");
  EncoderDims dims;
  dims.embed = enc.at("embed").get<std::size_t>();
  dims.time = enc.at("time").get<std::size_t>();
  dims.feat = enc.at("feat").get<std::size_t>();
  dims.depth = enc.at("depth").get<int>();
  dims.time_scale = enc.at("time_scale").get<double>();

  ModelState st = build_model(config, dims);

  const json& params = manifest.at("params");
  if (params.size() != st.params.count()) {
    throw DataError("checkpoint parameter count does not match the model");
  }
  for (std::size_t i = 0; i < st.params.count(); ++i) {
    const auto& e = st.params.entry(i);
    if (params.at(i).at("path").get<std::string>() != e.path) {
      throw DataError("checkpoint parameter order mismatch at " + e.path);
    }
    const json& shape = params.at(i).at("shape");
    bool ok = shape.size() == e.value.rank();
    for (std::size_t d = 0; ok && d < e.value.rank(); ++d) {
      ok = shape.at(d).get<std::size_t>() == e.value.dim(d);
    }
    if (!ok) throw DataError("checkpoint shape mismatch at " + e.path);
  }
  for (std::size_t i = 0; i < st.params.count(); ++i) {
    Tensor& t = st.params.entry(i).value;
    read_doubles_le(in, t.data(), t.size());
  }
  for (std::size_t i = 0; i < st.params.count(); ++i) {
    read_doubles_le(in, st.adam.m(i).data(), st.adam.m(i).size());
  }
  for (std::size_t i = 0; i < st.params.count(); ++i) {
    read_doubles_le(in, st.adam.v(i).data(), st.adam.v(i).size());
  }
  if (!in) throw DataError("truncated checkpoint payload in " + path);

  const json& tr = manifest.at("trainer");
  st.global_step = tr.at("global_step").get<std::int64_t>();
  st.epoch = tr.at("epoch").get<std::int64_t>();
  st.step_in_epoch = tr.at("step_in_epoch").get<std::int64_t>();
  st.best_eval = double_from_json(tr.at("best_eval"));
  st.evals_done = tr.at("evals_done").get<std::int64_t>();
  st.evals_since_improve = tr.at("evals_since_improve").get<std::int64_t>();
  st.adam.set_step(tr.at("adam_step").get<std::int64_t>());
  return st;
}

std::string checkpoint_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint file " + path);
  return read_manifest(in, path).dump(2) + "\n";
}

}  // namespace step
