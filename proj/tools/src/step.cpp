#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "step/checkpoint.hpp"
#include "step/errors.hpp"
#include "step/eval.hpp"
#include "step/graph_store.hpp"
#include "step/io.hpp"
#include "step/pruner.hpp"
#include "step/trainer.hpp"
#include "step/version.hpp"

namespace {

using nlohmann::json;
using namespace step;

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json jnum(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

void emit_manifest(const std::string& path, const std::string& command, const json& config,
                   std::uint64_t seed, const json& inputs, const json& outputs,
                   const json& summary, double wall) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["build_id"] = kBuildId;
  m["wall_seconds"] = wall;
  m["summary"] = summary;
  const std::string text = m.dump(2) + "\n";
  if (path == "-") {
    std::cerr << text;
  } else {
    write_text_file(path, text);
  }
}

SynthSpec synth_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("invalid generator spec JSON");
  SynthSpec spec;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "n_nodes") {
      spec.n_nodes = it.value().get<std::size_t>();
    } else if (k == "n_events") {
      spec.n_events = it.value().get<std::size_t>();
    } else if (k == "n_communities") {
      spec.n_communities = it.value().get<std::size_t>();
    } else if (k == "intra_prob") {
      spec.intra_prob = it.value().get<double>();
    } else if (k == "feature_dim") {
      spec.feature_dim = it.value().get<int>();
    } else if (k == "time_span") {
      spec.time_span = it.value().get<double>();
    } else if (k == "seed") {
      spec.seed = it.value().get<std::uint64_t>();
    } else {
      throw DataError("unknown generator spec key '" + k + "'");
    }
  }
  return spec;
}

json synth_to_json(const SynthSpec& s) {
  return json{{"n_nodes", s.n_nodes},     {"n_events", s.n_events},
              {"n_communities", s.n_communities}, {"intra_prob", s.intra_prob},
              {"feature_dim", s.feature_dim},     {"time_span", s.time_span},
              {"seed", s.seed}};
}

void apply_ablate(const std::string& mode, TrainConfig& cfg) {
  if (mode == "red") {
    cfg.ablate_redundancy = true;
  } else if (mode == "rel") {
    cfg.ablate_relevance = true;
  } else if (mode == "red-rel") {
    cfg.ablate_redundancy = true;
    cfg.ablate_relevance = true;
  } else if (!mode.empty()) {
    throw DataError("unknown ablation '" + mode + "'");
  }
}

DtPolicy parse_dt_policy(const std::string& s) {
  if (s == "zero") return DtPolicy::kZero;
  if (s == "ref-max") return DtPolicy::kRefMax;
  throw DataError("unknown dt policy '" + s + "'");
}

// Records in ingestion order (event id == row index), labels carried over
// from the generator and injected events labeled 0.
std::vector<EventRecord> records_by_event_id(const TemporalGraph& g,
                                             const std::vector<EventRecord>& originals) {
  std::vector<EventRecord> rows(g.num_events());
  for (std::size_t i = 0; i < g.num_events(); ++i) {
    const Event& e = g.event(i);
    EventRecord rec;
    rec.src = e.src;
    rec.dst = e.dst;
    rec.timestamp = e.timestamp;
    rec.features = e.features;
    const auto id = static_cast<std::size_t>(e.event_id);
    rec.label = id < originals.size() ? originals[id].label : 0;
    rows[id] = std::move(rec);
  }
  return rows;
}

struct GenerateArgs {
  std::string spec_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  double noise_ratio = 0.0;
  std::string mask_path;
  std::string manifest_path;
  bool no_labels = false;
};

int run_generate(const GenerateArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  SynthSpec spec = synth_from_json(read_text_file(a.spec_path));
  if (a.seed) spec.seed = *a.seed;

  std::vector<EventRecord> records = generate_synthetic_records(spec);
  std::size_t n_injected = 0;
  std::vector<EventRecord> rows;
  NoiseMask mask;
  if (a.noise_ratio > 0.0) {
    TemporalGraph g = ingest_events(records, spec.feature_dim);
    auto [noisy, m] = inject_noise(g, a.noise_ratio, spec.seed);
    mask = std::move(m);
    n_injected = mask.injected_event_ids.size();
    rows = records_by_event_id(noisy, records);
  } else {
    rows = records;
  }
  write_events_csv(a.out_path, rows, nullptr, spec.feature_dim, !a.no_labels);
  const std::string mask_path =
      a.mask_path.empty() ? a.out_path + ".mask.json" : a.mask_path;
  if (a.noise_ratio > 0.0) write_noise_mask(mask_path, mask);

  std::size_t n_intra = 0;
  for (const EventRecord& r : records) n_intra += r.label == 1 ? 1 : 0;
  json summary{{"n_events", rows.size()},
               {"n_injected", n_injected},
               {"intra_fraction",
                records.empty() ? 0.0
                                : static_cast<double>(n_intra) /
                                      static_cast<double>(records.size())}};
  json outputs{{"events", a.out_path}};
  if (a.noise_ratio > 0.0) outputs["mask"] = mask_path;
  json config = synth_to_json(spec);
  config["noise_ratio"] = a.noise_ratio;
  emit_manifest(a.manifest_path.empty() ? a.out_path + ".manifest.json" : a.manifest_path,
                "generate", config, spec.seed, json{{"spec", a.spec_path}}, outputs,
                summary, seconds_since(t0));
  return 0;
}

struct TrainArgs {
  std::string events_path;
  std::string config_path;
  std::string out_dir;
  std::string resume_path;
  std::optional<std::uint64_t> seed;
  std::string neg_policy;
  std::string regularizer;
  std::string ablate;
  std::optional<int> workers;
  std::optional<std::int64_t> epochs;
  std::optional<std::int64_t> max_steps;
  std::optional<std::size_t> batch_size;
  std::optional<std::int64_t> checkpoint_every;
};

int run_train(const TrainArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  EventTable table = read_events(a.events_path);
  TemporalGraph g = ingest_events(table.records, table.feature_dim);

  ModelState state;
  if (!a.resume_path.empty()) {
    state = load_checkpoint(a.resume_path);
    if (state.encoder.dims.feat != static_cast<std::size_t>(table.feature_dim)) {
      throw DataError("checkpoint feature dimension does not match the event file");
    }
    if (a.epochs) state.config.epochs = *a.epochs;
    if (a.max_steps) state.config.max_steps = *a.max_steps;
    if (a.workers) state.config.workers = *a.workers;
    if (a.checkpoint_every) state.config.checkpoint_every = *a.checkpoint_every;
  } else {
    TrainConfig config;
    if (!a.config_path.empty()) config = config_from_json_file(a.config_path);
    if (a.seed) config.seed = *a.seed;
    if (!a.neg_policy.empty()) config.neg_policy = parse_neg_policy(a.neg_policy);
    if (!a.regularizer.empty()) config.regularizer = parse_regularizer(a.regularizer);
    apply_ablate(a.ablate, config);
    if (a.workers) config.workers = *a.workers;
    if (a.epochs) config.epochs = *a.epochs;
    if (a.max_steps) config.max_steps = *a.max_steps;
    if (a.batch_size) config.batch_size = *a.batch_size;
    if (a.checkpoint_every) config.checkpoint_every = *a.checkpoint_every;
    state = init_model(g, config);
  }

  fs::create_directories(a.out_dir);
  const std::string ckpt_path = (fs::path(a.out_dir) / "checkpoint.step").string();
  const auto hook = [&](const ModelState& st, bool) { save_checkpoint(st, ckpt_path); };
  TrainReport report = train(g, state, hook);

  write_loss_csv((fs::path(a.out_dir) / "losses.csv").string(), report.steps);
  write_text_file((fs::path(a.out_dir) / "config.json").string(),
                  config_to_json(state.config));
  table.ids.save((fs::path(a.out_dir) / "node_ids.json").string());

  json eval_losses = json::array();
  for (double v : report.eval_losses) eval_losses.push_back(jnum(v));
  json summary{{"steps", report.steps.size()},
               {"global_step", state.global_step},
               {"early_stopped", report.early_stopped},
               {"eval_losses", eval_losses},
               {"train_seconds", report.wall_seconds}};
  if (!report.steps.empty()) {
    summary["final_loss"] = jnum(report.steps.back().loss_total);
  }
  emit_manifest((fs::path(a.out_dir) / "manifest.json").string(), "train",
                json::parse(config_to_json(state.config)), state.config.seed,
                json{{"events", a.events_path}},
                json{{"checkpoint", ckpt_path},
                     {"losses", (fs::path(a.out_dir) / "losses.csv").string()},
                     {"node_ids", (fs::path(a.out_dir) / "node_ids.json").string()}},
                summary, seconds_since(t0));
  return 0;
}

struct PruneArgs {
  std::string events_path;
  std::string checkpoint_path;
  std::string out_dir;
  std::optional<double> ratio;
  std::optional<double> threshold;
  std::string dt_policy = "ref-max";
};

int run_prune(const PruneArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  EventTable table = read_events(a.events_path);
  TemporalGraph g = ingest_events(table.records, table.feature_dim);
  ModelState model = load_checkpoint(a.checkpoint_path);
  if (model.encoder.dims.feat != static_cast<std::size_t>(table.feature_dim)) {
    throw DataError("checkpoint feature dimension does not match the event file");
  }
  PruneSpec spec;
  spec.ratio = a.ratio;
  spec.theta = a.threshold;
  spec.dt_policy = parse_dt_policy(a.dt_policy);
  auto [kept_graph, decisions] =
      prune_offline(g, model.params, model.pruner, model.encoder, spec);

  std::vector<char> keep(table.records.size(), 0);
  for (const PruneDecision& d : decisions) {
    keep[static_cast<std::size_t>(d.event_id)] = d.keep ? 1 : 0;
  }
  std::vector<EventRecord> kept_records;
  kept_records.reserve(kept_graph.num_events());
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    if (keep[i]) kept_records.push_back(table.records[i]);
  }

  fs::create_directories(a.out_dir);
  const std::string pruned_path = (fs::path(a.out_dir) / "pruned.csv").string();
  const std::string log_path = (fs::path(a.out_dir) / "decisions.csv").string();
  write_events_csv(pruned_path, kept_records, &table.ids, table.feature_dim,
                   table.has_labels);
  write_decision_log(log_path, decisions);
  table.ids.save((fs::path(a.out_dir) / "node_ids.json").string());

  const std::size_t n_kept = kept_records.size();
  const std::size_t n = table.records.size();
  json config{{"dt_policy", a.dt_policy}};
  if (a.ratio) config["ratio"] = *a.ratio;
  if (a.threshold) config["threshold"] = *a.threshold;
  json summary{{"n_events", n},
               {"n_kept", n_kept},
               {"n_dropped", n - n_kept},
               {"achieved_ratio",
                n > 0 ? static_cast<double>(n - n_kept) / static_cast<double>(n) : 0.0},
               {"threshold", decisions.empty() ? json(nullptr) : jnum(decisions[0].threshold)}};
  emit_manifest((fs::path(a.out_dir) / "manifest.json").string(), "prune", config,
                model.config.seed,
                json{{"events", a.events_path}, {"checkpoint", a.checkpoint_path}},
                json{{"pruned", pruned_path}, {"decisions", log_path}}, summary,
                seconds_since(t0));
  return 0;
}

struct StreamArgs {
  std::string checkpoint_path;
  double threshold = 0.0;
  std::string dt_policy = "zero";
  double ref_time = 0.0;
  int workers = 1;
  std::string dropped_path = "dropped_ids.txt";
  std::string manifest_path = "-";
};

int run_stream(const StreamArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelState model = load_checkpoint(a.checkpoint_path);
  NodeIdMap ids;
  StreamSource source = jsonl_stream_source(
      std::cin, ids, static_cast<int>(model.encoder.dims.feat));

  std::ofstream dropped(a.dropped_path, std::ios::trunc);
  if (!dropped) throw DataError("cannot open " + a.dropped_path + " for writing");
  std::ios::sync_with_stdio(false);
  const StreamSink keep_sink = [&](const EventRecord& rec, const PruneDecision&) {
    write_event_jsonl_row(std::cout, rec, &ids, true);
  };
  const StreamSink drop_sink = [&](const EventRecord&, const PruneDecision& d) {
    dropped << d.event_id << '\n';
  };
  StreamSummary summary =
      stream_prune(source, model.params, model.pruner, model.encoder, a.threshold,
                   parse_dt_policy(a.dt_policy), a.ref_time, a.workers, keep_sink,
                   drop_sink);
  std::cout.flush();
  dropped.flush();
  if (!dropped) throw DataError("failed writing " + a.dropped_path);

  json config{{"threshold", a.threshold},
              {"dt_policy", a.dt_policy},
              {"ref_time", a.ref_time},
              {"workers", a.workers}};
  json jsummary{{"n_in", summary.n_in},
                {"n_kept", summary.n_kept},
                {"n_dropped", summary.n_dropped},
                {"n_errors", summary.n_errors},
                {"score_seconds", summary.score_seconds},
                {"events_per_sec", summary.events_per_sec}};
  emit_manifest(a.manifest_path, "stream", config, model.config.seed,
                json{{"checkpoint", a.checkpoint_path}, {"events", "stdin"}},
                json{{"kept", "stdout"}, {"dropped", a.dropped_path}}, jsummary,
                seconds_since(t0));
  return 0;
}

struct EvalArgs {
  std::string events_path;
  std::string mask_path;
  std::string log_path;
  std::string out_dir;
  std::string checkpoint_path;
  int proxy_iters = 300;
};

int run_eval(const EvalArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  EventTable table = read_events(a.events_path);
  NoiseMask mask = read_noise_mask(a.mask_path);
  std::vector<PruneDecision> log = read_decision_log(a.log_path);

  std::vector<char> covered(table.records.size(), 0);
  if (log.size() != table.records.size()) {
    throw DataError("decision log has " + std::to_string(log.size()) + " rows for " +
                    std::to_string(table.records.size()) + " events");
  }
  for (const PruneDecision& d : log) {
    if (d.event_id < 0 || static_cast<std::size_t>(d.event_id) >= covered.size() ||
        covered[static_cast<std::size_t>(d.event_id)]) {
      throw DataError("decision log does not cover the event file exactly");
    }
    covered[static_cast<std::size_t>(d.event_id)] = 1;
  }

  EvalReport rep = evaluate_pruning(mask, log);

  if (!a.checkpoint_path.empty() && table.has_labels) {
    ModelState model = load_checkpoint(a.checkpoint_path);
    if (model.encoder.dims.feat != static_cast<std::size_t>(table.feature_dim)) {
      throw DataError("checkpoint feature dimension does not match the event file");
    }
    TemporalGraph full = ingest_events(table.records, table.feature_dim);
    std::vector<EventRecord> kept;
    for (const PruneDecision& d : log) {
      if (d.keep) kept.push_back(table.records[static_cast<std::size_t>(d.event_id)]);
    }
    TemporalGraph pruned = ingest_events(kept, table.feature_dim);
    ProxyConfig pcfg;
    pcfg.iters = a.proxy_iters;
    pcfg.seed = model.config.seed;
    rep.proxy_auc_full = proxy_auc(full, model, table.records, pcfg);
    rep.proxy_auc_pruned = proxy_auc(pruned, model, table.records, pcfg);
  }

  fs::create_directories(a.out_dir);
  json jrep{{"n_events", rep.n_events},
            {"n_injected", rep.n_injected},
            {"n_kept", rep.n_kept},
            {"n_dropped", rep.n_dropped},
            {"precision", jnum(rep.precision)},
            {"recall", jnum(rep.recall)},
            {"true_retention", jnum(rep.true_retention)},
            {"achieved_ratio", jnum(rep.achieved_ratio)},
            {"hist_edges", rep.hist_edges},
            {"hist_counts", rep.hist_counts},
            {"proxy_auc_full",
             rep.proxy_auc_full ? jnum(*rep.proxy_auc_full) : json(nullptr)},
            {"proxy_auc_pruned",
             rep.proxy_auc_pruned ? jnum(*rep.proxy_auc_pruned) : json(nullptr)},
            {"proxy_note",
             "tiny frozen-embedding logistic probe; not comparable to full-model results"}};
  const std::string report_path = (fs::path(a.out_dir) / "eval.json").string();
  const std::string hist_path = (fs::path(a.out_dir) / "hist.csv").string();
  write_text_file(report_path, jrep.dump(2) + "\n");
  write_histogram_csv(hist_path, rep.hist_edges, rep.hist_counts);

  json summary = jrep;
  summary.erase("hist_edges");
  summary.erase("hist_counts");
  emit_manifest((fs::path(a.out_dir) / "manifest.json").string(), "eval",
                json{{"proxy_iters", a.proxy_iters}}, 0,
                json{{"events", a.events_path},
                     {"mask", a.mask_path},
                     {"decisions", a.log_path}},
                json{{"report", report_path}, {"histogram", hist_path}}, summary,
                seconds_since(t0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STEP: unsupervised pruning for large-scale dynamic graphs"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cmd_gen = app.add_subcommand("generate", "Generate a planted-community event file");
  cmd_gen->add_option("--spec", gen.spec_path, "Generator spec JSON")->required();
  cmd_gen->add_option("--out", gen.out_path, "Output event CSV")->required();
  std::uint64_t gen_seed = 0;
  auto* gen_seed_opt = cmd_gen->add_option("--seed", gen_seed, "Override the spec seed");
  cmd_gen->add_option("--noise-ratio", gen.noise_ratio,
                      "Inject round(ratio*m) random events and write a mask");
  cmd_gen->add_option("--mask", gen.mask_path, "Noise mask path (default <out>.mask.json)");
  cmd_gen->add_option("--manifest", gen.manifest_path,
                      "Manifest path (default <out>.manifest.json)");
  cmd_gen->add_flag("--no-labels", gen.no_labels, "Omit the label column");

  TrainArgs tr;
  auto* cmd_tr = app.add_subcommand("train", "Train the pruning model");
  cmd_tr->add_option("--events", tr.events_path, "Event file (CSV or JSONL)")->required();
  cmd_tr->add_option("--config", tr.config_path, "Training config JSON");
  cmd_tr->add_option("--out-dir", tr.out_dir, "Output directory")->required();
  cmd_tr->add_option("--resume", tr.resume_path, "Checkpoint to resume from");
  std::uint64_t tr_seed = 0;
  auto* tr_seed_opt = cmd_tr->add_option("--seed", tr_seed, "Override the config seed");
  cmd_tr->add_option("--neg-policy", tr.neg_policy, "in-batch | random-drop");
  cmd_tr->add_option("--regularizer", tr.regularizer, "bernoulli | l1");
  cmd_tr->add_option("--ablate", tr.ablate, "red | rel | red-rel");
  int tr_workers = 0;
  auto* tr_workers_opt = cmd_tr->add_option("--workers", tr_workers, "Worker threads");
  std::int64_t tr_epochs = 0;
  auto* tr_epochs_opt = cmd_tr->add_option("--epochs", tr_epochs, "Epoch budget");
  std::int64_t tr_max_steps = 0;
  auto* tr_max_steps_opt = cmd_tr->add_option("--max-steps", tr_max_steps, "Step budget");
  std::size_t tr_batch = 0;
  auto* tr_batch_opt = cmd_tr->add_option("--batch-size", tr_batch, "Roots per step");
  std::int64_t tr_ckpt_every = 0;
  auto* tr_ckpt_opt =
      cmd_tr->add_option("--checkpoint-every", tr_ckpt_every, "Steps between checkpoints");

  PruneArgs pr;
  auto* cmd_pr = app.add_subcommand("prune", "Prune an event file offline");
  cmd_pr->add_option("--events", pr.events_path, "Event file (CSV or JSONL)")->required();
  cmd_pr->add_option("--checkpoint", pr.checkpoint_path, "Trained checkpoint")->required();
  cmd_pr->add_option("--out-dir", pr.out_dir, "Output directory")->required();
  double pr_ratio = 0.0;
  auto* pr_ratio_opt = cmd_pr->add_option("--ratio", pr_ratio, "Pruning ratio p in [0,1]");
  double pr_theta = 0.0;
  auto* pr_theta_opt =
      cmd_pr->add_option("--threshold", pr_theta, "Keep events with score > threshold");
  pr_ratio_opt->excludes(pr_theta_opt);
  cmd_pr->add_option("--dt-policy", pr.dt_policy, "zero | ref-max (default ref-max)")
      ->check(CLI::IsMember({"zero", "ref-max"}));

  StreamArgs st;
  auto* cmd_st = app.add_subcommand("stream", "Filter JSONL events from stdin");
  cmd_st->add_option("--checkpoint", st.checkpoint_path, "Trained checkpoint")->required();
  cmd_st->add_option("--threshold", st.threshold, "Keep events with score > threshold")
      ->required();
  cmd_st->add_option("--dt-policy", st.dt_policy, "zero | ref-max (default zero)")
      ->check(CLI::IsMember({"zero", "ref-max"}));
  cmd_st->add_option("--ref-time", st.ref_time, "Reference time for ref-max");
  cmd_st->add_option("--workers", st.workers, "Scoring threads");
  cmd_st->add_option("--dropped", st.dropped_path, "Dropped-id side file");
  cmd_st->add_option("--manifest", st.manifest_path, "Manifest path ('-' = stderr)");

  EvalArgs ev;
  auto* cmd_ev = app.add_subcommand("eval", "Score a decision log against a noise mask");
  cmd_ev->add_option("--events", ev.events_path, "Original event file")->required();
  cmd_ev->add_option("--mask", ev.mask_path, "Noise mask JSON")->required();
  cmd_ev->add_option("--log", ev.log_path, "Decision log CSV")->required();
  cmd_ev->add_option("--out-dir", ev.out_dir, "Output directory")->required();
  cmd_ev->add_option("--checkpoint", ev.checkpoint_path,
                     "Checkpoint for the proxy probe (needs labels)");
  cmd_ev->add_option("--proxy-iters", ev.proxy_iters, "Probe training iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (cmd_gen->parsed()) {
      if (gen_seed_opt->count() > 0) gen.seed = gen_seed;
      return run_generate(gen);
    }
    if (cmd_tr->parsed()) {
      if (tr_seed_opt->count() > 0) tr.seed = tr_seed;
      if (tr_workers_opt->count() > 0) tr.workers = tr_workers;
      if (tr_epochs_opt->count() > 0) tr.epochs = tr_epochs;
      if (tr_max_steps_opt->count() > 0) tr.max_steps = tr_max_steps;
      if (tr_batch_opt->count() > 0) tr.batch_size = tr_batch;
      if (tr_ckpt_opt->count() > 0) tr.checkpoint_every = tr_ckpt_every;
      return run_train(tr);
    }
    if (cmd_pr->parsed()) {
      if (pr_ratio_opt->count() > 0) pr.ratio = pr_ratio;
      if (pr_theta_opt->count() > 0) pr.threshold = pr_theta;
      if (!pr.ratio && !pr.threshold) {
        std::cerr << "prune: exactly one of --ratio, --threshold is required\n";
        return 2;
      }
      return run_prune(pr);
    }
    if (cmd_st->parsed()) return run_stream(st);
    if (cmd_ev->parsed()) return run_eval(ev);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
