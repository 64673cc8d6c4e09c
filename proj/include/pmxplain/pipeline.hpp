// Pipeline orchestration behind the CLI: run configuration (plain-text
// key=value file, flag overrides), the train / evaluate / explain-offline /
// explain-online / synth / ingest-check commands, per-prefix explanation
// with a deterministic worker pool, and the output-directory manifest.
//
// Reproducibility contract: every artifact a command writes is a pure
// function of (config, input files). Parallel and serial runs produce
// byte-identical outputs; per-item attribution seeds derive from the item's
// position, never from the thread schedule.
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pmxplain/common.hpp"
#include "pmxplain/csv.hpp"
#include "pmxplain/encoding.hpp"
#include "pmxplain/event_log.hpp"
#include "pmxplain/explainer.hpp"
#include "pmxplain/metrics.hpp"
#include "pmxplain/predictor.hpp"
#include "pmxplain/reporting.hpp"
#include "pmxplain/shapley.hpp"
#include "pmxplain/synth.hpp"

namespace pmxplain {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  // io
  std::string input;
  std::string output_dir = "out";
  std::string model_path;    // defaults to <output_dir>/model.bin
  std::string dataset_path;  // defaults to <output_dir>/dataset.bin
  std::string cases_path;    // explain-online running cases
  // column mapping
  std::string case_column = "case_id";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  std::string timestamp_format = "%Y-%m-%dT%H:%M:%S";
  std::string delimiter = ",";
  // kpi
  std::string kpi = "remaining_time";
  std::string kpi_target;
  // encoding
  int max_prefix_len = 0;  // 0 = 95th percentile of training trace lengths
  int min_prefix_len = 1;
  bool scale_numerics = true;
  bool add_time_from_start = true;
  bool add_time_since_previous = false;
  int cardinality_cap = 1000;
  // split
  double test_fraction = 1.0 / 3.0;
  double validation_fraction = 0.2;
  uint64_t split_seed = 1;
  // predictor
  std::string predictor = "linear";
  uint64_t seed = 17;
  int hidden = 16;
  double learning_rate = 0.02;
  int epochs = 200;
  int patience = 10;
  int batch_size = 32;
  double ridge = 1e-9;
  // shapley
  int background_size = 100;
  int shap_samples = 2000;
  int exact_cap = 20;
  uint64_t shap_seed = 29;
  // explanation & reports
  double delta = 1.0;
  int window = 5;
  int top_rows = 30;
  int top_k = 2;
  // execution
  int threads = 1;
  // synth
  int synth_traces = 1000;
  uint64_t synth_seed = 7;
  double synth_noise = 0.0;
  double synth_base_gap = 600.0;
  double synth_rework = 0.2;
  bool synth_amount = true;
  std::string synth_rules;  // "ATTR=VALUE:delay:3600:0.3;ATTR=V:force:ACT:0.2"

  std::string model_file() const {
    return model_path.empty() ? output_dir + "/model.bin" : model_path;
  }
  std::string dataset_file() const {
    return dataset_path.empty() ? output_dir + "/dataset.bin" : dataset_path;
  }
};

namespace detail {

inline bool parse_bool_key(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ValidationError("config key '" + key + "': expected true/false, got '" +
                        value + "'");
}

inline double parse_double_key(const std::string& key, const std::string& value) {
  double d;
  if (!parse_number(value, &d))
    throw ValidationError("config key '" + key + "': expected a number, got '" +
                          value + "'");
  return d;
}

inline int parse_int_key(const std::string& key, const std::string& value) {
  double d = parse_double_key(key, value);
  return int(d);
}

inline uint64_t parse_u64_key(const std::string& key, const std::string& value) {
  double d = parse_double_key(key, value);
  if (d < 0) throw ValidationError("config key '" + key + "': must be >= 0");
  return uint64_t(d);
}

}  // namespace detail

inline void config_set(RunConfig& cfg, const std::string& key,
                       const std::string& value) {
  using detail::parse_bool_key;
  using detail::parse_double_key;
  using detail::parse_int_key;
  using detail::parse_u64_key;
  if (key == "input") cfg.input = value;
  else if (key == "output_dir") cfg.output_dir = value;
  else if (key == "model_path") cfg.model_path = value;
  else if (key == "dataset_path") cfg.dataset_path = value;
  else if (key == "cases_path") cfg.cases_path = value;
  else if (key == "case_column") cfg.case_column = value;
  else if (key == "activity_column") cfg.activity_column = value;
  else if (key == "timestamp_column") cfg.timestamp_column = value;
  else if (key == "timestamp_format") cfg.timestamp_format = value;
  else if (key == "delimiter") cfg.delimiter = value;
  else if (key == "kpi") cfg.kpi = value;
  else if (key == "kpi_target") cfg.kpi_target = value;
  else if (key == "max_prefix_len") cfg.max_prefix_len = parse_int_key(key, value);
  else if (key == "min_prefix_len") cfg.min_prefix_len = parse_int_key(key, value);
  else if (key == "scale_numerics") cfg.scale_numerics = parse_bool_key(key, value);
  else if (key == "add_time_from_start") cfg.add_time_from_start = parse_bool_key(key, value);
  else if (key == "add_time_since_previous") cfg.add_time_since_previous = parse_bool_key(key, value);
  else if (key == "cardinality_cap") cfg.cardinality_cap = parse_int_key(key, value);
  else if (key == "test_fraction") cfg.test_fraction = parse_double_key(key, value);
  else if (key == "validation_fraction") cfg.validation_fraction = parse_double_key(key, value);
  else if (key == "split_seed") cfg.split_seed = parse_u64_key(key, value);
  else if (key == "predictor") cfg.predictor = value;
  else if (key == "seed") cfg.seed = parse_u64_key(key, value);
  else if (key == "hidden") cfg.hidden = parse_int_key(key, value);
  else if (key == "learning_rate") cfg.learning_rate = parse_double_key(key, value);
  else if (key == "epochs") cfg.epochs = parse_int_key(key, value);
  else if (key == "patience") cfg.patience = parse_int_key(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_int_key(key, value);
  else if (key == "ridge") cfg.ridge = parse_double_key(key, value);
  else if (key == "background_size") cfg.background_size = parse_int_key(key, value);
  else if (key == "shap_samples") cfg.shap_samples = parse_int_key(key, value);
  else if (key == "exact_cap") cfg.exact_cap = parse_int_key(key, value);
  else if (key == "shap_seed") cfg.shap_seed = parse_u64_key(key, value);
  else if (key == "delta") cfg.delta = parse_double_key(key, value);
  else if (key == "window") cfg.window = parse_int_key(key, value);
  else if (key == "top_rows") cfg.top_rows = parse_int_key(key, value);
  else if (key == "top_k") cfg.top_k = parse_int_key(key, value);
  else if (key == "threads") cfg.threads = parse_int_key(key, value);
  else if (key == "synth_traces") cfg.synth_traces = parse_int_key(key, value);
  else if (key == "synth_seed") cfg.synth_seed = parse_u64_key(key, value);
  else if (key == "synth_noise") cfg.synth_noise = parse_double_key(key, value);
  else if (key == "synth_base_gap") cfg.synth_base_gap = parse_double_key(key, value);
  else if (key == "synth_rework") cfg.synth_rework = parse_double_key(key, value);
  else if (key == "synth_amount") cfg.synth_amount = parse_bool_key(key, value);
  else if (key == "synth_rules") cfg.synth_rules = value;
  else throw ValidationError("unknown config key '" + key + "'");
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected key=value");
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    config_set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline std::string config_to_text(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  kv["input"] = c.input;
  kv["output_dir"] = c.output_dir;
  kv["model_path"] = c.model_path;
  kv["dataset_path"] = c.dataset_path;
  kv["cases_path"] = c.cases_path;
  kv["case_column"] = c.case_column;
  kv["activity_column"] = c.activity_column;
  kv["timestamp_column"] = c.timestamp_column;
  kv["timestamp_format"] = c.timestamp_format;
  kv["delimiter"] = c.delimiter;
  kv["kpi"] = c.kpi;
  kv["kpi_target"] = c.kpi_target;
  kv["max_prefix_len"] = std::to_string(c.max_prefix_len);
  kv["min_prefix_len"] = std::to_string(c.min_prefix_len);
  kv["scale_numerics"] = c.scale_numerics ? "true" : "false";
  kv["add_time_from_start"] = c.add_time_from_start ? "true" : "false";
  kv["add_time_since_previous"] = c.add_time_since_previous ? "true" : "false";
  kv["cardinality_cap"] = std::to_string(c.cardinality_cap);
  kv["test_fraction"] = format_g(c.test_fraction, 17);
  kv["validation_fraction"] = format_g(c.validation_fraction, 17);
  kv["split_seed"] = std::to_string(c.split_seed);
  kv["predictor"] = c.predictor;
  kv["seed"] = std::to_string(c.seed);
  kv["hidden"] = std::to_string(c.hidden);
  kv["learning_rate"] = format_g(c.learning_rate, 17);
  kv["epochs"] = std::to_string(c.epochs);
  kv["patience"] = std::to_string(c.patience);
  kv["batch_size"] = std::to_string(c.batch_size);
  kv["ridge"] = format_g(c.ridge, 17);
  kv["background_size"] = std::to_string(c.background_size);
  kv["shap_samples"] = std::to_string(c.shap_samples);
  kv["exact_cap"] = std::to_string(c.exact_cap);
  kv["shap_seed"] = std::to_string(c.shap_seed);
  kv["delta"] = format_g(c.delta, 17);
  kv["window"] = std::to_string(c.window);
  kv["top_rows"] = std::to_string(c.top_rows);
  kv["top_k"] = std::to_string(c.top_k);
  kv["threads"] = std::to_string(c.threads);
  kv["synth_traces"] = std::to_string(c.synth_traces);
  kv["synth_seed"] = std::to_string(c.synth_seed);
  kv["synth_noise"] = format_g(c.synth_noise, 17);
  kv["synth_base_gap"] = format_g(c.synth_base_gap, 17);
  kv["synth_rework"] = format_g(c.synth_rework, 17);
  kv["synth_amount"] = c.synth_amount ? "true" : "false";
  kv["synth_rules"] = c.synth_rules;
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

inline ColumnMapping mapping_of(const RunConfig& cfg) {
  if (cfg.delimiter.size() != 1)
    throw ValidationError("config key 'delimiter': must be a single character");
  ColumnMapping m;
  m.case_column = cfg.case_column;
  m.activity_column = cfg.activity_column;
  m.timestamp_column = cfg.timestamp_column;
  m.timestamp_format = cfg.timestamp_format;
  m.delimiter = cfg.delimiter[0];
  return m;
}

inline EncodingOptions encoding_options_of(const RunConfig& cfg) {
  EncodingOptions o;
  o.scale_numerics = cfg.scale_numerics;
  o.add_time_from_start = cfg.add_time_from_start;
  o.add_time_since_previous = cfg.add_time_since_previous;
  o.cardinality_cap = cfg.cardinality_cap;
  return o;
}

inline PredictorConfig predictor_config_of(const RunConfig& cfg) {
  PredictorConfig p;
  p.kind = cfg.predictor;
  p.linear.ridge = cfg.ridge;
  p.recurrent.hidden = cfg.hidden;
  p.recurrent.learning_rate = cfg.learning_rate;
  p.recurrent.epochs = cfg.epochs;
  p.recurrent.patience = cfg.patience;
  p.recurrent.batch_size = cfg.batch_size;
  return p;
}

// Parses "ATTR=VALUE:effect:arg:fraction" rules, ';'-separated; effect is
// delay, cost (arg = magnitude) or force (arg = target activity).
inline std::vector<SynthRule> parse_synth_rules(const std::string& text) {
  std::vector<SynthRule> rules;
  if (text.empty()) return rules;
  std::istringstream is(text);
  std::string part;
  while (std::getline(is, part, ';')) {
    if (part.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ps(part);
    std::string f;
    while (std::getline(ps, f, ':')) fields.push_back(f);
    if (fields.size() != 4)
      throw ValidationError("config key 'synth_rules': rule '" + part +
                            "' must be ATTR=VALUE:effect:arg:fraction");
    size_t eq = fields[0].find('=');
    if (eq == std::string::npos)
      throw ValidationError("config key 'synth_rules': condition '" + fields[0] +
                            "' must be ATTR=VALUE");
    SynthRule r;
    r.attribute = fields[0].substr(0, eq);
    r.value = fields[0].substr(eq + 1);
    if (fields[1] == "delay") {
      r.effect = SynthEffect::add_delay;
      r.magnitude = detail::parse_double_key("synth_rules", fields[2]);
    } else if (fields[1] == "cost") {
      r.effect = SynthEffect::add_cost;
      r.magnitude = detail::parse_double_key("synth_rules", fields[2]);
    } else if (fields[1] == "force") {
      r.effect = SynthEffect::force_activity;
      r.target_activity = fields[2];
    } else {
      throw ValidationError("config key 'synth_rules': unknown effect '" +
                            fields[1] + "' (expected delay, cost or force)");
    }
    r.affected_fraction = detail::parse_double_key("synth_rules", fields[3]);
    rules.push_back(std::move(r));
  }
  return rules;
}

inline KpiLabeler kpi_of(const RunConfig& cfg, const EventLog* log = nullptr) {
  KpiLabeler k;
  if (cfg.kpi == "remaining_time") {
    k.kind = KpiKind::remaining_time;
  } else if (cfg.kpi == "activity_occurrence") {
    k.kind = KpiKind::activity_occurrence;
    if (cfg.kpi_target.empty())
      throw ValidationError("config key 'kpi_target': required for activity_occurrence");
    k.target = cfg.kpi_target;
    if (log) {
      const AttributeSchema* act = log->find_attribute(kActivityAttribute);
      if (!act || std::find(act->domain.begin(), act->domain.end(), k.target) ==
                      act->domain.end())
        throw ValidationError("config key 'kpi_target': activity '" + k.target +
                              "' never occurs in the input log");
    }
  } else if (cfg.kpi == "end_of_case_numeric") {
    k.kind = KpiKind::end_of_case_numeric;
    if (cfg.kpi_target.empty())
      throw ValidationError("config key 'kpi_target': required for end_of_case_numeric");
    k.target = cfg.kpi_target;
    if (log) {
      const AttributeSchema* attr = log->find_attribute(k.target);
      if (!attr)
        throw ValidationError("config key 'kpi_target': attribute '" + k.target +
                              "' not present in the input log");
      if (attr->kind == AttributeKind::categorical)
        throw ValidationError("config key 'kpi_target': attribute '" + k.target +
                              "' is categorical, not numeric");
    }
  } else {
    throw ValidationError("config key 'kpi': unknown KPI '" + cfg.kpi +
                          "' (expected remaining_time, activity_occurrence or "
                          "end_of_case_numeric)");
  }
  return k;
}

// ---------------------------------------------------------------------------
// Output directory helpers
// ---------------------------------------------------------------------------

inline void ensure_output_dir(const RunConfig& cfg) {
  if (cfg.output_dir.empty())
    throw ValidationError("config key 'output_dir': must not be empty");
  std::filesystem::create_directories(cfg.output_dir);
}

inline std::string artifact_path(const RunConfig& cfg, const std::string& name) {
  return cfg.output_dir + "/" + name;
}

// Hashes every regular file in the output directory (except the manifest
// itself) into manifest.txt, sorted by name.
inline void write_manifest(const RunConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(cfg.output_dir))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.txt")
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& name : names) {
    std::string bytes = read_file(cfg.output_dir + "/" + name);
    out += hex64(fnv1a64(bytes.data(), bytes.size())) + "  " + name + "\n";
  }
  write_file(artifact_path(cfg, "manifest.txt"), out);
}

// ---------------------------------------------------------------------------
// Deterministic worker pool
// ---------------------------------------------------------------------------

template <typename Fn>
inline void parallel_for(size_t n, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(size_t(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Per-prefix explanation
// ---------------------------------------------------------------------------

struct PrefixExplanation {
  double prediction = 0.0;
  bool exact = false;
  ShapleyAttribution attribution;
  std::vector<ExplanationRecord> records;
};

inline PrefixExplanation explain_prefix(const Predictor& model,
                                        std::span<const EncodedPrefix> background,
                                        const EncodedPrefix& x,
                                        const FeatureSchema& schema,
                                        const RunConfig& cfg,
                                        uint64_t item_seed) {
  PrefixExplanation out;
  ValueFunction vf(model, background, x);
  if (int(vf.active().size()) <= cfg.exact_cap) {
    out.attribution = exact_shapley(vf, cfg.exact_cap);
    out.exact = true;
  } else {
    out.attribution = sampled_shapley(vf, cfg.shap_samples, item_seed);
  }
  out.prediction = vf.prediction();
  if (!out.attribution.active.empty()) {
    auto significant = filter_significant(out.attribution, cfg.delta);
    out.records = to_explanations(out.attribution, significant, schema, x);
  }
  return out;
}

// Uniformly samples the background set from the train split.
inline std::vector<EncodedPrefix> sample_background(const Dataset& ds,
                                                    int background_size,
                                                    uint64_t seed) {
  std::vector<const DataItem*> train = ds.split_items(Split::train);
  if (train.empty())
    throw RuntimeError("cannot build a background set: train split is empty");
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(Rng::mix(seed, 0xBAC6));
  rng.shuffle(order);
  size_t take = std::min(order.size(), size_t(std::max(1, background_size)));
  std::vector<EncodedPrefix> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) out.push_back(train[order[i]]->x);
  return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct TrainResult {
  EvaluationReport report;
  std::optional<double> baseline_mae;  // regression only
  uint64_t train_items = 0, validation_items = 0, test_items = 0;
  uint64_t skipped_traces = 0;
  int max_len = 0;
};

inline void require_input_file(const char* key, const std::string& path) {
  if (path.empty())
    throw ValidationError(std::string("config key '") + key + "': required");
  if (!std::filesystem::exists(path))
    throw ValidationError(std::string("config key '") + key + "': file '" +
                          path + "' does not exist");
}

inline TrainResult run_train(const RunConfig& cfg) {
  require_input_file("input", cfg.input);
  if (cfg.min_prefix_len < 1)
    throw ValidationError("config key 'min_prefix_len': must be >= 1");
  ensure_output_dir(cfg);

  IngestResult ingest = ingest_csv(cfg.input, mapping_of(cfg));
  write_file(artifact_path(cfg, "ingest_report.txt"), ingest.report());
  if (ingest.log.traces.empty())
    throw ValidationError("config key 'input': no usable traces in " + cfg.input);
  KpiLabeler kpi = kpi_of(cfg, &ingest.log);

  int max_len = cfg.max_prefix_len;
  if (max_len <= 0) {
    SplitRatios ratios{cfg.test_fraction, cfg.validation_fraction, cfg.split_seed};
    std::vector<size_t> train_lengths;
    for (const auto& tr : ingest.log.traces)
      if (split_of(tr.case_id, ratios) != Split::test)
        train_lengths.push_back(tr.length());
    max_len = percentile95_length(train_lengths);
  }

  FeatureSchema schema = build_schema(ingest.log, encoding_options_of(cfg));
  Dataset ds = build_dataset(
      ingest.log, kpi, schema,
      {cfg.test_fraction, cfg.validation_fraction, cfg.split_seed}, max_len,
      size_t(cfg.min_prefix_len));
  if (ds.items.empty())
    throw ValidationError("config key 'input': dataset is empty after labeling");

  auto train = ds.split_items(Split::train);
  auto validation = ds.split_items(Split::validation);
  auto test = ds.split_items(Split::test);
  if (train.empty())
    throw ValidationError("config key 'test_fraction': train split came out empty");

  TaskKind task = kpi.binary() ? TaskKind::binary : TaskKind::regression;
  auto model = make_predictor(predictor_config_of(cfg), task);
  model->fit(train, validation, cfg.seed);

  TrainResult result;
  result.train_items = train.size();
  result.validation_items = validation.size();
  result.test_items = test.size();
  result.skipped_traces = ds.skipped_traces;
  result.max_len = max_len;
  if (!test.empty()) {
    result.report = evaluate(*model, test);
    if (task == TaskKind::regression) {
      MeanPredictor baseline(task);
      baseline.fit(train, validation, cfg.seed);
      result.baseline_mae = *evaluate(baseline, test).mae;
    }
  }

  save_model(cfg.model_file(), *model, schema, kpi);
  save_dataset(ds, cfg.dataset_file());
  std::string metrics = result.report.to_text();
  if (result.baseline_mae)
    metrics += "baseline_mae=" + format_g(*result.baseline_mae) + "\n";
  metrics += "train_items=" + std::to_string(result.train_items) + "\n";
  metrics += "validation_items=" + std::to_string(result.validation_items) + "\n";
  metrics += "test_items=" + std::to_string(result.test_items) + "\n";
  metrics += "skipped_traces=" + std::to_string(result.skipped_traces) + "\n";
  metrics += "max_prefix_len=" + std::to_string(max_len) + "\n";
  write_file(artifact_path(cfg, "metrics.txt"), metrics);
  write_file(artifact_path(cfg, "config.txt"), config_to_text(cfg));
  write_manifest(cfg);
  return result;
}

inline EvaluationReport run_evaluate(const RunConfig& cfg) {
  ensure_output_dir(cfg);
  LoadedModel model = load_model(cfg.model_file());
  Dataset ds = load_dataset(cfg.dataset_file(),
                            model.predictor->schema_fingerprint());
  auto test = ds.split_items(Split::test);
  EvaluationReport report = evaluate(*model.predictor, test);
  write_file(artifact_path(cfg, "metrics.txt"), report.to_text());
  write_file(artifact_path(cfg, "config.txt"), config_to_text(cfg));
  write_manifest(cfg);
  return report;
}

struct OfflineExplainResult {
  HeatmapMatrix heatmap;
  uint64_t exact_count = 0;
  uint64_t sampled_count = 0;
};

inline OfflineExplainResult run_explain_offline(const RunConfig& cfg) {
  ensure_output_dir(cfg);
  LoadedModel model = load_model(cfg.model_file());
  Dataset ds = load_dataset(cfg.dataset_file(),
                            model.predictor->schema_fingerprint());
  auto test = ds.split_items(Split::test);

  OfflineExplainResult result;
  std::vector<std::vector<ExplanationRecord>> per_prefix(test.size());
  if (test.empty()) {
    std::cerr << "warning: test split is empty; writing an empty heatmap\n";
  } else {
    std::vector<EncodedPrefix> background =
        sample_background(ds, cfg.background_size, cfg.shap_seed);
    std::vector<uint8_t> used_exact(test.size(), 0);
    parallel_for(test.size(), cfg.threads, [&](size_t i) {
      PrefixExplanation px =
          explain_prefix(*model.predictor, background, test[i]->x, model.schema,
                         cfg, Rng::mix(cfg.shap_seed, uint64_t(i)));
      per_prefix[i] = std::move(px.records);
      used_exact[i] = px.exact ? 1 : 0;
    });
    for (uint8_t e : used_exact) e ? ++result.exact_count : ++result.sampled_count;
  }

  result.heatmap = aggregate_heatmap(per_prefix, cfg.window, model.schema,
                                     model.kpi.name(), cfg.top_rows);
  write_file(artifact_path(cfg, "heatmap.csv"), heatmap_to_csv(result.heatmap));
  write_file(artifact_path(cfg, "heatmap.svg"), heatmap_to_svg(result.heatmap));
  write_file(artifact_path(cfg, "config.txt"), config_to_text(cfg));
  write_manifest(cfg);
  return result;
}

struct OnlineExplainResult {
  std::vector<OnlineCase> cases;
  uint64_t unseen_values = 0;
};

inline OnlineExplainResult run_explain_online(const RunConfig& cfg) {
  require_input_file("cases_path", cfg.cases_path);
  ensure_output_dir(cfg);
  LoadedModel model = load_model(cfg.model_file());
  Dataset ds = load_dataset(cfg.dataset_file(),
                            model.predictor->schema_fingerprint());

  // Read running cases with column kinds pinned to the training schema.
  std::map<std::string, AttributeKind> kinds;
  for (const auto& f : model.schema.features) {
    if (f.derived) continue;
    if (f.kind == FeatureKind::onehot)
      kinds[f.attribute] = AttributeKind::categorical;
    else if (f.kind == FeatureKind::boolean)
      kinds[f.attribute] = AttributeKind::boolean;
    else
      kinds[f.attribute] = AttributeKind::numeric;
  }
  IngestResult ingest = ingest_csv(cfg.cases_path, mapping_of(cfg), &kinds);

  int max_len = model.max_len;
  std::vector<EncodedPrefix> encoded;
  std::vector<std::string> case_ids;
  EncodeStats stats;
  for (const auto& tr : ingest.log.traces) {
    size_t begin = tr.length() > size_t(max_len) ? tr.length() - size_t(max_len) : 0;
    encoded.push_back(encode_prefix(
        model.schema,
        std::span<const Event>(tr.events.data() + begin, tr.length() - begin),
        max_len, &stats, tr.events.front().timestamp));
    case_ids.push_back(tr.case_id);
  }
  if (stats.unseen_values > 0)
    std::cerr << "warning: " << stats.unseen_values
              << " attribute values were not seen at training time and encode "
                 "as empty one-hot groups\n";

  OnlineExplainResult result;
  result.unseen_values = stats.unseen_values;
  result.cases.resize(encoded.size());
  if (!encoded.empty()) {
    std::vector<EncodedPrefix> background =
        sample_background(ds, cfg.background_size, cfg.shap_seed);
    parallel_for(encoded.size(), cfg.threads, [&](size_t i) {
      PrefixExplanation px =
          explain_prefix(*model.predictor, background, encoded[i], model.schema,
                         cfg, Rng::mix(cfg.shap_seed, uint64_t(i)));
      result.cases[i] = {case_ids[i], px.prediction, std::move(px.records)};
    });
  }

  write_file(artifact_path(cfg, "online.csv"),
             render_online_table(result.cases, cfg.top_k, model.kpi.kind,
                                 model.schema));
  std::vector<std::pair<std::string, std::vector<ExplanationRecord>>> per_case;
  for (const auto& c : result.cases) per_case.emplace_back(c.case_id, c.records);
  write_file(artifact_path(cfg, "records.csv"), records_to_csv(per_case));
  write_file(artifact_path(cfg, "config.txt"), config_to_text(cfg));
  write_manifest(cfg);
  return result;
}

inline void run_synth(const RunConfig& cfg) {
  ensure_output_dir(cfg);
  SynthSpec spec;
  spec.n_traces = cfg.synth_traces;
  spec.seed = cfg.synth_seed;
  spec.noise_seconds = cfg.synth_noise;
  spec.base_gap_seconds = cfg.synth_base_gap;
  spec.rework_probability = cfg.synth_rework;
  spec.include_amount = cfg.synth_amount;
  spec.rules = parse_synth_rules(cfg.synth_rules);
  EventLog log = generate(spec);
  write_file(artifact_path(cfg, "log.csv"), log_to_csv(log));
  write_file(artifact_path(cfg, "rules.csv"), rules_to_csv(spec));
  write_file(artifact_path(cfg, "config.txt"), config_to_text(cfg));
  write_manifest(cfg);
}

inline IngestResult run_ingest_check(const RunConfig& cfg) {
  require_input_file("input", cfg.input);
  ensure_output_dir(cfg);
  IngestResult ingest = ingest_csv(cfg.input, mapping_of(cfg));
  write_file(artifact_path(cfg, "ingest_report.txt"), ingest.report());
  write_manifest(cfg);
  return ingest;
}

}  // namespace pmxplain
