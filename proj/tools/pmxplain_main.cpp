// pmxplain CLI: ingest-check | synth | train | evaluate | explain-offline |
// explain-online. Every run is reproducible from (config, input files);
// flags override config-file keys. Exit codes: 0 success, 1 validation
// error, 2 runtime error.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "pmxplain/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_override_flag(CLI::App* cmd, CliOptions& opts, const std::string& flag,
                       const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      flag,
      [&opts, key](const std::string& value) {
        opts.overrides.emplace_back(key, value);
      },
      help);
}

pmxplain::RunConfig resolve_config(const CliOptions& opts) {
  pmxplain::RunConfig cfg;
  if (!opts.config_file.empty()) pmxplain::load_config_file(cfg, opts.config_file);
  for (const auto& [key, value] : opts.overrides)
    pmxplain::config_set(cfg, key, value);
  return cfg;
}

void add_common_flags(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--config", opts.config_file, "key=value config file");
  add_override_flag(cmd, opts, "--output-dir", "output_dir", "artifact directory");
  add_override_flag(cmd, opts, "--threads", "threads", "worker threads");
  cmd->add_option_function<std::vector<std::string>>(
      "--set",
      [&opts](const std::vector<std::string>& pairs) {
        for (const auto& p : pairs) {
          size_t eq = p.find('=');
          if (eq == std::string::npos)
            throw CLI::ValidationError("--set", "expected key=value, got '" + p + "'");
          opts.overrides.emplace_back(p.substr(0, eq), p.substr(eq + 1));
        }
      },
      "set any config key, e.g. --set delta=1.5");
}

void add_input_flags(CLI::App* cmd, CliOptions& opts) {
  add_override_flag(cmd, opts, "--input", "input", "event log CSV");
  add_override_flag(cmd, opts, "--case-column", "case_column", "case id column");
  add_override_flag(cmd, opts, "--activity-column", "activity_column",
                    "activity column");
  add_override_flag(cmd, opts, "--timestamp-column", "timestamp_column",
                    "timestamp column");
  add_override_flag(cmd, opts, "--timestamp-format", "timestamp_format",
                    "strptime format, or 'epoch'");
  add_override_flag(cmd, opts, "--delimiter", "delimiter", "CSV delimiter");
}

void add_model_flags(CLI::App* cmd, CliOptions& opts) {
  add_override_flag(cmd, opts, "--model", "model_path", "model file");
  add_override_flag(cmd, opts, "--dataset", "dataset_path", "dataset cache file");
}

void add_explain_flags(CLI::App* cmd, CliOptions& opts) {
  add_override_flag(cmd, opts, "--background", "background_size",
                    "background sample size B");
  add_override_flag(cmd, opts, "--samples", "shap_samples",
                    "permutations for the sampling estimator");
  add_override_flag(cmd, opts, "--exact-cap", "exact_cap",
                    "max active features for exact Shapley");
  add_override_flag(cmd, opts, "--shap-seed", "shap_seed", "attribution seed");
  add_override_flag(cmd, opts, "--delta", "delta",
                    "significance interval half-width multiplier");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KPI prediction and Shapley-value explanations for event-log prefixes"};
  app.require_subcommand(1);
  CliOptions opts;

  CLI::App* ingest = app.add_subcommand("ingest-check",
                                        "parse a log and report its shape");
  add_common_flags(ingest, opts);
  add_input_flags(ingest, opts);

  CLI::App* synth = app.add_subcommand("synth",
                                       "generate a synthetic log with planted rules");
  add_common_flags(synth, opts);
  add_override_flag(synth, opts, "--traces", "synth_traces", "number of traces");
  add_override_flag(synth, opts, "--synth-seed", "synth_seed", "generator seed");
  add_override_flag(synth, opts, "--noise", "synth_noise",
                    "uniform per-gap jitter, seconds");
  add_override_flag(synth, opts, "--rules", "synth_rules",
                    "ATTR=VALUE:delay|cost|force:arg:fraction[;...]");

  CLI::App* train = app.add_subcommand("train",
                                       "encode, fit a predictor, save model + cache");
  add_common_flags(train, opts);
  add_input_flags(train, opts);
  add_model_flags(train, opts);
  add_override_flag(train, opts, "--kpi", "kpi",
                    "remaining_time | activity_occurrence | end_of_case_numeric");
  add_override_flag(train, opts, "--kpi-target", "kpi_target",
                    "target activity or attribute");
  add_override_flag(train, opts, "--predictor", "predictor",
                    "mean | linear | recurrent");
  add_override_flag(train, opts, "--seed", "seed", "fit seed");
  add_override_flag(train, opts, "--max-prefix-len", "max_prefix_len",
                    "prefix window M (0 = 95th percentile)");

  CLI::App* evaluate = app.add_subcommand("evaluate",
                                          "re-evaluate a saved model on the test split");
  add_common_flags(evaluate, opts);
  add_model_flags(evaluate, opts);

  CLI::App* offline = app.add_subcommand("explain-offline",
                                         "explain the test split into a heatmap");
  add_common_flags(offline, opts);
  add_model_flags(offline, opts);
  add_explain_flags(offline, opts);
  add_override_flag(offline, opts, "--window", "window", "offset window W");
  add_override_flag(offline, opts, "--top-rows", "top_rows", "heatmap row cap");

  CLI::App* online = app.add_subcommand("explain-online",
                                        "explain running cases into a table");
  add_common_flags(online, opts);
  add_input_flags(online, opts);
  add_model_flags(online, opts);
  add_explain_flags(online, opts);
  add_override_flag(online, opts, "--cases", "cases_path", "running cases CSV");
  add_override_flag(online, opts, "--top-k", "top_k", "factors per direction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    pmxplain::RunConfig cfg = resolve_config(opts);
    if (ingest->parsed()) {
      pmxplain::IngestResult r = pmxplain::run_ingest_check(cfg);
      uint64_t events = 0;
      for (const auto& tr : r.log.traces) events += tr.length();
      const pmxplain::AttributeSchema* act =
          r.log.find_attribute(pmxplain::kActivityAttribute);
      std::cout << "traces=" << r.log.traces.size() << " events=" << events
                << " activities=" << (act ? act->domain.size() : 0)
                << " attributes=" << r.log.schema.size()
                << " bad_rows=" << r.rows_bad
                << " dropped_traces=" << r.traces_dropped << "\n";
    } else if (synth->parsed()) {
      pmxplain::run_synth(cfg);
      std::cout << "wrote " << cfg.output_dir << "/log.csv and rules.csv\n";
    } else if (train->parsed()) {
      pmxplain::TrainResult r = pmxplain::run_train(cfg);
      std::cout << r.report.to_text();
      if (r.baseline_mae)
        std::cout << "baseline_mae=" << pmxplain::format_g(*r.baseline_mae) << "\n";
      std::cout << "model=" << cfg.model_file() << "\n";
    } else if (evaluate->parsed()) {
      std::cout << pmxplain::run_evaluate(cfg).to_text();
    } else if (offline->parsed()) {
      pmxplain::OfflineExplainResult r = pmxplain::run_explain_offline(cfg);
      std::cout << "explained " << (r.exact_count + r.sampled_count)
                << " prefixes: " << r.exact_count << " exact, "
                << r.sampled_count << " sampled\n"
                << "heatmap=" << cfg.output_dir << "/heatmap.csv (+ .svg)\n";
    } else if (online->parsed()) {
      pmxplain::OnlineExplainResult r = pmxplain::run_explain_online(cfg);
      std::cout << "explained " << r.cases.size() << " running cases\n"
                << "table=" << cfg.output_dir << "/online.csv\n";
    }
  } catch (const pmxplain::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
