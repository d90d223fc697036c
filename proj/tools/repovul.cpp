// Command-line driver for the evaluation pipeline.
#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>

#include "repovul/error.hpp"
#include "repovul/pipeline.hpp"
#include "repovul/serialize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitAdapter = 3;

struct Overrides {
  std::string config;
  std::string patches, snapshots, output;
  std::optional<std::uint64_t> seed;
  std::string split, scorer;
  std::vector<std::size_t> ks;
  std::optional<std::size_t> prediction_k;
  std::vector<std::string> detectors;
  std::vector<std::string> strategies;
  std::string adapter_cmd;
  std::optional<int> trials, threshold;
  std::optional<std::size_t> budget;
  bool dedup = false, group_by_patch = false, micro = false;
};

void add_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config, "JSON run configuration");
  cmd.add_option("--patches", o.patches, "Directory of <id>.diff and <id>.json patch records");
  cmd.add_option("--snapshots", o.snapshots, "Directory of pre-patch repository snapshots");
  cmd.add_option("--out", o.output, "Output directory for stage artifacts");
  cmd.add_option("--seed", o.seed, "Seed for the random split and random scorer");
  cmd.add_option("--split", o.split, "Split strategy")->check(CLI::IsMember({"random", "time"}));
  cmd.add_option("--scorer", o.scorer, "Retrieval scorer")
      ->check(CLI::IsMember({"random", "jaccard", "edit", "bm25", "bm25plus", "cosine"}));
  cmd.add_option("--k", o.ks, "Cut-offs for Pre@K/Rec@K (comma separated)")->delimiter(',');
  cmd.add_option("--prediction-k", o.prediction_k, "Retrieved dependencies used by the Prediction strategy");
  cmd.add_option("--detector", o.detectors, "Detector: rules or external (repeatable)")
      ->check(CLI::IsMember({"rules", "external"}));
  cmd.add_option("--threshold", o.threshold, "Severity threshold of the rule detector")->check(CLI::Range(1, 5));
  cmd.add_option("--strategy", o.strategies, "Strategy: function_only, upper, prediction (repeatable)")
      ->delimiter(',');
  cmd.add_option("--adapter-cmd", o.adapter_cmd, "Command that starts an external adapter process");
  cmd.add_option("--trials", o.trials, "Trials averaged by the random scorer");
  cmd.add_option("--budget", o.budget, "Context budget in tokens");
  cmd.add_flag("--dedup", o.dedup, "Drop duplicate function bodies across patches");
  cmd.add_flag("--group-by-patch", o.group_by_patch, "Keep all samples of a patch in one partition");
  cmd.add_flag("--micro", o.micro, "Report micro-averaged retrieval metrics");
}

repovul::RunConfig build_config(const Overrides& o) {
  using repovul::RunConfig;
  RunConfig c;
  if (!o.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(repovul::read_text(o.config));
    } catch (const nlohmann::json::exception& e) {
      throw repovul::Error(repovul::ErrorCode::InvalidConfig, o.config + ": " + e.what());
    }
    c = RunConfig::from_json(j);
    // Relative paths in a config file are relative to the file.
    const auto base = std::filesystem::path(o.config).parent_path();
    const std::pair<const char*, std::filesystem::path*> paths[] = {
        {"patches", &c.patches}, {"snapshots", &c.snapshots}, {"output", &c.output}};
    for (const auto& [key, path] : paths) {
      if (j.contains(key) && path->is_relative()) *path = base / *path;
    }
  }
  try {
    if (!o.patches.empty()) c.patches = o.patches;
    if (!o.snapshots.empty()) c.snapshots = o.snapshots;
    if (!o.output.empty()) c.output = o.output;
    if (o.seed) c.seed = *o.seed;
    if (!o.split.empty()) c.split = repovul::split_strategy_from_string(o.split);
    if (!o.scorer.empty()) c.scorer = repovul::scorer_id_from_string(o.scorer);
    if (!o.ks.empty()) c.ks = o.ks;
    if (o.prediction_k) c.prediction_k = *o.prediction_k;
    if (!o.adapter_cmd.empty()) c.adapter_cmd = o.adapter_cmd;
    if (!o.detectors.empty()) {
      c.detectors.clear();
      for (const auto& d : o.detectors) {
        repovul::DetectorConfig dc;
        if (d == "external") {
          dc.id = "adapter";
          dc.kind = "external";
        }
        c.detectors.push_back(dc);
      }
    }
    if (o.threshold) {
      for (auto& d : c.detectors) {
        if (d.kind == "builtin_rules") d.threshold = *o.threshold;
      }
    }
    if (!o.strategies.empty()) {
      c.strategies.clear();
      for (const auto& s : o.strategies) c.strategies.push_back(repovul::strategy_from_string(s));
    }
    if (o.trials) c.trials = *o.trials;
    if (o.budget) c.budget = *o.budget;
    if (o.dedup) c.dedup = true;
    if (o.group_by_patch) c.group_by_patch = true;
    if (o.micro) c.micro_average = true;
  } catch (const repovul::Error& e) {
    throw repovul::Error(repovul::ErrorCode::InvalidConfig, e.message());
  }
  c.validate();
  return c;
}

using StageFn = std::function<repovul::StageStatus(const repovul::RunConfig&, std::ostream&)>;

int run_stages(const std::vector<std::pair<std::string, StageFn>>& stages, const Overrides& o) {
  std::string current = "config";
  try {
    const repovul::RunConfig config = build_config(o);
    bool adapter_failure = false;
    for (const auto& [name, fn] : stages) {
      current = name;
      adapter_failure |= fn(config, std::cout).adapter_failure;
    }
    if (adapter_failure) {
      std::cerr << "repovul: adapter failures recorded in outcomes.jsonl\n";
      return kExitAdapter;
    }
    return kExitOk;
  } catch (const repovul::Error& e) {
    std::cerr << "repovul " << current << ": " << e.what() << "\n";
    return e.is_adapter_failure() ? kExitAdapter : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "repovul " << current << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repository-level vulnerability detection evaluation harness"};
  app.require_subcommand(1);
  Overrides o;

  const std::vector<std::pair<std::string, StageFn>> all = {
      {"ingest", repovul::run_ingest},     {"extract", repovul::run_extract},
      {"retrieve", repovul::run_retrieve}, {"detect", repovul::run_detect},
      {"evaluate", repovul::run_evaluate},
  };
  const std::vector<std::pair<std::string, std::string>> help = {
      {"ingest", "Label functions touched by each patch and write samples.jsonl"},
      {"extract", "Extract callee/caller dependencies into deps.jsonl"},
      {"retrieve", "Rank dependencies per sample into retrieval.jsonl"},
      {"detect", "Run detectors under each strategy into outcomes.jsonl"},
      {"evaluate", "Compute metrics and write the report artifacts"},
  };
  std::vector<std::pair<CLI::App*, std::vector<std::pair<std::string, StageFn>>>> commands;
  for (std::size_t i = 0; i < all.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(help[i].first, help[i].second);
    add_options(*cmd, o);
    commands.push_back({cmd, {all[i]}});
  }
  CLI::App* report = app.add_subcommand("report", "Re-render report.md and CSVs from report.json");
  add_options(*report, o);
  commands.push_back({report, {{"report", repovul::run_report}}});
  CLI::App* run = app.add_subcommand("run", "Run every stage from ingest to evaluate");
  add_options(*run, o);
  commands.push_back({run, all});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }
  for (const auto& [cmd, stages] : commands) {
    if (cmd->parsed()) return run_stages(stages, o);
  }
  return kExitInput;
}
