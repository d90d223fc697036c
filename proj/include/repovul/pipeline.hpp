#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repovul/detection.hpp"
#include "repovul/evaluation.hpp"
#include "repovul/retrieval.hpp"

namespace repovul {

struct DetectorConfig {
  std::string id = "rules";
  std::string kind = "builtin_rules";  // builtin_rules | external
  int threshold = 1;
  std::string rules;    // rule file; empty selects the shipped rules
  std::string command;  // adapter command for external detectors; empty uses adapter_cmd
  std::size_t budget = 0;  // 0 inherits RunConfig::budget
};

enum class Stage { Ingest, Extract, Retrieve, Detect, Evaluate };

struct RunConfig {
  std::filesystem::path patches;
  std::filesystem::path snapshots;
  std::filesystem::path output = "out";
  SplitStrategy split = SplitStrategy::Random;
  std::uint64_t seed = 42;
  ScorerId scorer = ScorerId::Jaccard;
  Bm25Params bm25;
  int trials = 100;
  std::vector<std::size_t> ks = {1, 3, 5};
  std::size_t prediction_k = 3;
  std::vector<DetectorConfig> detectors = {DetectorConfig{}};
  std::vector<Strategy> strategies = {Strategy::FunctionOnly, Strategy::Upper, Strategy::Prediction};
  std::size_t budget = kDefaultContextBudget;
  bool dedup = false;
  bool group_by_patch = false;
  bool micro_average = false;
  std::vector<std::string> cwes = {"CWE-190", "CWE-400", "CWE-415", "CWE-416", "CWE-787"};
  std::size_t cwe_cap = 200;
  std::string adapter_cmd;

  // Rejects unknown keys with Error{InvalidConfig}.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  // Hash of every setting that influences the artifacts of `stage`
  // (including its upstream stages).
  std::string stage_hash(Stage stage) const;
};

struct StageStatus {
  bool adapter_failure = false;
};

// Each stage reads its inputs from / writes its outputs to config.output.
StageStatus run_ingest(const RunConfig& config, std::ostream& log);
StageStatus run_extract(const RunConfig& config, std::ostream& log);
StageStatus run_retrieve(const RunConfig& config, std::ostream& log);
StageStatus run_detect(const RunConfig& config, std::ostream& log);
StageStatus run_evaluate(const RunConfig& config, std::ostream& log);
// Re-renders report.md and the CSV tables from report.json.
StageStatus run_report(const RunConfig& config, std::ostream& log);

// Rendering of report.json into the human-readable artifacts.
std::string render_report_markdown(const nlohmann::json& report);
std::string render_cwe_csv(const nlohmann::json& report);
std::string render_overlap_csv(const nlohmann::json& report);

}  // namespace repovul
