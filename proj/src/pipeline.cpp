#include "repovul/pipeline.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "repovul/adapter.hpp"
#include "repovul/corpus.hpp"
#include "repovul/depgraph.hpp"
#include "repovul/error.hpp"
#include "repovul/hash.hpp"
#include "repovul/serialize.hpp"

namespace repovul {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSamplesFile = "samples.jsonl";
constexpr const char* kDepsFile = "deps.jsonl";
constexpr const char* kRetrievalFile = "retrieval.jsonl";
constexpr const char* kOutcomesFile = "outcomes.jsonl";

template <typename T>
T get_checked(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string(key) + ": " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + where);
    }
  }
}

json detector_json(const DetectorConfig& d) {
  return {{"id", d.id}, {"kind", d.kind}, {"threshold", d.threshold}, {"rules", d.rules},
          {"command", d.command}, {"budget", d.budget}};
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"patches", "snapshots", "output", "split", "seed", "scorer", "bm25", "trials", "ks",
                  "prediction_k", "detectors", "strategies", "budget", "dedup", "group_by_patch",
                  "micro_average", "cwes", "cwe_cap", "adapter_cmd"},
                 "config");
  RunConfig c;
  try {
    if (j.contains("patches")) c.patches = get_checked<std::string>(j, "patches");
    if (j.contains("snapshots")) c.snapshots = get_checked<std::string>(j, "snapshots");
    if (j.contains("output")) c.output = get_checked<std::string>(j, "output");
    if (j.contains("split")) c.split = split_strategy_from_string(get_checked<std::string>(j, "split"));
    if (j.contains("seed")) c.seed = get_checked<std::uint64_t>(j, "seed");
    if (j.contains("scorer")) c.scorer = scorer_id_from_string(get_checked<std::string>(j, "scorer"));
    if (j.contains("bm25")) {
      const auto& b = j.at("bm25");
      reject_unknown(b, {"k1", "b", "delta"}, "bm25");
      c.bm25.k1 = b.value("k1", c.bm25.k1);
      c.bm25.b = b.value("b", c.bm25.b);
      c.bm25.delta = b.value("delta", c.bm25.delta);
    }
    if (j.contains("trials")) c.trials = get_checked<int>(j, "trials");
    if (j.contains("ks")) c.ks = get_checked<std::vector<std::size_t>>(j, "ks");
    if (j.contains("prediction_k")) c.prediction_k = get_checked<std::size_t>(j, "prediction_k");
    if (j.contains("detectors")) {
      c.detectors.clear();
      for (const auto& d : j.at("detectors")) {
        reject_unknown(d, {"id", "kind", "threshold", "rules", "command", "budget"}, "detector");
        DetectorConfig dc;
        dc.id = get_checked<std::string>(d, "id");
        dc.kind = d.value("kind", dc.kind);
        dc.threshold = d.value("threshold", dc.threshold);
        dc.rules = d.value("rules", dc.rules);
        dc.command = d.value("command", dc.command);
        dc.budget = d.value("budget", dc.budget);
        c.detectors.push_back(std::move(dc));
      }
    }
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : get_checked<std::vector<std::string>>(j, "strategies")) {
        c.strategies.push_back(strategy_from_string(s));
      }
    }
    if (j.contains("budget")) c.budget = get_checked<std::size_t>(j, "budget");
    if (j.contains("dedup")) c.dedup = get_checked<bool>(j, "dedup");
    if (j.contains("group_by_patch")) c.group_by_patch = get_checked<bool>(j, "group_by_patch");
    if (j.contains("micro_average")) c.micro_average = get_checked<bool>(j, "micro_average");
    if (j.contains("cwes")) {
      c.cwes.clear();
      for (const auto& s : get_checked<std::vector<std::string>>(j, "cwes")) c.cwes.push_back(normalize_cwe(s));
    }
    if (j.contains("cwe_cap")) c.cwe_cap = get_checked<std::size_t>(j, "cwe_cap");
    if (j.contains("adapter_cmd")) c.adapter_cmd = get_checked<std::string>(j, "adapter_cmd");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    throw Error(ErrorCode::InvalidConfig, e.message());
  }
  return c;
}

json RunConfig::to_json() const {
  json dets = json::array();
  for (const auto& d : detectors) dets.push_back(detector_json(d));
  std::vector<std::string> strats;
  for (Strategy s : strategies) strats.emplace_back(to_string(s));
  return {{"patches", patches.generic_string()},
          {"snapshots", snapshots.generic_string()},
          {"output", output.generic_string()},
          {"split", to_string(split)},
          {"seed", seed},
          {"scorer", to_string(scorer)},
          {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}, {"delta", bm25.delta}}},
          {"trials", trials},
          {"ks", ks},
          {"prediction_k", prediction_k},
          {"detectors", dets},
          {"strategies", strats},
          {"budget", budget},
          {"dedup", dedup},
          {"group_by_patch", group_by_patch},
          {"micro_average", micro_average},
          {"cwes", cwes},
          {"cwe_cap", cwe_cap},
          {"adapter_cmd", adapter_cmd}};
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { return Error(ErrorCode::InvalidConfig, m); };
  if (ks.empty()) throw fail("ks must not be empty");
  if (std::any_of(ks.begin(), ks.end(), [](std::size_t k) { return k == 0; })) throw fail("every k must be positive");
  if (prediction_k == 0) throw fail("prediction_k must be positive");
  if (trials < 1) throw fail("trials must be positive");
  try {
    bm25.validate();
  } catch (const Error& e) {
    throw fail(e.message());
  }
  if (budget < kMinContextBudget) throw fail("budget must be at least 64");
  if (detectors.empty()) throw fail("at least one detector is required");
  if (strategies.empty()) throw fail("at least one strategy is required");
  std::set<std::string> ids;
  for (const auto& d : detectors) {
    if (d.id.empty() || !ids.insert(d.id).second) throw fail("detector ids must be unique and non-empty");
    if (d.kind != "builtin_rules" && d.kind != "external") throw fail("unknown detector kind " + d.kind);
    if (d.threshold < 1 || d.threshold > 5) throw fail("detector threshold must be in 1..5");
    if (d.budget != 0 && d.budget < kMinContextBudget) throw fail("detector budget must be at least 64");
  }
}

std::string RunConfig::stage_hash(Stage stage) const {
  const json full = to_json();
  json subset;
  subset["patches"] = full["patches"];
  subset["snapshots"] = full["snapshots"];
  subset["dedup"] = full["dedup"];
  if (stage >= Stage::Retrieve) {
    subset["scorer"] = full["scorer"];
    subset["ks"] = full["ks"];
    if (scorer == ScorerId::Bm25 || scorer == ScorerId::Bm25Plus) subset["bm25"] = full["bm25"];
    if (scorer == ScorerId::Random) {
      subset["trials"] = full["trials"];
      subset["seed"] = full["seed"];
    }
    if (scorer == ScorerId::Cosine) subset["adapter_cmd"] = full["adapter_cmd"];
  }
  if (stage >= Stage::Detect) {
    subset["detectors"] = full["detectors"];
    subset["strategies"] = full["strategies"];
    subset["budget"] = full["budget"];
    subset["prediction_k"] = full["prediction_k"];
    subset["adapter_cmd"] = full["adapter_cmd"];
  }
  if (stage >= Stage::Evaluate) {
    subset["split"] = full["split"];
    subset["seed"] = full["seed"];
    subset["group_by_patch"] = full["group_by_patch"];
    subset["micro_average"] = full["micro_average"];
    subset["cwes"] = full["cwes"];
    subset["cwe_cap"] = full["cwe_cap"];
  }
  return Fnv1a().add(subset.dump()).hex();
}

namespace {

std::vector<std::string> list_patch_ids(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "patches directory not found: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".diff") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw Error(ErrorCode::Io, "no *.diff patches in " + dir.string());
  return ids;
}

PatchRecord load_patch(const RunConfig& config, const std::string& patch_id) {
  try {
    const fs::path meta_file = config.patches / (patch_id + ".json");
    if (!fs::exists(meta_file)) throw Error(ErrorCode::InvalidMetadata, "missing " + meta_file.string());
    json meta_json;
    try {
      meta_json = json::parse(read_text(meta_file));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidMetadata, meta_file.string() + ": " + e.what());
    }
    const PatchMeta meta = parse_patch_meta(meta_json, patch_id);
    return parse_patch(read_text(config.patches / (patch_id + ".diff")), meta);
  } catch (const Error& e) {
    throw Error(e.code(), "patch " + patch_id + ": " + e.message());
  }
}

fs::path resolve_snapshot(const RunConfig& config, const PatchMeta& meta) {
  const fs::path manifest = config.snapshots / "manifest.json";
  if (fs::exists(manifest)) {
    const json m = json::parse(read_text(manifest));
    const std::string key = meta.repo_id + "@" + meta.parent_commit_id;
    if (m.contains(key)) return config.snapshots / m.at(key).get<std::string>();
  }
  for (const fs::path& candidate : {config.snapshots / meta.repo_id / meta.parent_commit_id,
                                    config.snapshots / meta.patch_id}) {
    if (fs::is_directory(candidate)) return candidate;
  }
  throw Error(ErrorCode::MissingFile, "patch " + meta.patch_id + ": no snapshot for " + meta.repo_id + "@" +
                                          meta.parent_commit_id + " under " + config.snapshots.string());
}

class SnapshotCache {
 public:
  explicit SnapshotCache(const RunConfig& config) : config_(config) {}

  const RepoSnapshot& snapshot(const PatchMeta& meta) { return entry(meta).snapshot; }
  const FunctionIndex& index(const PatchMeta& meta) {
    auto& e = entry(meta);
    if (!e.index) e.index = index_repo(e.snapshot);
    return *e.index;
  }

 private:
  struct Entry {
    RepoSnapshot snapshot;
    std::optional<FunctionIndex> index;
  };

  Entry& entry(const PatchMeta& meta) {
    const fs::path dir = resolve_snapshot(config_, meta);
    const std::string key = dir.generic_string();
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, Entry{load_snapshot_dir(dir, meta.repo_id, meta.parent_commit_id), std::nullopt}).first;
    }
    return it->second;
  }

  const RunConfig& config_;
  std::map<std::string, Entry> cache_;
};

template <typename T>
std::vector<T> load_records(const fs::path& file, const ArtifactHeader& header) {
  std::vector<T> out;
  for (const auto& j : read_jsonl(file, header)) {
    try {
      out.push_back(j.get<T>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Io, file.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<FunctionSample> load_samples(const RunConfig& config) {
  return load_records<FunctionSample>(config.output / kSamplesFile, {"samples", config.stage_hash(Stage::Ingest)});
}

std::map<std::string, DependencySet> load_deps(const RunConfig& config) {
  std::map<std::string, DependencySet> out;
  for (auto& d : load_records<DependencySet>(config.output / kDepsFile, {"deps", config.stage_hash(Stage::Extract)})) {
    std::string id = d.sample_id;
    out.emplace(std::move(id), std::move(d));
  }
  return out;
}

std::map<std::string, RetrievalResult> load_retrieval(const RunConfig& config) {
  std::map<std::string, RetrievalResult> out;
  for (auto& r : load_records<RetrievalResult>(config.output / kRetrievalFile,
                                               {"retrieval", config.stage_hash(Stage::Retrieve)})) {
    std::string id = r.sample_id;
    out.emplace(std::move(id), std::move(r));
  }
  return out;
}

}  // namespace

StageStatus run_ingest(const RunConfig& config, std::ostream& log) {
  config.validate();
  SnapshotCache cache(config);
  std::vector<FunctionSample> all;
  json manifest_patches = json::array();
  json skip_patches = json::array();
  for (const std::string& id : list_patch_ids(config.patches)) {
    const PatchRecord patch = load_patch(config, id);
    SkipReport skips;
    std::vector<FunctionSample> samples = label_functions(patch, cache.snapshot(patch.meta), &skips);
    const auto vulnerable = std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.label == 1; });
    manifest_patches.push_back({{"patch_id", id},
                                {"cve_id", patch.meta.cve_id},
                                {"files", patch.file_diffs.size()},
                                {"samples", samples.size()},
                                {"vulnerable", vulnerable}});
    json skipped = json::array();
    for (const auto& item : skips.items) {
      skipped.push_back({{"path", item.path}, {"line", item.line}, {"reason", item.reason}});
    }
    skip_patches.push_back({{"patch_id", id}, {"skipped", skipped}, {"ignored_files", skips.ignored_files}});
    log << "ingest " << id << ": " << samples.size() << " functions, " << vulnerable << " vulnerable, "
        << skips.items.size() << " skipped\n";
    std::move(samples.begin(), samples.end(), std::back_inserter(all));
  }
  const std::size_t before = all.size();
  if (config.dedup) all = dedup_samples(std::move(all));

  std::vector<json> records;
  records.reserve(all.size());
  for (const auto& s : all) records.emplace_back(s);
  const std::string hash = config.stage_hash(Stage::Ingest);
  write_jsonl(config.output / kSamplesFile, {"samples", hash}, records);
  const json manifest{{"_header", {{"artifact", "manifest"}, {"config_hash", hash}, {"format", 1}}},
                      {"patches", manifest_patches},
                      {"total_samples", all.size()},
                      {"removed_duplicates", before - all.size()}};
  write_text(config.output / "manifest.json", manifest.dump(2) + "\n");
  const json skip_report{{"_header", {{"artifact", "skip_report"}, {"config_hash", hash}, {"format", 1}}},
                         {"patches", skip_patches}};
  write_text(config.output / "skip_report.json", skip_report.dump(2) + "\n");
  log << "ingest: " << manifest_patches.size() << " patches, " << all.size() << " samples\n";
  return {};
}

StageStatus run_extract(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto samples = load_samples(config);
  SnapshotCache cache(config);
  std::map<std::string, PatchRecord> patches;
  std::vector<json> records;
  std::size_t m = 0, n = 0, vul = 0;
  for (const auto& s : samples) {
    auto it = patches.find(s.patch_id);
    if (it == patches.end()) it = patches.emplace(s.patch_id, load_patch(config, s.patch_id)).first;
    const PatchRecord& patch = it->second;
    const FunctionIndex& index = cache.index(patch.meta);
    DependencySet deps = label_vul_dependencies(extract_dependencies(s, index), patch, index);
    m += deps.callees.size();
    n += deps.callers.size();
    vul += deps.vul_count();
    records.emplace_back(deps);
  }
  write_jsonl(config.output / kDepsFile, {"deps", config.stage_hash(Stage::Extract)}, records);
  log << "extract: " << records.size() << " dependency sets, " << m << " callees, " << n << " callers, " << vul
      << " vul-related\n";
  return {};
}

StageStatus run_retrieve(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto samples = load_samples(config);
  const auto deps = load_deps(config);
  std::optional<Scorer> scorer;
  switch (config.scorer) {
    case ScorerId::Random: scorer = Scorer::random({config.seed, config.trials}); break;
    case ScorerId::Jaccard: scorer = Scorer::jaccard(); break;
    case ScorerId::Edit: scorer = Scorer::edit(); break;
    case ScorerId::Bm25: scorer = Scorer::bm25(config.bm25); break;
    case ScorerId::Bm25Plus: scorer = Scorer::bm25plus(config.bm25); break;
    case ScorerId::Cosine:
      if (config.adapter_cmd.empty()) {
        throw Error(ErrorCode::ProviderUnavailable, "cosine scorer needs --adapter-cmd for embeddings");
      }
      scorer = Scorer::cosine(std::make_shared<AdapterEmbeddingProvider>(
          launch_adapter(config.adapter_cmd, adapter_timeout_from_env())));
      break;
  }
  const std::size_t depth = *std::max_element(config.ks.begin(), config.ks.end());
  std::vector<json> records;
  std::size_t empty = 0;
  for (const auto& s : samples) {
    const auto it = deps.find(s.sample_id);
    if (it == deps.end()) throw Error(ErrorCode::KeyMismatch, "no dependency set for " + s.sample_id);
    const RetrievalResult r = retrieve_top_k(s, it->second, *scorer, std::max(depth, config.prediction_k));
    empty += r.no_candidates ? 1 : 0;
    records.emplace_back(r);
  }
  write_jsonl(config.output / kRetrievalFile, {"retrieval", config.stage_hash(Stage::Retrieve)}, records);
  log << "retrieve (" << to_string(config.scorer) << "): " << records.size() << " results, " << empty
      << " without candidates\n";
  return {};
}

StageStatus run_detect(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto samples = load_samples(config);
  const bool needs_deps = std::any_of(config.strategies.begin(), config.strategies.end(),
                                      [](Strategy s) { return s != Strategy::FunctionOnly; });
  const bool needs_retrieval = std::find(config.strategies.begin(), config.strategies.end(),
                                         Strategy::Prediction) != config.strategies.end();
  const auto deps = needs_deps ? load_deps(config) : std::map<std::string, DependencySet>{};
  const auto retrieved = needs_retrieval ? load_retrieval(config) : std::map<std::string, RetrievalResult>{};

  StageStatus status;
  std::vector<json> records;
  for (const DetectorConfig& dc : config.detectors) {
    const std::size_t budget = dc.budget != 0 ? dc.budget : config.budget;
    std::unique_ptr<Detector> detector;
    std::optional<std::string> launch_error;
    if (dc.kind == "builtin_rules") {
      detector = std::make_unique<RuleDetector>(
          dc.id, dc.rules.empty() ? RuleSet::builtin() : RuleSet::load(dc.rules), dc.threshold, budget);
    } else {
      const std::string command = dc.command.empty() ? config.adapter_cmd : dc.command;
      try {
        if (command.empty()) throw Error(ErrorCode::ProviderUnavailable, "detector " + dc.id + " has no adapter command");
        detector = std::make_unique<ExternalDetector>(dc.id, launch_adapter(command, adapter_timeout_from_env()), budget);
      } catch (const Error& e) {
        if (!e.is_adapter_failure()) throw;
        launch_error = e.what();
      }
    }
    for (Strategy strategy : config.strategies) {
      std::vector<DetectionOutcome> outcomes;
      if (launch_error) {
        for (const auto& s : samples) {
          DetectionOutcome o;
          o.sample_id = s.sample_id;
          o.detector_id = dc.id;
          o.strategy = strategy;
          o.error = *launch_error;
          outcomes.push_back(std::move(o));
        }
        std::sort(outcomes.begin(), outcomes.end(),
                  [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
      } else {
        outcomes = run_detection(samples, deps, retrieved, *detector, strategy, config.prediction_k);
      }
      std::size_t positive = 0, errors = 0;
      for (const auto& o : outcomes) {
        positive += o.predicted == 1 ? 1 : 0;
        errors += o.error ? 1 : 0;
        records.emplace_back(o);
      }
      if (errors > 0) status.adapter_failure = true;
      log << "detect " << dc.id << "/" << to_string(strategy) << ": " << outcomes.size() << " outcomes, "
          << positive << " flagged, " << errors << " errors\n";
    }
  }
  write_jsonl(config.output / kOutcomesFile, {"outcomes", config.stage_hash(Stage::Detect)}, records);
  return status;
}

namespace {

json confusion_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

json metrics_json(const BinaryMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"mcc", m.mcc}};
}

json retrieval_summary_json(const RetrievalSummary& s) {
  json rows = json::array();
  for (const auto& r : s.at_k) {
    rows.push_back({{"k", r.k},
                    {"precision", r.precision},
                    {"precision_capped", r.precision_capped},
                    {"recall", r.recall},
                    {"precision_micro", r.precision_micro},
                    {"recall_micro", r.recall_micro}});
  }
  return {{"samples", s.samples},
          {"precision_evaluable", s.precision_evaluable},
          {"recall_evaluable", s.recall_evaluable},
          {"at_k", rows}};
}

}  // namespace

StageStatus run_evaluate(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto samples = load_samples(config);
  const auto deps = load_deps(config);
  const auto retrieved = load_retrieval(config);
  const auto outcomes = load_records<DetectionOutcome>(config.output / kOutcomesFile,
                                                       {"outcomes", config.stage_hash(Stage::Detect)});

  std::vector<SplitItem> items;
  for (const auto& s : samples) items.push_back({s.sample_id, s.commit_timestamp, s.patch_id});
  const SplitAssignment split = config.split == SplitStrategy::Random
                                    ? split_random(items, config.seed, config.group_by_patch)
                                    : split_by_time(items, config.group_by_patch);
  json split_json{{"strategy", to_string(split.strategy)},
                  {"group_by_patch", config.group_by_patch},
                  {"sizes", {{"train", split.sizes[0]}, {"valid", split.sizes[1]}, {"test", split.sizes[2]}}}};
  if (split.seed) split_json["seed"] = *split.seed;
  if (split.valid_from) split_json["valid_from"] = format_iso_date(*split.valid_from);
  if (split.test_from) split_json["test_from"] = format_iso_date(*split.test_from);
  if (config.split == SplitStrategy::Time) {
    log << "time split boundaries: valid from " << split_json.value("valid_from", "-") << ", test from "
        << split_json.value("test_from", "-") << "\n";
  }

  const std::map<std::string, std::vector<const FunctionSample*>> scopes = [&] {
    std::map<std::string, std::vector<const FunctionSample*>> m;
    for (const auto& s : samples) {
      m["all"].push_back(&s);
      if (split.assignment.at(s.sample_id) == Partition::Test) m["test"].push_back(&s);
    }
    m.try_emplace("test");
    return m;
  }();

  // (detector, strategy) -> sample_id -> prediction; errored outcomes are excluded.
  std::map<std::pair<std::string, Strategy>, LabelMap> predictions;
  std::map<std::pair<std::string, Strategy>, std::size_t> error_counts;
  std::vector<std::string> detector_order;
  std::vector<Strategy> strategy_order;
  for (const auto& o : outcomes) {
    const auto key = std::make_pair(o.detector_id, o.strategy);
    if (std::find(detector_order.begin(), detector_order.end(), o.detector_id) == detector_order.end()) {
      detector_order.push_back(o.detector_id);
    }
    if (std::find(strategy_order.begin(), strategy_order.end(), o.strategy) == strategy_order.end()) {
      strategy_order.push_back(o.strategy);
    }
    if (o.error) {
      ++error_counts[key];
      predictions.try_emplace(key);
      continue;
    }
    predictions[key][o.sample_id] = o.predicted;
  }

  json detection = json::array();
  for (const auto& [scope, members] : scopes) {
    for (const auto& detector : detector_order) {
      for (Strategy strategy : strategy_order) {
        const auto key = std::make_pair(detector, strategy);
        const auto it = predictions.find(key);
        if (it == predictions.end()) continue;
        LabelMap preds, labels;
        std::size_t errors = 0;
        for (const FunctionSample* s : members) {
          const auto p = it->second.find(s->sample_id);
          if (p == it->second.end()) {
            ++errors;
            continue;
          }
          preds[s->sample_id] = p->second;
          labels[s->sample_id] = s->label;
        }
        const auto [cm, metrics] = binary_metrics(preds, labels);
        json row{{"scope", scope},       {"detector", detector},       {"strategy", to_string(strategy)},
                 {"evaluated", preds.size()}, {"errors", errors},       {"confusion", confusion_json(cm)}};
        row.update(metrics_json(metrics));
        detection.push_back(std::move(row));
      }
    }
  }

  json retrieval{{"scorer", to_string(config.scorer)}, {"ks", config.ks},
                 {"averaging", config.micro_average ? "micro" : "macro"}};
  if (config.scorer == ScorerId::Random) retrieval["trials"] = config.trials;
  json retrieval_scopes = json::object();
  for (const auto& [scope, members] : scopes) {
    std::vector<RetrievalEval> evals;
    for (const FunctionSample* s : members) {
      evals.push_back(retrieval_metrics(retrieved.at(s->sample_id), deps.at(s->sample_id), config.ks));
    }
    retrieval_scopes[scope] = retrieval_summary_json(aggregate_retrieval(evals, config.ks));
  }
  retrieval["scopes"] = retrieval_scopes;

  json per_cwe = json::array();
  json overlap = json::array();
  std::vector<FunctionSample> test_samples;
  for (const FunctionSample* s : scopes.at("test")) test_samples.push_back(*s);
  for (Strategy strategy : strategy_order) {
    PredictionsByDetector by_detector;
    LabelMap labels;
    for (const auto& s : test_samples) labels[s.sample_id] = s.label;
    bool complete = true;
    for (const auto& detector : detector_order) {
      LabelMap preds;
      const auto& all_preds = predictions.at({detector, strategy});
      for (const auto& s : test_samples) {
        const auto p = all_preds.find(s.sample_id);
        if (p == all_preds.end()) {
          complete = false;
          continue;
        }
        preds[s.sample_id] = p->second;
      }
      by_detector[detector] = std::move(preds);
    }
    if (!complete) {
      log << "evaluate: skipping per-CWE and overlap tables for " << to_string(strategy)
          << " (detector errors on test samples)\n";
      continue;
    }
    const CweReport cwe = per_cwe_report(by_detector, test_samples, config.cwes, config.cwe_cap);
    for (const auto& row : cwe.rows) {
      json dets = json::object();
      for (const auto& [detector, d] : row.detectors) {
        json dj{{"correct", d.correct}, {"confusion", confusion_json(d.confusion)}};
        dj.update(metrics_json(d.metrics));
        dets[detector] = dj;
      }
      per_cwe.push_back({{"strategy", to_string(strategy)},
                         {"cwe", row.cwe},
                         {"unknown", row.unknown},
                         {"samples", row.sample_ids.size()},
                         {"detectors", dets}});
    }
    if (by_detector.size() >= 2) {
      auto add_overlap = [&](const std::string& scope, const PredictionsByDetector& preds, const LabelMap& lab) {
        const OverlapReport o = overlap_report(preds, lab);
        overlap.push_back({{"strategy", to_string(strategy)},
                           {"scope", scope},
                           {"correct", o.correct},
                           {"exclusive", o.exclusive},
                           {"union", o.union_count},
                           {"intersection", o.intersection_count}});
      };
      add_overlap("test", by_detector, labels);
      for (const auto& row : cwe.rows) {
        if (row.unknown) continue;
        PredictionsByDetector sub;
        LabelMap sub_labels;
        for (const auto& id : row.sample_ids) sub_labels[id] = labels.at(id);
        for (const auto& [detector, preds] : by_detector) {
          for (const auto& id : row.sample_ids) sub[detector][id] = preds.at(id);
        }
        add_overlap(row.cwe, sub, sub_labels);
      }
    }
  }

  const std::string hash = config.stage_hash(Stage::Evaluate);
  json report_config = config.to_json();
  report_config.erase("output");
  json report{{"_header", {{"artifact", "report"}, {"config_hash", hash}, {"format", 1}}},
              {"config", report_config},
              {"samples", samples.size()},
              {"split", split_json},
              {"detection", detection},
              {"retrieval", retrieval},
              {"per_cwe", per_cwe},
              {"cwe_cap", config.cwe_cap},
              {"overlap", overlap}};
  write_text(config.output / "report.json", report.dump(2) + "\n");
  write_text(config.output / "report.md", render_report_markdown(report));
  write_text(config.output / "per_cwe.csv", render_cwe_csv(report));
  write_text(config.output / "overlap.csv", render_overlap_csv(report));
  log << "evaluate: " << samples.size() << " samples, test split " << split.sizes[2] << ", report written to "
      << (config.output / "report.json").string() << "\n";
  return {};
}

StageStatus run_report(const RunConfig& config, std::ostream& log) {
  const fs::path file = config.output / "report.json";
  json report;
  try {
    report = json::parse(read_text(file));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, file.string() + ": " + e.what());
  }
  if (report.value("/_header/artifact"_json_pointer, "") != "report") {
    throw Error(ErrorCode::ArtifactMismatch, file.string() + " is not a report");
  }
  const std::string md = render_report_markdown(report);
  write_text(config.output / "report.md", md);
  write_text(config.output / "per_cwe.csv", render_cwe_csv(report));
  write_text(config.output / "overlap.csv", render_overlap_csv(report));
  log << md;
  return {};
}

}  // namespace repovul
