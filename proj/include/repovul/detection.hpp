#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "repovul/corpus.hpp"
#include "repovul/depgraph.hpp"
#include "repovul/retrieval.hpp"

namespace repovul {

enum class Strategy { FunctionOnly, Upper, Prediction };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

inline constexpr std::size_t kMinContextBudget = 64;
inline constexpr std::size_t kDefaultContextBudget = 2048;

struct Rule {
  enum class Kind { Call, Regex };

  std::string rule_id;
  Kind kind = Kind::Call;
  std::string pattern;  // callee name for Call, ECMAScript regex for Regex
  std::optional<std::string> cwe_hint;
  int severity = 1;  // 1..5

  // Validates severity and compiles the regex. Throws Error{InvalidRule}.
  static Rule make(std::string rule_id, Kind kind, std::string pattern, int severity,
                   std::optional<std::string> cwe_hint = std::nullopt);

  // Matches against text whose comments and literals are already masked.
  bool matches(std::string_view masked, const std::vector<std::string_view>& called) const;

 private:
  std::shared_ptr<const std::regex> regex_;
};

class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::vector<Rule> rules) : rules_(std::move(rules)) {}

  // {"rules":[{"id","kind":"call"|"regex","pattern","severity","cwe"?}]}
  static RuleSet from_json(const nlohmann::json& j);
  static RuleSet load(const std::filesystem::path& file);
  // Default dangerous-API rules shipped in data/rules.json. The location can
  // be overridden with REPOVUL_RULES.
  static RuleSet builtin();
  static std::filesystem::path builtin_path();

  const std::vector<Rule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

 private:
  std::vector<Rule> rules_;
};

struct DepRef {
  DepKind kind = DepKind::Callee;
  std::string name;
  std::string path;
  std::size_t start_line = 0;

  bool operator==(const DepRef&) const = default;
};

struct ComposedInput {
  std::string sample_id;
  std::string text;
  std::vector<DepRef> included_deps;
  bool truncated = false;
  Strategy strategy = Strategy::FunctionOnly;
};

// Dependencies to show the detector, in block order: nothing for
// FunctionOnly, every vul-related callee then caller (location order) for
// Upper, the retrieved top-k for Prediction.
std::vector<const Dependency*> select_context(Strategy strategy, const DependencySet& deps,
                                              const RetrievalResult* retrieved, std::size_t k);

// Target code followed by one "/* dep:<kind>:<name> */" block per
// dependency. Budget is in tokenize() units; trailing blocks are dropped
// first and the target itself is only cut when it alone exceeds the budget.
ComposedInput compose_input(const FunctionSample& sample, std::span<const Dependency* const> context,
                            Strategy strategy, std::size_t budget);

std::string dep_marker(DepKind kind, std::string_view name);

struct DetectionOutcome {
  std::string sample_id;
  int predicted = 0;
  double score = 0.0;
  std::string detector_id;
  Strategy strategy = Strategy::FunctionOnly;
  std::optional<std::string> error;  // set when the detector failed on this sample

  bool operator==(const DetectionOutcome&) const = default;
};

// Fires when a rule of severity >= threshold matches outside comments and
// literals. score = max matched severity / 5.
DetectionOutcome rule_detect(const ComposedInput& input, const RuleSet& rules, int threshold);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual const std::string& id() const = 0;
  virtual std::size_t context_budget() const = 0;
  virtual DetectionOutcome detect(const ComposedInput& input) = 0;
};

class RuleDetector final : public Detector {
 public:
  RuleDetector(std::string id, RuleSet rules, int threshold = 1,
               std::size_t budget = kDefaultContextBudget);

  const std::string& id() const override { return id_; }
  std::size_t context_budget() const override { return budget_; }
  DetectionOutcome detect(const ComposedInput& input) override;

 private:
  std::string id_;
  RuleSet rules_;
  int threshold_;
  std::size_t budget_;
};

// Runs the detector over every sample under one strategy. Output is ordered
// by sample_id with exactly one outcome per sample; adapter failures become
// error markers (a crashed or timed-out adapter marks every remaining sample).
std::vector<DetectionOutcome> run_detection(
    std::span<const FunctionSample> samples, const std::map<std::string, DependencySet>& deps,
    const std::map<std::string, RetrievalResult>& retrieved, Detector& detector,
    Strategy strategy, std::size_t prediction_k);

}  // namespace repovul
