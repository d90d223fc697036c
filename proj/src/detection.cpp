#include "repovul/detection.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "repovul/error.hpp"
#include "repovul/lexer.hpp"
#include "repovul/tokenize.hpp"

#ifndef REPOVUL_DATA_DIR
#define REPOVUL_DATA_DIR "data"
#endif

namespace repovul {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::FunctionOnly: return "FunctionOnly";
    case Strategy::Upper: return "Upper";
    case Strategy::Prediction: return "Prediction";
  }
  return "unknown";
}

Strategy strategy_from_string(std::string_view s) {
  // Accepts the canonical names and lower/snake-case spellings (function_only).
  auto fold = [](std::string_view v) {
    std::string out;
    for (char c : v) {
      if (c != '_' && c != '-') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
  };
  for (Strategy v : {Strategy::FunctionOnly, Strategy::Upper, Strategy::Prediction}) {
    if (fold(to_string(v)) == fold(s)) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown strategy: " + std::string(s));
}

Rule Rule::make(std::string rule_id, Kind kind, std::string pattern, int severity,
                std::optional<std::string> cwe_hint) {
  if (severity < 1 || severity > 5) {
    throw Error(ErrorCode::InvalidRule, rule_id + ": severity must be in 1..5");
  }
  if (pattern.empty()) throw Error(ErrorCode::InvalidRule, rule_id + ": empty pattern");
  Rule r;
  r.rule_id = std::move(rule_id);
  r.kind = kind;
  r.pattern = std::move(pattern);
  r.severity = severity;
  r.cwe_hint = std::move(cwe_hint);
  if (kind == Kind::Regex) {
    try {
      r.regex_ = std::make_shared<const std::regex>(r.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::InvalidRule, r.rule_id + ": " + e.what());
    }
  }
  return r;
}

bool Rule::matches(std::string_view masked, const std::vector<std::string_view>& called) const {
  if (kind == Kind::Call) {
    return std::find(called.begin(), called.end(), pattern) != called.end();
  }
  return std::regex_search(masked.begin(), masked.end(), *regex_);
}

RuleSet RuleSet::from_json(const nlohmann::json& j) {
  std::vector<Rule> rules;
  try {
    for (const auto& r : j.at("rules")) {
      const std::string kind = r.value("kind", "call");
      if (kind != "call" && kind != "regex") {
        throw Error(ErrorCode::InvalidRule, "unknown rule kind: " + kind);
      }
      std::optional<std::string> cwe;
      if (r.contains("cwe")) cwe = r.at("cwe").get<std::string>();
      rules.push_back(Rule::make(r.at("id").get<std::string>(),
                                 kind == "call" ? Rule::Kind::Call : Rule::Kind::Regex,
                                 r.at("pattern").get<std::string>(), r.at("severity").get<int>(), cwe));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidRule, e.what());
  }
  if (rules.empty()) throw Error(ErrorCode::InvalidRule, "rule set is empty");
  return RuleSet(std::move(rules));
}

RuleSet RuleSet::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open rule file " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidRule, file.string() + ": " + e.what());
  }
  return from_json(j);
}

std::filesystem::path RuleSet::builtin_path() {
  if (const char* env = std::getenv("REPOVUL_RULES"); env != nullptr && *env != '\0') return env;
  return std::filesystem::path(REPOVUL_DATA_DIR) / "rules.json";
}

RuleSet RuleSet::builtin() { return load(builtin_path()); }

std::vector<const Dependency*> select_context(Strategy strategy, const DependencySet& deps,
                                              const RetrievalResult* retrieved, std::size_t k) {
  std::vector<const Dependency*> out;
  switch (strategy) {
    case Strategy::FunctionOnly:
      break;
    case Strategy::Upper:
      for (const auto& d : deps.callees) {
        if (d.vul_related) out.push_back(&d);
      }
      for (const auto& d : deps.callers) {
        if (d.vul_related) out.push_back(&d);
      }
      break;
    case Strategy::Prediction: {
      if (retrieved == nullptr) {
        throw Error(ErrorCode::InvalidArgument, "Prediction strategy needs a retrieval result");
      }
      const auto& ranked = retrieved->ranked();
      for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
        const RankedDependency& rd = ranked[r];
        const auto& pool = rd.kind == DepKind::Callee ? deps.callees : deps.callers;
        const auto it = std::find_if(pool.begin(), pool.end(), [&](const Dependency& d) {
          return d.path == rd.path && d.start_line == rd.start_line;
        });
        if (it == pool.end()) {
          throw Error(ErrorCode::KeyMismatch, "retrieved dependency " + rd.path + ":" +
                                                  std::to_string(rd.start_line) +
                                                  " not in dependency set of " + deps.sample_id);
        }
        out.push_back(&*it);
      }
      break;
    }
  }
  return out;
}

std::string dep_marker(DepKind kind, std::string_view name) {
  return "/* dep:" + std::string(to_string(kind)) + ":" + std::string(name) + " */";
}

ComposedInput compose_input(const FunctionSample& sample, std::span<const Dependency* const> context,
                            Strategy strategy, std::size_t budget) {
  ComposedInput input;
  input.sample_id = sample.sample_id;
  input.strategy = strategy;
  const auto target_tokens = tokenize_with_offsets(sample.code);
  if (target_tokens.size() > budget) {
    const std::size_t cut = budget == 0 ? 0 : target_tokens[budget - 1].end_offset;
    input.text = sample.code.substr(0, cut);
    input.truncated = true;
    return input;
  }
  input.text = sample.code;
  std::size_t remaining = budget - target_tokens.size();
  for (const Dependency* dep : context) {
    const std::size_t cost = tokenize(dep->code).size();
    if (cost > remaining) {
      input.truncated = true;
      break;
    }
    remaining -= cost;
    input.text += "\n" + dep_marker(dep->kind, dep->name) + "\n" + dep->code;
    input.included_deps.push_back({dep->kind, dep->name, dep->path, dep->start_line});
  }
  return input;
}

DetectionOutcome rule_detect(const ComposedInput& input, const RuleSet& rules, int threshold) {
  const std::string masked = mask_source(input.text, false);
  const auto toks = lex(masked);
  std::vector<std::string_view> called;
  for (std::size_t k = 0; k + 1 < toks.size(); ++k) {
    if (toks[k].kind != Token::Kind::Identifier || toks[k + 1].text != "(") continue;
    if (k > 0 && (toks[k - 1].text == "." || toks[k - 1].text == "->")) continue;
    called.push_back(toks[k].text);
  }
  int best = 0;
  for (const Rule& rule : rules.rules()) {
    if (rule.severity > best && rule.matches(masked, called)) best = rule.severity;
  }
  DetectionOutcome out;
  out.sample_id = input.sample_id;
  out.strategy = input.strategy;
  out.predicted = best >= threshold && best > 0 ? 1 : 0;
  out.score = static_cast<double>(best) / 5.0;
  return out;
}

RuleDetector::RuleDetector(std::string id, RuleSet rules, int threshold, std::size_t budget)
    : id_(std::move(id)), rules_(std::move(rules)), threshold_(threshold), budget_(budget) {
  if (rules_.empty()) throw Error(ErrorCode::InvalidArgument, "rule detector needs rules");
  if (threshold_ < 1 || threshold_ > 5) throw Error(ErrorCode::InvalidArgument, "threshold must be in 1..5");
  if (budget_ < kMinContextBudget) {
    throw Error(ErrorCode::InvalidArgument, "context budget must be at least 64 tokens");
  }
}

DetectionOutcome RuleDetector::detect(const ComposedInput& input) {
  DetectionOutcome out = rule_detect(input, rules_, threshold_);
  out.detector_id = id_;
  return out;
}

std::vector<DetectionOutcome> run_detection(
    std::span<const FunctionSample> samples, const std::map<std::string, DependencySet>& deps,
    const std::map<std::string, RetrievalResult>& retrieved, Detector& detector,
    Strategy strategy, std::size_t prediction_k) {
  std::vector<const FunctionSample*> order;
  for (const auto& s : samples) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const FunctionSample* a, const FunctionSample* b) { return a->sample_id < b->sample_id; });

  static const DependencySet kNoDeps{};
  std::vector<DetectionOutcome> outcomes;
  std::optional<std::string> fatal;
  for (const FunctionSample* s : order) {
    DetectionOutcome failed;
    failed.sample_id = s->sample_id;
    failed.detector_id = detector.id();
    failed.strategy = strategy;
    if (fatal) {
      failed.error = *fatal;
      outcomes.push_back(std::move(failed));
      continue;
    }
    const DependencySet* ds = &kNoDeps;
    const RetrievalResult* rr = nullptr;
    if (strategy != Strategy::FunctionOnly) {
      const auto it = deps.find(s->sample_id);
      if (it == deps.end()) throw Error(ErrorCode::KeyMismatch, "no dependency set for " + s->sample_id);
      ds = &it->second;
    }
    if (strategy == Strategy::Prediction) {
      const auto it = retrieved.find(s->sample_id);
      if (it == retrieved.end()) throw Error(ErrorCode::KeyMismatch, "no retrieval result for " + s->sample_id);
      rr = &it->second;
    }
    const auto context = select_context(strategy, *ds, rr, prediction_k);
    const ComposedInput input = compose_input(*s, context, strategy, detector.context_budget());
    try {
      DetectionOutcome out = detector.detect(input);
      out.sample_id = s->sample_id;
      out.detector_id = detector.id();
      out.strategy = strategy;
      outcomes.push_back(std::move(out));
    } catch (const Error& e) {
      if (!e.is_adapter_failure()) throw;
      failed.error = e.what();
      if (e.code() != ErrorCode::ProtocolError) fatal = e.what();
      outcomes.push_back(std::move(failed));
    }
  }
  return outcomes;
}

}  // namespace repovul
