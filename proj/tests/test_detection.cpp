#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "repovul/corpus.hpp"
#include "repovul/depgraph.hpp"
#include "repovul/detection.hpp"
#include "repovul/error.hpp"
#include "repovul/retrieval.hpp"
#include "repovul/slicer.hpp"
#include "repovul/tokenize.hpp"
#include "support.hpp"

using namespace repovul;

namespace {

FunctionSample sample(std::string id, std::string code, int label = 0) {
  FunctionSample s;
  s.sample_id = std::move(id);
  s.code = std::move(code);
  s.label = label;
  return s;
}

Dependency dep(DepKind kind, std::string name, std::string code, bool vul, std::size_t line) {
  Dependency d;
  d.kind = kind;
  d.name = std::move(name);
  d.code = std::move(code);
  d.path = "a.c";
  d.start_line = line;
  d.vul_related = vul;
  return d;
}

RuleSet gets_only() { return RuleSet({Rule::make("gets", Rule::Kind::Call, "gets", 5)}); }

}  // namespace

TEST(ComposeInput, FunctionOnlyIsTheCodeVerbatim) {
  const auto s = sample("s", "int f(void) {\n  return 0; /* note */\n}");
  DependencySet deps;
  deps.callees.push_back(dep(DepKind::Callee, "g", "int g(void) { return 1; }", true, 1));
  const auto ctx = select_context(Strategy::FunctionOnly, deps, nullptr, 3);
  const auto in = compose_input(s, ctx, Strategy::FunctionOnly, 2048);
  EXPECT_EQ(in.text, s.code);
  EXPECT_TRUE(in.included_deps.empty());
  EXPECT_FALSE(in.truncated);
}

TEST(ComposeInput, UpperUsesVulDepsCalleesFirst) {
  const auto s = sample("s", "int f(void) { return g() + h(); }");
  DependencySet deps;
  deps.callers.push_back(dep(DepKind::Caller, "caller_vul", "int caller_vul(void) { return f(); }", true, 1));
  deps.callees.push_back(dep(DepKind::Callee, "callee_plain", "int callee_plain(void) { return 0; }", false, 2));
  deps.callees.push_back(dep(DepKind::Callee, "callee_vul", "int callee_vul(void) { return 1; }", true, 3));
  const auto in = compose_input(s, select_context(Strategy::Upper, deps, nullptr, 0), Strategy::Upper, 2048);
  ASSERT_EQ(in.included_deps.size(), 2u);
  EXPECT_EQ(in.included_deps[0].name, "callee_vul");
  EXPECT_EQ(in.included_deps[1].name, "caller_vul");
  EXPECT_EQ(in.text, s.code + "\n/* dep:callee:callee_vul */\nint callee_vul(void) { return 1; }" +
                         "\n/* dep:caller:caller_vul */\nint caller_vul(void) { return f(); }");
  EXPECT_FALSE(in.truncated);
}

TEST(ComposeInput, PredictionDropsLowestRankWhenBudgetIsShort) {
  const auto s = sample("s", "int target(int a) { return a; }");
  DependencySet deps;
  deps.sample_id = "s";
  deps.callees.push_back(dep(DepKind::Callee, "one", "int one(void) { return target(1); }", false, 1));
  deps.callees.push_back(dep(DepKind::Callee, "two", "int two(void) { return target(2) + 2; }", false, 2));
  deps.callers.push_back(dep(DepKind::Caller, "three", "int three(void) { return target(3) * 3 + 3; }", false, 3));
  RetrievalResult r;
  r.sample_id = "s";
  r.k = 3;
  r.trials.emplace_back();
  for (const auto& [d, rank] : {std::pair{&deps.callers[0], 1u}, std::pair{&deps.callees[1], 2u},
                                std::pair{&deps.callees[0], 3u}}) {
    r.trials[0].push_back({d->kind, d->name, d->path, d->start_line, 1.0 / rank, rank});
  }
  // Token arithmetic: target + ranks 1 and 2 fit exactly, rank 3 does not.
  const std::size_t budget = tokenize(s.code).size() + tokenize(deps.callers[0].code).size() +
                             tokenize(deps.callees[1].code).size();
  const auto ctx = select_context(Strategy::Prediction, deps, &r, 3);
  ASSERT_EQ(ctx.size(), 3u);
  const auto in = compose_input(s, ctx, Strategy::Prediction, budget);
  ASSERT_EQ(in.included_deps.size(), 2u);
  EXPECT_EQ(in.included_deps[0].name, "three");
  EXPECT_EQ(in.included_deps[1].name, "two");
  EXPECT_TRUE(in.truncated);
  EXPECT_EQ(tokenize(in.text).size(), budget);
  EXPECT_FALSE(compose_input(s, ctx, Strategy::Prediction, budget + tokenize(deps.callees[0].code).size()).truncated);
}

TEST(ComposeInput, OversizedTargetIsCutAtTheBudgetToken) {
  std::string code = "int f(void) {";
  for (int i = 0; i < 100; ++i) code += " x" + std::to_string(i) + " = 0;";
  code += " }";
  const auto in = compose_input(sample("s", code), {}, Strategy::FunctionOnly, 64);
  EXPECT_TRUE(in.truncated);
  EXPECT_EQ(tokenize(in.text).size(), 64u);
  EXPECT_EQ(code.rfind(in.text, 0), 0u);
}

TEST(ComposeInput, BudgetHoldsWheneverNotTruncated) {
  std::mt19937_64 rng(12);
  for (int round = 0; round < 200; ++round) {
    std::string code = "int f(void) {";
    for (std::size_t i = 0, n = rng() % 40; i < n; ++i) code += " a" + std::to_string(rng() % 9) + "();";
    code += " }";
    DependencySet deps;
    for (std::size_t i = 0, n = rng() % 6; i < n; ++i) {
      std::string body = "int d" + std::to_string(i) + "(void) {";
      for (std::size_t j = 0, m = rng() % 30; j < m; ++j) body += " b();";
      deps.callees.push_back(dep(DepKind::Callee, "d" + std::to_string(i), body + " }", true, i + 1));
    }
    const std::size_t budget = 64 + rng() % 120;
    const auto in = compose_input(sample("s", code), select_context(Strategy::Upper, deps, nullptr, 0),
                                  Strategy::Upper, budget);
    if (tokenize(code).size() <= budget) EXPECT_EQ(in.text.rfind(code, 0), 0u);
    if (!in.truncated) EXPECT_LE(tokenize(in.text).size(), budget);
  }
}

TEST(RuleDetect, GetsFiresWithBuiltinRules) {
  ComposedInput in;
  in.text = "void f(char *buf) { gets(buf); }";
  const auto out = rule_detect(in, RuleSet::builtin(), 1);
  EXPECT_EQ(out.predicted, 1);
  EXPECT_DOUBLE_EQ(out.score, 1.0);
}

TEST(RuleDetect, CommentedCallDoesNotFire) {
  ComposedInput in;
  in.text = "/* gets */ int x;";
  EXPECT_EQ(rule_detect(in, RuleSet::builtin(), 1).predicted, 0);
  in.text = "int f(void) { puts(\"gets(buf)\"); } // gets(x)";
  EXPECT_EQ(rule_detect(in, gets_only(), 1).predicted, 0);
}

TEST(RuleDetect, ThresholdAndScore) {
  const RuleSet rules({Rule::make("memcpy", Rule::Kind::Call, "memcpy", 2),
                       Rule::make("strcpy", Rule::Kind::Call, "strcpy", 4)});
  ComposedInput in;
  in.text = "void f(void) { memcpy(a, b, 4); }";
  auto out = rule_detect(in, rules, 3);
  EXPECT_EQ(out.predicted, 0);
  EXPECT_DOUBLE_EQ(out.score, 0.4);
  in.text += " void g(void) { strcpy(a, b); }";
  out = rule_detect(in, rules, 3);
  EXPECT_EQ(out.predicted, 1);
  EXPECT_DOUBLE_EQ(out.score, 0.8);
  in.text = "void f(void) { s.memcpy(a); p->strcpy(b); }";
  EXPECT_DOUBLE_EQ(rule_detect(in, rules, 1).score, 0.0);
}

TEST(RuleDetect, UncheckedDereferenceRegexOnFig1) {
  // "dd->" occurring before any null test of dd.
  const std::string null_test = R"((?:if\s*\(\s*!\s*dd\s*[)|]|\bdd\s*[!=]=\s*NULL))";
  const RuleSet rules({Rule::make("unchecked-deref", Rule::Kind::Regex,
                                  "^(?:(?!" + null_test + ")[\\s\\S])*?\\bdd->", 3)});
  const RepoSnapshot snap = test::load_fig1();
  const auto spans = slice_functions(snap.files.at("lib/dump_dir.c"), "lib/dump_dir.c");
  std::map<std::string, int> fired;
  for (const auto& s : spans.spans) {
    ComposedInput in;
    in.text = s.body_text;
    fired[s.name] = rule_detect(in, rules, 1).predicted;
  }
  // Manual reading: dd_unlock tests dd->locked without checking dd; dd_opendir
  // dereferences the fresh allocation; all five dereference before any check.
  EXPECT_EQ(fired.at("dd_unlock"), 1);
  EXPECT_EQ(fired.at("dd_close"), 1);
  ComposedInput guarded;
  guarded.text = "void dd_close(struct dump_dir *dd)\n{\n    if (!dd)\n        return;\n    free(dd->dd_dirname);\n}";
  EXPECT_EQ(rule_detect(guarded, rules, 1).predicted, 0);
}

TEST(Rules, BuiltinSetShape) {
  const RuleSet rules = RuleSet::builtin();
  EXPECT_GE(rules.rules().size(), 25u);
  EXPECT_LE(rules.rules().size(), 40u);
  for (const char* name : {"gets", "strcpy", "strcat", "sprintf", "scanf", "system", "popen", "memcpy", "alloca",
                           "tmpnam", "rand"}) {
    const auto it = std::find_if(rules.rules().begin(), rules.rules().end(),
                                 [&](const Rule& r) { return r.kind == Rule::Kind::Call && r.pattern == name; });
    EXPECT_NE(it, rules.rules().end()) << name;
  }
}

TEST(Rules, InvalidRulesAreRejected) {
  for (auto make : {+[] { Rule::make("x", Rule::Kind::Call, "f", 0); }, +[] { Rule::make("x", Rule::Kind::Call, "f", 6); },
                    +[] { Rule::make("x", Rule::Kind::Regex, "(", 3); },
                    +[] { Rule::make("x", Rule::Kind::Call, "", 3); }}) {
    try {
      make();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidRule);
    }
  }
  EXPECT_THROW(RuleSet::from_json(nlohmann::json::parse(R"({"rules":[{"id":"a","kind":"glob","pattern":"x","severity":1}]})")),
               Error);
  EXPECT_THROW(RuleSet::from_json(nlohmann::json::parse(R"({"rules":[]})")), Error);
}

TEST(RuleDetector, ValidatesConfiguration) {
  EXPECT_THROW(RuleDetector("r", gets_only(), 1, 63), Error);
  EXPECT_THROW(RuleDetector("r", gets_only(), 0), Error);
  EXPECT_THROW(RuleDetector("r", RuleSet{}, 1), Error);
}

TEST(RunDetection, OneOutcomePerSampleSortedById) {
  std::vector<FunctionSample> samples{sample("c", "void c(void) { gets(b); }"), sample("a", "void a(void) {}"),
                                      sample("b", "void b(void) {}")};
  RuleDetector det("rules", RuleSet::builtin());
  const auto out = run_detection(samples, {}, {}, det, Strategy::FunctionOnly, 3);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].sample_id, "a");
  EXPECT_EQ(out[1].sample_id, "b");
  EXPECT_EQ(out[2].sample_id, "c");
  EXPECT_EQ(out[2].predicted, 1);
  for (const auto& o : out) {
    EXPECT_EQ(o.detector_id, "rules");
    EXPECT_EQ(o.strategy, Strategy::FunctionOnly);
    EXPECT_FALSE(o.error);
  }
}

TEST(RunDetection, UpperFlipsPredictionWhenVulDependencyCarriesTheCall) {
  const auto s = sample("s", "int parse(char *out) { char line[64]; read_line(line); return out[0] = line[0]; }", 1);
  DependencySet deps;
  deps.sample_id = "s";
  deps.callees.push_back(dep(DepKind::Callee, "read_line", "static int read_line(char *b) { gets(b); return 0; }", true, 1));
  RuleDetector det("rules", gets_only());
  std::map<std::string, DependencySet> dm{{"s", deps}};
  const std::vector<FunctionSample> samples{s};
  const auto f_only = run_detection(samples, dm, {}, det, Strategy::FunctionOnly, 3);
  const auto upper = run_detection(samples, dm, {}, det, Strategy::Upper, 3);
  // Oracle: apply the rule to the two composed texts by hand.
  ComposedInput plain;
  plain.text = s.code;
  ComposedInput with_dep;
  with_dep.text = s.code + "\n" + dep_marker(DepKind::Callee, "read_line") + "\n" + deps.callees[0].code;
  EXPECT_EQ(f_only[0].predicted, rule_detect(plain, gets_only(), 1).predicted);
  EXPECT_EQ(upper[0].predicted, rule_detect(with_dep, gets_only(), 1).predicted);
  EXPECT_EQ(f_only[0].predicted, 0);
  EXPECT_EQ(upper[0].predicted, 1);
}

TEST(RunDetection, MissingDependencySetIsAKeyMismatch) {
  RuleDetector det("rules", gets_only());
  const std::vector<FunctionSample> samples{sample("s", "void f(void) {}")};
  EXPECT_THROW(run_detection(samples, {}, {}, det, Strategy::Upper, 3), Error);
}

// Adding dependency blocks can only add matches.
TEST(RuleDetect, MonotoneInContext) {
  std::mt19937_64 rng(13);
  const char* pieces[] = {"x = 1;", "gets(b);", "memcpy(a, b, n);", "/* strcpy(a, b); */", "puts(\"system(x)\");",
                          "y = f(x);", "char buf[16];", "s.rand();", "alloca(n);", "if (p) q();"};
  const RuleSet rules = RuleSet::builtin();
  for (int round = 0; round < 100; ++round) {
    auto body = [&](std::size_t n) {
      std::string b = "{";
      for (std::size_t i = 0; i < n; ++i) b += std::string(" ") + pieces[rng() % 10];
      return b + " }";
    };
    const auto s = sample("s", "int t(void) " + body(rng() % 4));
    DependencySet deps;
    for (std::size_t i = 0, n = 1 + rng() % 5; i < n; ++i) {
      deps.callees.push_back(dep(DepKind::Callee, "d" + std::to_string(i), "int d(void) " + body(rng() % 4), true, i));
    }
    const auto all = select_context(Strategy::Upper, deps, nullptr, 0);
    for (int threshold = 1; threshold <= 5; ++threshold) {
      int previous = 0;
      for (std::size_t n = 0; n <= all.size(); ++n) {
        const std::vector<const Dependency*> prefix(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
        const int p = rule_detect(compose_input(s, prefix, Strategy::Upper, 2048), rules, threshold).predicted;
        EXPECT_GE(p, previous);
        previous = p;
      }
    }
  }
}

TEST(Strategy, Names) {
  EXPECT_EQ(strategy_from_string("FunctionOnly"), Strategy::FunctionOnly);
  EXPECT_EQ(strategy_from_string("function_only"), Strategy::FunctionOnly);
  EXPECT_EQ(strategy_from_string("upper"), Strategy::Upper);
  EXPECT_EQ(to_string(Strategy::Prediction), "Prediction");
  EXPECT_THROW(strategy_from_string("oracle"), Error);
}
