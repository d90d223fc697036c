#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "repovul/corpus.hpp"
#include "repovul/depgraph.hpp"
#include "repovul/error.hpp"
#include "support.hpp"

using namespace repovul;

namespace {

std::set<std::string> dep_names(const std::vector<Dependency>& deps) {
  std::set<std::string> out;
  for (const auto& d : deps) out.insert(d.name);
  return out;
}

const FunctionSample& by_name(const std::vector<FunctionSample>& samples, const std::string& name) {
  const auto it = std::find_if(samples.begin(), samples.end(), [&](const auto& s) { return s.span.name == name; });
  if (it == samples.end()) throw std::runtime_error("no sample " + name);
  return *it;
}

// Sample for a span of an arbitrary snapshot file (not tied to a patch).
FunctionSample sample_for(const FunctionSpan& span) {
  FunctionSample s;
  s.sample_id = make_sample_id("t", span.path, span.start_line, span.name);
  s.code = span.body_text;
  s.span = span;
  s.patch_id = "t";
  return s;
}

struct Fig1 {
  RepoSnapshot snap = test::load_fig1();
  PatchRecord patch = test::load_fig1_patch();
  std::vector<FunctionSample> samples = label_functions(patch, snap);
  FunctionIndex index = index_repo(snap);
  DependencySet deps(const std::string& name) const {
    return label_vul_dependencies(extract_dependencies(by_name(samples, name), index), patch, index);
  }
};

}  // namespace

TEST(IndexRepo, DirectConstruction) {
  const RepoSnapshot snap{"r", "c", {{"a.c", "int f(void) { return 0; }\nint g(void)\n{\n    return f();\n}\n"}}};
  const FunctionIndex index = index_repo(snap);
  EXPECT_EQ(index.by_name.count("f"), 1u);
  EXPECT_EQ(index.by_name.count("g"), 1u);
  ASSERT_EQ(index.call_sites.count("f"), 1u);
  ASSERT_EQ(index.call_sites.at("f").size(), 1u);
  EXPECT_EQ(index.call_sites.at("f")[0].line, 4u);
  const FunctionSpan* g = index.enclosing("a.c", index.call_sites.at("f")[0].offset);
  ASSERT_NE(g, nullptr);
  EXPECT_EQ(g->name, "g");
}

TEST(IndexRepo, CommentedCallIsNotACallSite) {
  const RepoSnapshot snap{"r", "c", {{"a.c", "int f(void) { return 0; }\nint g(void) { /* f() */ return \"f()\"[0]; }\n"}}};
  EXPECT_EQ(index_repo(snap).call_sites.count("f"), 0u);
}

TEST(IndexRepo, KeywordsAndMemberCallsAreNotCallSites) {
  const RepoSnapshot snap{"r", "c",
                          {{"a.c", "int f(int x) { if (x) return sizeof(x); while (x) {} return s.f(x) + p->f(x); }\n"}}};
  const FunctionIndex index = index_repo(snap);
  EXPECT_EQ(index.call_sites.count("if"), 0u);
  EXPECT_EQ(index.call_sites.count("sizeof"), 0u);
  EXPECT_EQ(index.call_sites.count("while"), 0u);
  EXPECT_EQ(index.call_sites.count("f"), 0u);
}

TEST(IndexRepo, NameCollisionListsBothLocationsSorted) {
  const RepoSnapshot snap{"r",
                          "c",
                          {{"net/init.c", "static int init(void) { return 1; }\n"},
                           {"core/init.c", "\n\nstatic int init(void) { return 2; }\n"},
                           {"main.c", "int main(void) { return init(); }\n"}}};
  const FunctionIndex index = index_repo(snap);
  EXPECT_EQ(index.by_name.at("init"),
            (std::vector<Location>{{"core/init.c", 3}, {"net/init.c", 1}}));
  // Ambiguous names link to every definition.
  const FunctionSpan* main_span = index.find({"main.c", 1});
  ASSERT_NE(main_span, nullptr);
  const auto deps = extract_dependencies(sample_for(*main_span), index);
  ASSERT_EQ(deps.callees.size(), 2u);
  EXPECT_EQ(deps.callees[0].path, "core/init.c");
  EXPECT_EQ(deps.callees[1].path, "net/init.c");
}

TEST(ExtractDependencies, Fig1CalleesAndCallers) {
  const Fig1 f;
  EXPECT_TRUE(dep_names(f.deps("dd_close").callees).count("dd_unlock"));
  const auto callers = dep_names(f.deps("dd_unlock").callers);
  EXPECT_TRUE(callers.count("dd_close"));
  EXPECT_TRUE(callers.count("dd_delete"));
  // Callers are gathered repository-wide: main.c calls dd_close.
  EXPECT_TRUE(dep_names(f.deps("dd_close").callers).count("main"));
}

TEST(ExtractDependencies, LibraryCallsOnlyGiveNoCallees) {
  const RepoSnapshot snap{"r", "c",
                          {{"a.c", "void h(char *d, const char *s) { printf(\"%s\", s); memcpy(d, s, 4); }\n"
                                   "void k(void) { h(0, 0); }\n"}}};
  const FunctionIndex index = index_repo(snap);
  const auto deps = extract_dependencies(sample_for(*index.find({"a.c", 1})), index);
  EXPECT_EQ(deps.callees.size(), 0u);
  EXPECT_EQ(dep_names(deps.callers), (std::set<std::string>{"k"}));
}

TEST(ExtractDependencies, RecursionExcludesSelf) {
  const RepoSnapshot snap{"r", "c",
                          {{"a.c",
                            "int mul(int a, int b) { return a * b; }\n"
                            "int fact(int n) { return n <= 1 ? 1 : mul(n, fact(n - 1)); }\n"}}};
  const FunctionIndex index = index_repo(snap);
  const auto deps = extract_dependencies(sample_for(*index.find({"a.c", 2})), index);
  EXPECT_EQ(dep_names(deps.callees), (std::set<std::string>{"mul"}));
  EXPECT_TRUE(deps.callers.empty());
}

TEST(ExtractDependencies, UnknownSampleThrows) {
  const Fig1 f;
  FunctionSample bogus = f.samples[0];
  bogus.span.start_line = 999;
  try {
    extract_dependencies(bogus, f.index);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSample);
  }
}

TEST(ExtractDependencies, DeterministicAndDeduplicated) {
  const Fig1 f;
  for (const auto& s : f.samples) {
    const auto a = extract_dependencies(s, f.index);
    EXPECT_EQ(a, extract_dependencies(s, f.index));
    for (const auto* list : {&a.callees, &a.callers}) {
      std::set<Location> seen;
      for (const auto& d : *list) {
        EXPECT_TRUE(seen.insert(d.location()).second);
        EXPECT_NE(d.location(), (Location{s.span.path, s.span.start_line}));
      }
    }
  }
}

TEST(LabelVulDependencies, Fig1CallersOfUnlockAreVulRelated) {
  const Fig1 f;
  for (const auto& d : f.deps("dd_unlock").callers) {
    if (d.name == "dd_close" || d.name == "dd_delete") EXPECT_TRUE(d.vul_related) << d.name;
  }
  for (const auto& d : f.deps("dd_close").callees) EXPECT_FALSE(d.vul_related) << d.name;
}

TEST(LabelVulDependencies, FlagsMatchCorpusLabels) {
  const Fig1 f;
  std::map<Location, int> label;
  for (const auto& s : f.samples) label[{s.span.path, s.span.start_line}] = s.label;
  for (const auto& s : f.samples) {
    const auto deps = f.deps(s.span.name);
    for (const auto* list : {&deps.callees, &deps.callers}) {
      for (const auto& d : *list) {
        const auto it = label.find(d.location());
        // Dependencies outside changed files are never touched.
        EXPECT_EQ(d.vul_related, it != label.end() && it->second == 1) << d.name;
      }
    }
  }
}

TEST(LabelVulDependencies, TwoOfFiveTouched) {
  // Target t calls five one-line helpers on lines 1..5; hunks touch lines 2 and 4-5 of c2 and c4 only.
  const std::string text =
      "int c1(void) { return 1; }\n"
      "int c2(void) { return 2; }\n"
      "int c3(void) { return 3; }\n"
      "int c4(void) { return 4; }\n"
      "int c5(void) { return 5; }\n"
      "int t(void) { return c1() + c2() + c3() + c4() + c5(); }\n";
  const RepoSnapshot snap{"r", "c", {{"a.c", text}}};
  const FunctionIndex index = index_repo(snap);
  PatchRecord patch;
  patch.meta = test::meta();
  Hunk h1;
  h1.old_start = 2;
  h1.old_len = 1;
  Hunk h2;
  h2.old_start = 4;
  h2.old_len = 1;
  patch.file_diffs.push_back(FileDiff{"a.c", "a.c", {h1, h2}});
  const auto deps = label_vul_dependencies(extract_dependencies(sample_for(*index.find({"a.c", 6})), index), patch, index);
  // Oracle: interval intersection of [2,2] and [4,4] with each one-line helper span.
  std::set<std::string> flagged;
  for (const auto& d : deps.callees) {
    const bool expect = (d.start_line == 2 || d.start_line == 4);
    EXPECT_EQ(d.vul_related, expect) << d.name;
    if (d.vul_related) flagged.insert(d.name);
  }
  EXPECT_EQ(flagged, (std::set<std::string>{"c2", "c4"}));
  EXPECT_EQ(deps.vul_count(), 2u);
}

// Random snapshots of up to 50 functions; adjacency is computed independently
// by scanning each generated body for the names it was built to call.
TEST(Duality, CalleesAndCallersAgreeWithBruteForceAdjacency) {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 40; ++round) {
    const std::size_t n = 2 + rng() % 49;
    std::vector<std::set<std::size_t>> calls(n);
    std::map<std::string, std::string> files;
    std::vector<std::string> file_text(3);
    for (std::size_t i = 0; i < n; ++i) {
      std::string body = "int fn" + std::to_string(i) + "(int x)\n{\n    int r = x;\n";
      const std::size_t c = rng() % 4;
      for (std::size_t j = 0; j < c; ++j) {
        const std::size_t target = rng() % n;
        calls[i].insert(target);
        body += "    r += fn" + std::to_string(target) + "(r);\n";
      }
      if (rng() % 3 == 0) body += "    /* fn0(1) */ printf(\"fn1(\");\n";
      body += "    return r;\n}\n\n";
      file_text[i % 3] += body;
    }
    for (std::size_t f = 0; f < 3; ++f) {
      if (!file_text[f].empty()) files["f" + std::to_string(f) + ".c"] = file_text[f];
    }
    const FunctionIndex index = index_repo({"r", "c", files});
    std::map<std::string, FunctionSample> samples;
    for (const auto& [path, spans] : index.by_file) {
      for (const auto& span : spans) samples[span.name] = sample_for(span);
    }
    ASSERT_EQ(samples.size(), n);
    std::map<std::string, DependencySet> deps;
    for (const auto& [name, s] : samples) deps[name] = extract_dependencies(s, index);
    for (std::size_t x = 0; x < n; ++x) {
      const std::string xn = "fn" + std::to_string(x);
      std::set<std::string> expected_callees, expected_callers;
      for (std::size_t y : calls[x]) {
        if (y != x) expected_callees.insert("fn" + std::to_string(y));
      }
      for (std::size_t y = 0; y < n; ++y) {
        if (y != x && calls[y].count(x)) expected_callers.insert("fn" + std::to_string(y));
      }
      EXPECT_EQ(dep_names(deps[xn].callees), expected_callees);
      EXPECT_EQ(dep_names(deps[xn].callers), expected_callers);
      // Duality stated directly: X in callers(Y) iff Y in callees(X).
      for (std::size_t y = 0; y < n; ++y) {
        const std::string yn = "fn" + std::to_string(y);
        EXPECT_EQ(dep_names(deps[yn].callers).count(xn), dep_names(deps[xn].callees).count(yn));
      }
    }
  }
}

// dump_dir fixture call edges read off the fixture sources by hand.
TEST(Duality, Fig1AgreesWithHandAdjacencyMatrix) {
  const Fig1 f;
  const std::vector<std::string> names{"dd_lock", "dd_unlock", "dd_opendir", "dd_close", "dd_delete", "usage", "main"};
  const std::set<std::pair<std::string, std::string>> edges{
      {"dd_opendir", "dd_lock"}, {"dd_close", "dd_unlock"}, {"dd_delete", "dd_unlock"}, {"main", "usage"},
      {"main", "dd_opendir"},    {"main", "dd_delete"},     {"main", "dd_close"}};
  std::map<std::string, DependencySet> deps;
  for (const auto& [path, spans] : f.index.by_file) {
    for (const auto& span : spans) deps[span.name] = extract_dependencies(sample_for(span), f.index);
  }
  ASSERT_EQ(deps.size(), names.size());
  for (const auto& x : names) {
    for (const auto& y : names) {
      const bool edge = edges.count({x, y}) > 0;
      EXPECT_EQ(dep_names(deps.at(x).callees).count(y) > 0, edge) << x << " -> " << y;
      EXPECT_EQ(dep_names(deps.at(y).callers).count(x) > 0, edge) << y << " <- " << x;
    }
  }
}
