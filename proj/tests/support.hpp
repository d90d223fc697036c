#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repovul/corpus.hpp"
#include "repovul/depgraph.hpp"
#include "repovul/retrieval.hpp"
#include "repovul/diff.hpp"

namespace repovul::test {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(REPOVUL_FIXTURES) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("repovul_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline PatchMeta meta(const std::string& id = "p", std::int64_t ts = 1600000000) {
  PatchMeta m;
  m.patch_id = id;
  m.cve_id = "CVE-2000-0001";
  m.cwe_ids = {"CWE-20"};
  m.repo_id = "r";
  m.fix_commit_id = "f";
  m.parent_commit_id = "p0";
  m.commit_timestamp = ts;
  return m;
}

inline RepoSnapshot load_fig1() {
  return load_snapshot_dir(fixture("fig1/snapshots/fig1"), "abrt/libreport", "a1b2c3d");
}

inline PatchRecord load_fig1_patch() {
  auto m = meta("fig1");
  m.cwe_ids = {"CWE-20"};
  return parse_patch(slurp(fixture("fig1/patches/fig1.diff")), m);
}

// 50 samples with fixed candidate sets and rankings (retrieval50.json) plus
// macro Pre@K / Rec@K recomputed with exact fractions by its generator.
struct RankedFixture {
  std::vector<std::size_t> ks;
  std::vector<DependencySet> deps;
  std::vector<RetrievalResult> results;
  nlohmann::json expected;
};

inline RankedFixture load_retrieval50() {
  const auto j = nlohmann::json::parse(slurp(fixture("retrieval50.json")));
  RankedFixture f;
  f.ks = j.at("ks").get<std::vector<std::size_t>>();
  f.expected = j.at("expected");
  for (const auto& s : j.at("samples")) {
    DependencySet d;
    d.sample_id = s.at("sample_id").get<std::string>();
    std::vector<Dependency> all;
    for (const auto& c : s.at("candidates")) {
      Dependency dep;
      dep.kind = c.at("kind") == "callee" ? DepKind::Callee : DepKind::Caller;
      dep.name = c.at("name").get<std::string>();
      dep.path = c.at("path").get<std::string>();
      dep.start_line = c.at("start_line").get<std::size_t>();
      dep.vul_related = c.at("vul_related").get<bool>();
      all.push_back(dep);
      (dep.kind == DepKind::Callee ? d.callees : d.callers).push_back(dep);
    }
    RetrievalResult r;
    r.sample_id = d.sample_id;
    r.k = 10;
    r.no_candidates = all.empty();
    r.trials.emplace_back();
    std::size_t rank = 1;
    for (const auto& idx : s.at("ranking")) {
      const Dependency& dep = all.at(idx.get<std::size_t>());
      r.trials[0].push_back({dep.kind, dep.name, dep.path, dep.start_line, 1.0 / static_cast<double>(rank), rank});
      ++rank;
    }
    f.deps.push_back(std::move(d));
    f.results.push_back(std::move(r));
  }
  return f;
}

}  // namespace repovul::test
