#pragma once

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "repovul/corpus.hpp"

namespace repovul {

struct Location {
  std::string path;
  std::size_t start_line = 0;

  auto operator<=>(const Location&) const = default;
};

struct CallSite {
  std::string path;
  std::size_t line = 0;
  std::size_t offset = 0;

  bool operator==(const CallSite&) const = default;
};

// Repository-wide, name-keyed view of every function definition in a snapshot.
struct FunctionIndex {
  std::map<std::string, std::vector<FunctionSpan>> by_file;  // spans sorted by start_line
  std::map<std::string, std::vector<Location>> by_name;      // sorted by (path, start_line)
  std::map<std::string, std::vector<CallSite>> call_sites;   // sorted by (path, offset)
  std::map<Location, std::vector<std::string>> calls_by_function;  // sorted, unique names
  std::vector<SkipReport::Item> skipped;

  const FunctionSpan* find(const Location& loc) const;
  const FunctionSpan* enclosing(std::string_view path, std::size_t offset) const;
};

FunctionIndex index_repo(const RepoSnapshot& snapshot);

enum class DepKind { Callee, Caller };

std::string_view to_string(DepKind kind);
DepKind dep_kind_from_string(std::string_view s);

struct Dependency {
  DepKind kind = DepKind::Callee;
  std::string name;
  std::string code;
  std::string path;
  std::size_t start_line = 0;
  bool vul_related = false;

  Location location() const { return {path, start_line}; }
  bool operator==(const Dependency&) const = default;
};

struct DependencySet {
  std::string sample_id;
  std::vector<Dependency> callees;  // m, ordered by location
  std::vector<Dependency> callers;  // n, ordered by location

  std::size_t size() const { return callees.size() + callers.size(); }
  std::size_t vul_count() const;
  bool operator==(const DependencySet&) const = default;
};

// Direct callees and callers of the sample, resolved by name against the
// index. Throws Error{UnknownSample} when the sample's span is not indexed.
DependencySet extract_dependencies(const FunctionSample& sample, const FunctionIndex& index);

// Marks each dependency whose span is touched by the patch (same rule as
// sample labeling).
DependencySet label_vul_dependencies(DependencySet deps, const PatchRecord& patch,
                                     const FunctionIndex& index);

}  // namespace repovul
