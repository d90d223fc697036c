#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "repovul/diff.hpp"
#include "repovul/slicer.hpp"

namespace repovul {

struct RepoSnapshot {
  std::string repo_id;
  std::string commit_id;  // parent of the fix commit
  std::map<std::string, std::string> files;  // repository-relative path -> content
};

struct FunctionSample {
  std::string sample_id;
  std::string code;
  int label = 0;
  std::vector<std::string> cwe_ids;
  std::string patch_id;
  FunctionSpan span;
  std::int64_t commit_timestamp = 0;
};

struct SkipReport {
  struct Item {
    std::string path;
    std::size_t line = 0;
    std::string reason;
  };
  std::vector<Item> items;
  std::vector<std::string> ignored_files;  // changed files that are not C/C++ sources
};

// .c .cc .cpp .cxx .h .hpp
bool is_source_path(std::string_view path);

// Reads every C/C++ source below `root`. Keys use '/' separators.
RepoSnapshot load_snapshot_dir(const std::filesystem::path& root, std::string repo_id,
                               std::string commit_id);

// True when the old side of the hunk touches lines [first, last]. A pure
// insertion (old_len == 0) touches a function when it lands strictly inside it.
bool hunk_touches(const Hunk& hunk, std::size_t first, std::size_t last);

// Same rule over every hunk of every FileDiff whose old_path is `path`.
bool patch_touches(const PatchRecord& patch, std::string_view path, std::size_t first,
                   std::size_t last);

std::string make_sample_id(std::string_view patch_id, std::string_view path,
                           std::size_t start_line, std::string_view name);

// Slices every changed C/C++ file at the pre-patch snapshot and labels each
// function 1 when a hunk touches it, 0 otherwise. Output is ordered by
// (path, start_line). Throws Error{MissingFile}.
std::vector<FunctionSample> label_functions(const PatchRecord& patch, const RepoSnapshot& snapshot,
                                            SkipReport* skips = nullptr);

// Keeps the first sample of every distinct code text.
std::vector<FunctionSample> dedup_samples(std::vector<FunctionSample> samples);

}  // namespace repovul
