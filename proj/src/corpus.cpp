#include "repovul/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "repovul/error.hpp"
#include "repovul/hash.hpp"

namespace repovul {

namespace fs = std::filesystem;

bool is_source_path(std::string_view path) {
  const auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return false;
  const std::string_view ext = path.substr(dot);
  return ext == ".c" || ext == ".cc" || ext == ".cpp" || ext == ".cxx" || ext == ".h" ||
         ext == ".hpp";
}

RepoSnapshot load_snapshot_dir(const fs::path& root, std::string repo_id, std::string commit_id) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::MissingFile, "snapshot directory not found: " + root.string());
  }
  RepoSnapshot snap{std::move(repo_id), std::move(commit_id), {}};
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), root).generic_string();
    if (!is_source_path(rel)) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    snap.files.emplace(rel, buf.str());
  }
  return snap;
}

bool hunk_touches(const Hunk& hunk, std::size_t first, std::size_t last) {
  const auto start = static_cast<std::size_t>(hunk.old_start);
  if (hunk.old_len > 0) {
    const std::size_t end = start + static_cast<std::size_t>(hunk.old_len) - 1;
    return start <= last && first <= end;
  }
  return first <= start && start < last;
}

bool patch_touches(const PatchRecord& patch, std::string_view path, std::size_t first,
                   std::size_t last) {
  for (const FileDiff& fd : patch.file_diffs) {
    if (fd.old_path != path) continue;
    for (const Hunk& h : fd.hunks) {
      if (hunk_touches(h, first, last)) return true;
    }
  }
  return false;
}

std::string make_sample_id(std::string_view patch_id, std::string_view path,
                           std::size_t start_line, std::string_view name) {
  return Fnv1a()
      .field(patch_id)
      .field(path)
      .field(std::to_string(start_line))
      .field(name)
      .hex();
}

std::vector<FunctionSample> label_functions(const PatchRecord& patch, const RepoSnapshot& snapshot,
                                            SkipReport* skips) {
  std::set<std::string> paths;
  for (const FileDiff& fd : patch.file_diffs) {
    if (fd.is_addition()) continue;
    if (!is_source_path(fd.old_path)) {
      if (skips) skips->ignored_files.push_back(fd.old_path);
      continue;
    }
    if (!snapshot.files.count(fd.old_path)) {
      throw Error(ErrorCode::MissingFile, patch.meta.patch_id + ": " + fd.old_path +
                                              " not in snapshot " + snapshot.commit_id);
    }
    paths.insert(fd.old_path);
  }
  std::vector<FunctionSample> samples;
  for (const std::string& path : paths) {
    SliceResult sliced = slice_functions(snapshot.files.at(path), path);
    if (skips) {
      for (const SkipEntry& s : sliced.skipped) skips->items.push_back({path, s.line, s.reason});
    }
    for (FunctionSpan& span : sliced.spans) {
      FunctionSample s;
      s.sample_id = make_sample_id(patch.meta.patch_id, path, span.start_line, span.name);
      s.code = span.body_text;
      s.label = patch_touches(patch, path, span.start_line, span.end_line) ? 1 : 0;
      s.cwe_ids = patch.meta.cwe_ids;
      s.patch_id = patch.meta.patch_id;
      s.commit_timestamp = patch.meta.commit_timestamp;
      s.span = std::move(span);
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

std::vector<FunctionSample> dedup_samples(std::vector<FunctionSample> samples) {
  std::unordered_set<std::string> seen;
  std::vector<FunctionSample> out;
  out.reserve(samples.size());
  for (auto& s : samples) {
    if (seen.insert(s.code).second) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace repovul
