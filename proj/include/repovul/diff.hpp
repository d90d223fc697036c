#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace repovul {

inline constexpr std::string_view kDevNull = "/dev/null";

enum class LineKind { Context, Removed, Added };

struct HunkLine {
  LineKind kind;
  std::string text;

  bool operator==(const HunkLine&) const = default;
};

struct Hunk {
  int old_start = 0;  // 1-based; for old_len == 0 the line after which text is inserted
  int old_len = 0;
  int new_start = 0;
  int new_len = 0;
  std::string section;  // trailing text of the @@ header, verbatim
  std::vector<HunkLine> lines;

  bool operator==(const Hunk&) const = default;
};

struct FileDiff {
  std::string old_path;  // kDevNull for added files
  std::string new_path;  // kDevNull for deleted files
  std::vector<Hunk> hunks;

  bool is_addition() const { return old_path == kDevNull; }
  bool is_deletion() const { return new_path == kDevNull; }

  bool operator==(const FileDiff&) const = default;
};

struct PatchMeta {
  std::string patch_id;
  std::string cve_id;
  std::vector<std::string> cwe_ids;
  std::string repo_id;
  std::string fix_commit_id;
  std::string parent_commit_id;
  std::int64_t commit_timestamp = 0;  // UTC seconds

  bool operator==(const PatchMeta&) const = default;
};

struct PatchRecord {
  PatchMeta meta;
  std::vector<FileDiff> file_diffs;

  bool operator==(const PatchRecord&) const = default;
};

// Parses a unified diff (plain `diff -u` or git format). Text before the first
// ---/+++ header pair and git extended headers are ignored.
// Throws Error{MalformedDiff} or Error{EmptyDiff}.
PatchRecord parse_patch(std::string_view diff_text, const PatchMeta& meta);

// Serializes back to unified diff with a/ b/ prefixes.
std::string to_unified_diff(const PatchRecord& patch);

// Metadata sidecar: {cve_id, cwe_ids, repo_id, fix_commit_id, parent_commit_id,
// commit_timestamp}. The timestamp is ISO-8601 or integer seconds.
PatchMeta parse_patch_meta(const nlohmann::json& j, std::string patch_id);

// Accepts YYYY-MM-DD[(T| )HH:MM[:SS[.fff]]][Z|(+|-)HH[:]MM]. Throws
// Error{InvalidMetadata}.
std::int64_t parse_iso8601(std::string_view text);
std::string format_iso_date(std::int64_t utc_seconds);

std::string normalize_cwe(std::string_view cwe);

}  // namespace repovul
