#include <gtest/gtest.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <regex>
#include <sstream>

#include "repovul/diff.hpp"
#include "repovul/error.hpp"
#include "support.hpp"

using namespace repovul;
using repovul::test::meta;

namespace {

ErrorCode code_of(const std::string& diff) {
  try {
    parse_patch(diff, meta());
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for:\n" << diff;
  return ErrorCode::Io;
}

// Minimal independent reader: hunk start lines per file, counted with a regex.
std::vector<std::vector<int>> recount_hunk_starts(const std::string& diff) {
  std::vector<std::vector<int>> files;
  std::istringstream in(diff);
  std::string line;
  const std::regex hunk(R"(^@@ -(\d+)(,\d+)? \+\d+(,\d+)? @@)");
  while (std::getline(in, line)) {
    if (line.rfind("+++ ", 0) == 0) files.emplace_back();
    std::smatch m;
    if (std::regex_search(line, m, hunk)) files.back().push_back(std::stoi(m[1]));
  }
  return files;
}

const char* kTwoFiles =
    "diff --git a/src/a.c b/src/a.c\n"
    "index 111..222 100644\n"
    "--- a/src/a.c\n"
    "+++ b/src/a.c\n"
    "@@ -2,3 +2,3 @@ int f(void)\n"
    " {\n"
    "-  return 1;\n"
    "+  return 2;\n"
    " }\n"
    "@@ -10,2 +10,3 @@\n"
    " int g;\n"
    "+int h;\n"
    " int i;\n"
    "--- a/include/b.h\n"
    "+++ b/include/b.h\n"
    "@@ -5 +5 @@\n"
    "-#define X 1\n"
    "+#define X 2\n";

}  // namespace

TEST(ParsePatch, SingleHunkHeaderFieldsCopied) {
  const std::string diff =
      "--- a/x.c\n+++ b/x.c\n"
      "@@ -3,2 +3,3 @@\n"
      "-old\n"
      " ctx\n"
      "+new1\n"
      "+new2\n";
  const PatchRecord p = parse_patch(diff, meta("id1"));
  ASSERT_EQ(p.file_diffs.size(), 1u);
  ASSERT_EQ(p.file_diffs[0].hunks.size(), 1u);
  const Hunk& h = p.file_diffs[0].hunks[0];
  EXPECT_EQ(h.old_start, 3);
  EXPECT_EQ(h.old_len, 2);
  EXPECT_EQ(h.new_start, 3);
  EXPECT_EQ(h.new_len, 3);
  EXPECT_EQ(p.file_diffs[0].old_path, "x.c");
  EXPECT_EQ(p.meta, meta("id1"));
}

TEST(ParsePatch, EmptyTextIsEmptyDiff) { EXPECT_EQ(code_of(""), ErrorCode::EmptyDiff); }

TEST(ParsePatch, TwoFilesAgreeWithIndependentRecount) {
  const PatchRecord p = parse_patch(kTwoFiles, meta());
  const auto oracle = recount_hunk_starts(kTwoFiles);
  ASSERT_EQ(p.file_diffs.size(), oracle.size());
  std::size_t total = 0;
  for (std::size_t f = 0; f < oracle.size(); ++f) {
    ASSERT_EQ(p.file_diffs[f].hunks.size(), oracle[f].size());
    for (std::size_t h = 0; h < oracle[f].size(); ++h) EXPECT_EQ(p.file_diffs[f].hunks[h].old_start, oracle[f][h]);
    total += oracle[f].size();
  }
  EXPECT_EQ(total, 3u);
  EXPECT_EQ(p.file_diffs[1].old_path, "include/b.h");
  EXPECT_EQ(p.file_diffs[1].hunks[0].old_len, 1);
  EXPECT_EQ(p.file_diffs[0].hunks[0].section, " int f(void)");
}

TEST(ParsePatch, OldLenCountsRemovedAndContextLines) {
  const PatchRecord p = parse_patch(kTwoFiles, meta());
  for (const auto& f : p.file_diffs) {
    for (const auto& h : f.hunks) {
      const auto old_side = std::count_if(h.lines.begin(), h.lines.end(),
                                          [](const HunkLine& l) { return l.kind != LineKind::Added; });
      const auto new_side = std::count_if(h.lines.begin(), h.lines.end(),
                                          [](const HunkLine& l) { return l.kind != LineKind::Removed; });
      EXPECT_EQ(old_side, h.old_len);
      EXPECT_EQ(new_side, h.new_len);
    }
  }
}

TEST(ParsePatch, RoundTripIsIdentity) {
  const PatchRecord p = parse_patch(kTwoFiles, meta());
  const PatchRecord again = parse_patch(to_unified_diff(p), meta());
  EXPECT_EQ(p, again);
}

TEST(ParsePatch, AddedAndDeletedFiles) {
  const std::string diff =
      "--- /dev/null\n+++ b/new.c\n@@ -0,0 +1,2 @@\n+int a;\n+int b;\n"
      "--- a/gone.c\n+++ /dev/null\n@@ -1 +0,0 @@\n-int c;\n";
  const PatchRecord p = parse_patch(diff, meta());
  ASSERT_EQ(p.file_diffs.size(), 2u);
  EXPECT_TRUE(p.file_diffs[0].is_addition());
  EXPECT_TRUE(p.file_diffs[1].is_deletion());
  EXPECT_EQ(p.file_diffs[1].old_path, "gone.c");
}

TEST(ParsePatch, TimestampSuffixOnHeaderIsStripped) {
  const std::string diff =
      "--- lib/x.c\t2015-05-11 09:30:00.000000000 +0200\n"
      "+++ lib/x.c\t2015-05-11 09:31:00.000000000 +0200\n"
      "@@ -1 +1 @@\n-a\n+b\n";
  EXPECT_EQ(parse_patch(diff, meta()).file_diffs[0].old_path, "lib/x.c");
}

TEST(ParsePatch, NoNewlineMarkerIgnored) {
  const std::string diff = "--- a/x.c\n+++ b/x.c\n@@ -1 +1 @@\n-a\n\\ No newline at end of file\n+b\n";
  EXPECT_EQ(parse_patch(diff, meta()).file_diffs[0].hunks[0].lines.size(), 2u);
}

TEST(ParsePatch, MalformedInputs) {
  // Count mismatch: header says 2 old lines, body has 1.
  EXPECT_EQ(code_of("--- a/x\n+++ b/x\n@@ -1,2 +1,1 @@\n-a\n"), ErrorCode::MalformedDiff);
  // Extra body line after the counts are satisfied.
  EXPECT_EQ(code_of("--- a/x\n+++ b/x\n@@ -1 +1 @@\n-a\n+b\n+c\n"), ErrorCode::MalformedDiff);
  // Garbage hunk header.
  EXPECT_EQ(code_of("--- a/x\n+++ b/x\n@@ -x +1 @@\n-a\n+b\n"), ErrorCode::MalformedDiff);
  // --- without +++.
  EXPECT_EQ(code_of("--- a/x\n@@ -1 +1 @@\n-a\n+b\n"), ErrorCode::MalformedDiff);
  // Overlapping hunks on the old side.
  EXPECT_EQ(code_of("--- a/x\n+++ b/x\n@@ -1,2 +1,2 @@\n a\n-b\n+c\n@@ -2 +2 @@\n-b\n+d\n"),
            ErrorCode::MalformedDiff);
  // File header without hunks.
  EXPECT_EQ(code_of("--- a/x\n+++ b/x\n"), ErrorCode::MalformedDiff);
  // No headers at all.
  EXPECT_EQ(code_of("just some text\n"), ErrorCode::EmptyDiff);
}

TEST(PatchMeta, ParsesSidecar) {
  const auto j = nlohmann::json::parse(R"({"cve_id":"CVE-2015-3150","cwe_ids":["cwe-20", "79"],
      "repo_id":"abrt/libreport","fix_commit_id":"f","parent_commit_id":"p",
      "commit_timestamp":"2018-03-21T00:00:00Z"})");
  const PatchMeta m = parse_patch_meta(j, "x");
  EXPECT_EQ(m.patch_id, "x");
  EXPECT_EQ(m.cwe_ids, (std::vector<std::string>{"CWE-20", "CWE-79"}));
  EXPECT_EQ(m.commit_timestamp, 1521590400);
}

TEST(PatchMeta, RejectsNonPositiveTimestamp) {
  const auto j = nlohmann::json::parse(R"({"cve_id":"c","cwe_ids":[],"repo_id":"r",
      "fix_commit_id":"f","parent_commit_id":"p","commit_timestamp":0})");
  EXPECT_THROW(parse_patch_meta(j, "x"), Error);
}

TEST(Iso8601, ParseAndFormat) {
  EXPECT_EQ(parse_iso8601("1970-01-01"), 0);
  EXPECT_EQ(parse_iso8601("2000-03-01T00:00:00Z"), 951868800);
  EXPECT_EQ(parse_iso8601("2022-07-21T02:00:00+02:00"), parse_iso8601("2022-07-21T00:00:00Z"));
  EXPECT_EQ(format_iso_date(parse_iso8601("2018-03-21T23:59:59Z")), "2018-03-21");
  EXPECT_THROW(parse_iso8601("2018-13-01"), Error);
  EXPECT_THROW(parse_iso8601("yesterday"), Error);
}
