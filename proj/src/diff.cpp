#include "repovul/diff.hpp"

#include <charconv>
#include <chrono>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "repovul/error.hpp"

namespace repovul {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// "--- a/foo.c\t2020-01-01 ..." -> "foo.c"
std::string header_path(std::string_view line, std::string_view strip_prefix) {
  std::string_view path = line.substr(4);
  if (const auto tab = path.find('\t'); tab != std::string_view::npos) path = path.substr(0, tab);
  while (!path.empty() && (path.back() == '\r' || path.back() == ' ')) path.remove_suffix(1);
  if (path == kDevNull) return std::string(kDevNull);
  if (starts_with(path, strip_prefix)) path.remove_prefix(strip_prefix.size());
  return std::string(path);
}

bool parse_int(std::string_view& s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr == s.data()) return false;
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return true;
}

bool parse_range(std::string_view& s, char sign, int& start, int& len) {
  if (s.empty() || s.front() != sign) return false;
  s.remove_prefix(1);
  if (!parse_int(s, start)) return false;
  len = 1;
  if (!s.empty() && s.front() == ',') {
    s.remove_prefix(1);
    if (!parse_int(s, len)) return false;
  }
  return start >= 0 && len >= 0;
}

Hunk parse_hunk_header(std::string_view line, const std::string& path) {
  Hunk h;
  std::string_view s = line.substr(2);
  auto fail = [&] {
    return Error(ErrorCode::MalformedDiff, "bad hunk header in " + path + ": " + std::string(line));
  };
  if (s.empty() || s.front() != ' ') throw fail();
  s.remove_prefix(1);
  if (!parse_range(s, '-', h.old_start, h.old_len)) throw fail();
  if (s.empty() || s.front() != ' ') throw fail();
  s.remove_prefix(1);
  if (!parse_range(s, '+', h.new_start, h.new_len)) throw fail();
  if (!starts_with(s, " @@")) throw fail();
  s.remove_prefix(3);
  h.section = std::string(s);
  return h;
}

bool is_header_pair(const std::vector<std::string_view>& lines, std::size_t i) {
  return i + 1 < lines.size() && starts_with(lines[i], "--- ") && starts_with(lines[i + 1], "+++ ");
}

}  // namespace

PatchRecord parse_patch(std::string_view diff_text, const PatchMeta& meta) {
  PatchRecord record;
  record.meta = meta;
  const auto lines = split_lines(diff_text);
  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string_view line = lines[i];
    if (line == "-- ") break;  // format-patch signature
    if (is_header_pair(lines, i)) {
      FileDiff fd;
      fd.old_path = header_path(lines[i], "a/");
      fd.new_path = header_path(lines[i + 1], "b/");
      i += 2;
      while (i < lines.size() && starts_with(lines[i], "@@")) {
        Hunk h = parse_hunk_header(lines[i], fd.old_path);
        ++i;
        int old_left = h.old_len;
        int new_left = h.new_len;
        while (old_left > 0 || new_left > 0) {
          if (i >= lines.size()) {
            throw Error(ErrorCode::MalformedDiff, "truncated hunk in " + fd.old_path);
          }
          const std::string_view body = lines[i];
          ++i;
          if (starts_with(body, "\\")) continue;
          const char tag = body.empty() ? ' ' : body.front();
          const std::string text(body.empty() ? body : body.substr(1));
          switch (tag) {
            case ' ':
              --old_left;
              --new_left;
              h.lines.push_back({LineKind::Context, text});
              break;
            case '-':
              --old_left;
              h.lines.push_back({LineKind::Removed, text});
              break;
            case '+':
              --new_left;
              h.lines.push_back({LineKind::Added, text});
              break;
            default:
              throw Error(ErrorCode::MalformedDiff,
                          "unexpected line in hunk of " + fd.old_path + ": " + std::string(body));
          }
          if (old_left < 0 || new_left < 0) {
            throw Error(ErrorCode::MalformedDiff, "hunk line counts disagree with header in " +
                                                      fd.old_path);
          }
        }
        while (i < lines.size() && starts_with(lines[i], "\\")) ++i;
        if (!fd.hunks.empty()) {
          const Hunk& prev = fd.hunks.back();
          if (h.old_start < prev.old_start + prev.old_len) {
            throw Error(ErrorCode::MalformedDiff, "overlapping or unsorted hunks in " + fd.old_path);
          }
        }
        fd.hunks.push_back(std::move(h));
      }
      if (fd.hunks.empty()) {
        throw Error(ErrorCode::MalformedDiff, "file header without hunks: " + fd.old_path);
      }
      // Anything diff-like directly after the last hunk means the header counts were short.
      if (i < lines.size() && !is_header_pair(lines, i) && lines[i] != "-- " &&
          (starts_with(lines[i], "+") || starts_with(lines[i], "-") ||
           starts_with(lines[i], " "))) {
        throw Error(ErrorCode::MalformedDiff,
                    "hunk line counts disagree with header in " + fd.old_path);
      }
      record.file_diffs.push_back(std::move(fd));
      continue;
    }
    if (starts_with(line, "@@ ")) {
      throw Error(ErrorCode::MalformedDiff, "hunk outside of a file header");
    }
    ++i;
  }
  if (record.file_diffs.empty()) {
    throw Error(ErrorCode::EmptyDiff, "no hunks in patch " + meta.patch_id);
  }
  return record;
}

std::string to_unified_diff(const PatchRecord& patch) {
  std::ostringstream out;
  for (const FileDiff& fd : patch.file_diffs) {
    out << "--- " << (fd.is_addition() ? std::string(kDevNull) : "a/" + fd.old_path) << '\n';
    out << "+++ " << (fd.is_deletion() ? std::string(kDevNull) : "b/" + fd.new_path) << '\n';
    for (const Hunk& h : fd.hunks) {
      out << "@@ -" << h.old_start << ',' << h.old_len << " +" << h.new_start << ','
          << h.new_len << " @@" << h.section << '\n';
      for (const HunkLine& l : h.lines) {
        const char tag = l.kind == LineKind::Context ? ' ' : l.kind == LineKind::Removed ? '-' : '+';
        out << tag << l.text << '\n';
      }
    }
  }
  return out.str();
}

std::string normalize_cwe(std::string_view cwe) {
  std::string s(cwe);
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (!s.empty() && std::isdigit(static_cast<unsigned char>(s.front()))) return "CWE-" + s;
  return s;
}

PatchMeta parse_patch_meta(const nlohmann::json& j, std::string patch_id) {
  PatchMeta meta;
  meta.patch_id = std::move(patch_id);
  try {
    meta.cve_id = j.value("cve_id", "");
    for (const auto& c : j.value("cwe_ids", nlohmann::json::array())) {
      meta.cwe_ids.push_back(normalize_cwe(c.is_string() ? c.get<std::string>() : c.dump()));
    }
    meta.repo_id = j.at("repo_id").get<std::string>();
    meta.fix_commit_id = j.value("fix_commit_id", "");
    meta.parent_commit_id = j.at("parent_commit_id").get<std::string>();
    const auto& ts = j.at("commit_timestamp");
    meta.commit_timestamp =
        ts.is_number_integer() ? ts.get<std::int64_t>() : parse_iso8601(ts.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidMetadata, meta.patch_id + ": " + e.what());
  }
  if (meta.commit_timestamp <= 0) {
    throw Error(ErrorCode::InvalidMetadata, meta.patch_id + ": commit_timestamp must be positive");
  }
  return meta;
}

std::int64_t parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  auto fail = [&] { return Error(ErrorCode::InvalidMetadata, "bad ISO-8601 timestamp: " + std::string(text)); };
  std::size_t pos = 0;
  auto number = [&](std::size_t digits) {
    if (pos + digits > text.size()) throw fail();
    int v = 0;
    for (std::size_t k = 0; k < digits; ++k) {
      const char c = text[pos + k];
      if (!std::isdigit(static_cast<unsigned char>(c))) throw fail();
      v = v * 10 + (c - '0');
    }
    pos += digits;
    return v;
  };
  auto expect = [&](char c) {
    if (pos >= text.size() || text[pos] != c) throw fail();
    ++pos;
  };
  const int y = number(4);
  expect('-');
  const int mo = number(2);
  expect('-');
  const int d = number(2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw fail();
  std::int64_t secs = sys_days{ymd}.time_since_epoch().count() * 86400LL;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    ++pos;
    const int hh = number(2);
    expect(':');
    const int mm = number(2);
    int ss = 0;
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      ss = number(2);
      if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
      }
    }
    if (hh > 23 || mm > 59 || ss > 60) throw fail();
    secs += hh * 3600 + mm * 60 + ss;
    if (pos < text.size()) {
      const char z = text[pos];
      if (z == 'Z') {
        ++pos;
      } else if (z == '+' || z == '-') {
        ++pos;
        const int oh = number(2);
        if (pos < text.size() && text[pos] == ':') ++pos;
        const int om = number(2);
        const int offset = oh * 3600 + om * 60;
        secs += z == '+' ? -offset : offset;
      }
    }
  }
  if (pos != text.size()) throw fail();
  return secs;
}

std::string format_iso_date(std::int64_t utc_seconds) {
  using namespace std::chrono;
  const sys_days days{std::chrono::days{utc_seconds >= 0 ? utc_seconds / 86400
                                                         : (utc_seconds - 86399) / 86400}};
  const year_month_day ymd{days};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace repovul
