#include "repovul/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace repovul {

namespace {

constexpr std::array kKeywords = {
    "_Alignas", "_Alignof", "_Atomic", "_Bool", "_Complex", "_Generic", "_Noreturn",
    "_Static_assert", "_Thread_local", "alignas", "alignof", "asm", "auto", "bool",
    "break", "case", "catch", "char", "class", "const", "constexpr", "const_cast",
    "continue", "decltype", "default", "delete", "do", "double", "dynamic_cast", "else",
    "enum", "explicit", "extern", "float", "for", "friend", "goto", "if", "inline", "int",
    "long", "mutable", "namespace", "new", "noexcept", "operator", "private", "protected",
    "public", "register", "reinterpret_cast", "restrict", "return", "short", "signed",
    "sizeof", "static", "static_assert", "static_cast", "struct", "switch", "template",
    "this", "throw", "try", "typedef", "typeid", "typename", "union", "unsigned", "using",
    "virtual", "void", "volatile", "while"};

constexpr std::array kCallExcludedExtra = {
    "__attribute__", "__declspec", "__typeof__", "__typeof", "typeof", "__asm__", "__asm",
    "__builtin_expect", "__alignof__", "defined", "__extension__", "__volatile__"};

template <std::size_t N>
bool contains(const std::array<const char*, N>& set, std::string_view word) {
  return std::any_of(set.begin(), set.end(), [&](const char* k) { return word == k; });
}

bool starts_numeric_token(std::string_view text, std::size_t quote) {
  std::size_t start = quote;
  while (start > 0 && (is_ident_char(text[start - 1]) || text[start - 1] == '\'')) --start;
  return start < quote && std::isdigit(static_cast<unsigned char>(text[start]));
}

void blank(std::string& out, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to && i < out.size(); ++i) {
    if (out[i] != '\n') out[i] = ' ';
  }
}

void mask_comments_and_strings(std::string& out) {
  const std::string_view text = out;
  const std::size_t n = text.size();
  std::string result = out;
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (c == '/' && i + 1 < n && text[i + 1] == '/') {
      std::size_t j = i;
      // Line comments continue across backslash-newline.
      while (j < n && text[j] != '\n') {
        if (text[j] == '\\' && j + 1 < n && text[j + 1] == '\n') j += 2;
        else ++j;
      }
      blank(result, i, j);
      i = j;
    } else if (c == '/' && i + 1 < n && text[i + 1] == '*') {
      const std::size_t close = text.find("*/", i + 2);
      const std::size_t j = close == std::string_view::npos ? n : close + 2;
      blank(result, i, j);
      i = j;
    } else if (c == 'R' && i + 1 < n && text[i + 1] == '"' &&
               (i == 0 || !is_ident_char(text[i - 1]) || text[i - 1] == '8' ||
                text[i - 1] == 'u' || text[i - 1] == 'U' || text[i - 1] == 'L')) {
      const std::size_t open = text.find('(', i + 2);
      if (open == std::string_view::npos) {
        ++i;
        continue;
      }
      const std::string terminator =
          ")" + std::string(text.substr(i + 2, open - i - 2)) + "\"";
      const std::size_t close = text.find(terminator, open + 1);
      const std::size_t j = close == std::string_view::npos ? n : close + terminator.size();
      blank(result, i + 1, j);
      i = j;
    } else if (c == '"' || (c == '\'' && !starts_numeric_token(text, i))) {
      std::size_t j = i + 1;
      while (j < n && text[j] != c && text[j] != '\n') {
        if (text[j] == '\\' && j + 1 < n) j += 2;
        else ++j;
      }
      if (j < n && text[j] == c) ++j;
      blank(result, i, j);
      i = j;
    } else {
      ++i;
    }
  }
  out = std::move(result);
}

std::string_view directive_of(std::string_view line) {
  std::size_t p = line.find_first_not_of(" \t");
  if (p == std::string_view::npos || line[p] != '#') return {};
  p = line.find_first_not_of(" \t", p + 1);
  if (p == std::string_view::npos) return {};
  std::size_t e = p;
  while (e < line.size() && is_ident_char(line[e])) ++e;
  return line.substr(p, e - p);
}

void mask_preprocessor_lines(std::string& out) {
  const std::size_t n = out.size();
  // Stack of conditional states: true while inside a non-first branch.
  std::vector<bool> in_else;
  auto skipping = [&] {
    return std::any_of(in_else.begin(), in_else.end(), [](bool b) { return b; });
  };
  std::size_t i = 0;
  while (i < n) {
    std::size_t end = i;
    while (end < n && out[end] != '\n') {
      if (out[end] == '\\' && end + 1 < n && out[end + 1] == '\n') end += 2;
      else ++end;
    }
    const std::string_view line(out.data() + i, end - i);
    const std::string_view directive = directive_of(line);
    const bool is_directive = line.find_first_not_of(" \t") != std::string_view::npos &&
                              line[line.find_first_not_of(" \t")] == '#';
    if (is_directive) {
      if (directive == "if" || directive == "ifdef" || directive == "ifndef") {
        in_else.push_back(false);
      } else if (directive == "else" || directive == "elif" || directive == "elifdef" ||
                 directive == "elifndef") {
        if (!in_else.empty()) in_else.back() = true;
      } else if (directive == "endif") {
        if (!in_else.empty()) in_else.pop_back();
      }
      blank(out, i, end);
    } else if (skipping()) {
      blank(out, i, end);
    }
    i = end + 1;
  }
}

}  // namespace

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

std::string mask_source(std::string_view text, bool mask_preprocessor) {
  std::string out(text);
  mask_comments_and_strings(out);
  if (mask_preprocessor) mask_preprocessor_lines(out);
  return out;
}

std::vector<Token> lex(std::string_view masked) {
  std::vector<Token> tokens;
  const std::size_t n = masked.size();
  std::size_t i = 0;
  while (i < n) {
    const char c = masked[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident_char(masked[j])) ++j;
      tokens.push_back({Token::Kind::Identifier, masked.substr(i, j - i), i});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i + 1;
      while (j < n && (is_ident_char(masked[j]) || masked[j] == '.' || masked[j] == '\'')) ++j;
      tokens.push_back({Token::Kind::Number, masked.substr(i, j - i), i});
      i = j;
    } else {
      std::size_t len = 1;
      if (i + 1 < n && ((c == ':' && masked[i + 1] == ':') || (c == '-' && masked[i + 1] == '>'))) {
        len = 2;
      }
      tokens.push_back({Token::Kind::Punct, masked.substr(i, len), i});
      i += len;
    }
  }
  return tokens;
}

bool is_c_keyword(std::string_view word) { return contains(kKeywords, word); }

bool is_call_excluded(std::string_view word) {
  return is_c_keyword(word) || contains(kCallExcludedExtra, word);
}

LineTable::LineTable(std::string_view text) {
  starts_.push_back(0);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') starts_.push_back(i + 1);
  }
}

std::size_t LineTable::line_of(std::size_t offset) const {
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  return static_cast<std::size_t>(it - starts_.begin());
}

}  // namespace repovul
