#include "repovul/tokenize.hpp"

#include <cctype>

#include "repovul/lexer.hpp"

namespace repovul {

namespace {

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)); }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)); }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)); }

void emit(std::vector<CodeToken>& out, std::string_view word, std::size_t end) {
  std::string lowered(word);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  out.push_back({std::move(lowered), end});
}

// Splits one alphanumeric run at camelCase boundaries: "maxSet" -> max|Set,
// "HTTPServer" -> HTTP|Server. Digits stay attached to the preceding part.
void split_camel(std::vector<CodeToken>& out, std::string_view run, std::size_t base) {
  std::size_t start = 0;
  for (std::size_t i = 1; i < run.size(); ++i) {
    const char prev = run[i - 1];
    const char cur = run[i];
    const bool lower_to_upper = (is_lower(prev) || is_digit(prev)) && is_upper(cur);
    const bool acronym_end = is_upper(prev) && is_upper(cur) && i + 1 < run.size() && is_lower(run[i + 1]);
    if (lower_to_upper || acronym_end) {
      emit(out, run.substr(start, i - start), base + i);
      start = i;
    }
  }
  emit(out, run.substr(start), base + run.size());
}

}  // namespace

std::vector<CodeToken> tokenize_with_offsets(std::string_view code) {
  const std::string masked = mask_source(code, false);
  std::vector<CodeToken> out;
  std::size_t i = 0;
  while (i < masked.size()) {
    if (!is_alnum(masked[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < masked.size() && is_alnum(masked[j])) ++j;
    split_camel(out, std::string_view(masked).substr(i, j - i), i);
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view code) {
  std::vector<std::string> out;
  for (CodeToken& t : tokenize_with_offsets(code)) out.push_back(std::move(t.text));
  return out;
}

}  // namespace repovul
