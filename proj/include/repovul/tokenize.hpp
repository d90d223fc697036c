#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace repovul {

struct CodeToken {
  std::string text;        // lowercased subtoken
  std::size_t end_offset;  // one past the subtoken's last byte in the input
};

// Lexical tokenizer shared by all lexical scorers and the context budget.
// Comments and string/char literals are dropped, text is split on
// non-alphanumeric bytes, identifiers are split at snake_case and camelCase
// boundaries, and the result is lowercased. Order is preserved.
std::vector<std::string> tokenize(std::string_view code);
std::vector<CodeToken> tokenize_with_offsets(std::string_view code);

}  // namespace repovul
