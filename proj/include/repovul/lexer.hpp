#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace repovul {

// Returns a copy of `text` of identical length where comment and string/char
// literal bytes are replaced by spaces. Newlines are preserved so offsets and
// line numbers computed on the mask are valid for the original text.
//
// With `mask_preprocessor`, every preprocessor logical line (including
// backslash continuations) is blanked too, as is the body of every
// #else/#elif branch so only the first branch of a conditional survives.
std::string mask_source(std::string_view text, bool mask_preprocessor);

struct Token {
  enum class Kind { Identifier, Number, Punct };
  Kind kind;
  std::string_view text;
  std::size_t offset;
};

// Tokenizes already-masked text. Punctuation is one byte per token except
// "::" and "->".
std::vector<Token> lex(std::string_view masked);

bool is_c_keyword(std::string_view word);

// Keywords and builtins that are followed by '(' without being calls.
bool is_call_excluded(std::string_view word);

bool is_ident_start(char c);
bool is_ident_char(char c);

// Maps byte offsets to 1-based line numbers.
class LineTable {
 public:
  explicit LineTable(std::string_view text);
  std::size_t line_of(std::size_t offset) const;

 private:
  std::vector<std::size_t> starts_;
};

}  // namespace repovul
