#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace repovul {

struct FunctionSpan {
  std::string name;
  std::string path;
  std::size_t start_line = 0;  // 1-based, inclusive
  std::size_t end_line = 0;
  std::string signature_text;  // declaration head up to (excluding) the body brace
  std::string body_text;       // full definition text, head through closing brace
  std::size_t start_offset = 0;  // body_text == file_text.substr(start_offset, end_offset - start_offset)
  std::size_t end_offset = 0;
  std::size_t brace_offset = 0;  // offset of the opening '{' of the body
};

struct SkipEntry {
  std::size_t line = 0;
  std::string reason;
};

struct SliceResult {
  std::vector<FunctionSpan> spans;  // sorted, pairwise disjoint
  std::vector<SkipEntry> skipped;
};

// Extracts top-level C/C++ function definitions using a token scanner:
// comments, literals and preprocessor lines are masked, bodies are delimited
// by brace matching and the parameter list is located by a heuristic.
// Namespaces and extern "C" blocks are entered; class/struct/initializer
// bodies are skipped. K&R definitions, macro-generated functions and
// unbalanced regions are reported in `skipped`.
SliceResult slice_functions(std::string_view file_text, std::string_view path);

}  // namespace repovul
