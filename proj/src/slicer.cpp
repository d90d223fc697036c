#include "repovul/slicer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

#include "repovul/lexer.hpp"

namespace repovul {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

constexpr std::array kParenAttributes = {"__attribute__", "__declspec", "alignas", "_Alignas",
                                         "decltype", "noexcept", "throw", "__asm__", "__asm",
                                         "asm", "typeof", "__typeof__", "_Pragma", "__pragma"};

constexpr std::array kTailQualifiers = {"const", "volatile", "noexcept", "override", "final",
                                        "mutable", "throw", "__attribute__", "__asm__", "asm",
                                        "__declspec", "try", "restrict", "__restrict"};

template <std::size_t N>
bool in(const std::array<const char*, N>& set, std::string_view w) {
  return std::any_of(set.begin(), set.end(), [&](const char* k) { return w == k; });
}

bool is_punct(const Token& t, std::string_view p) {
  return t.kind == Token::Kind::Punct && t.text == p;
}

bool is_ident(const Token& t) { return t.kind == Token::Kind::Identifier; }

bool all_caps(std::string_view w) {
  bool has_alpha = false;
  for (char c : w) {
    if (std::islower(static_cast<unsigned char>(c))) return false;
    if (std::isalpha(static_cast<unsigned char>(c))) has_alpha = true;
  }
  return has_alpha;
}

// Annotation-like identifiers allowed after the parameter list: __THROW, NOINLINE, ...
bool is_annotation(std::string_view w) {
  return in(kTailQualifiers, w) || w.substr(0, 2) == "__" || all_caps(w);
}

std::vector<std::size_t> match_pairs(const std::vector<Token>& toks, std::string_view open,
                                     std::string_view close) {
  std::vector<std::size_t> match(toks.size(), npos);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (is_punct(toks[i], open)) {
      stack.push_back(i);
    } else if (is_punct(toks[i], close) && !stack.empty()) {
      match[stack.back()] = i;
      match[i] = stack.back();
      stack.pop_back();
    }
  }
  return match;
}

enum class RegionKind { Function, Transparent, Aggregate, KnR, Macro, Unrecognized };

struct Classified {
  RegionKind kind = RegionKind::Aggregate;
  std::size_t name_tok = npos;
  std::size_t start_tok = npos;
};

class Slicer {
 public:
  Slicer(std::string_view text, std::string_view path)
      : text_(text),
        path_(path),
        masked_(mask_source(text, true)),
        toks_(lex(masked_)),
        lines_(text),
        braces_(match_pairs(toks_, "{", "}")),
        parens_(match_pairs(toks_, "(", ")")) {}

  SliceResult run() {
    SliceResult out;
    std::size_t transparent_depth = 0;
    std::size_t region = 0;
    bool knr_pending = false;
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      const Token& t = toks_[i];
      if (is_punct(t, "(") && parens_[i] != npos) {
        i = parens_[i];  // parentheses never contain top-level braces we care about
        continue;
      }
      if (is_punct(t, ";")) {
        knr_pending = statement_is_knr_head(region, i) || (knr_pending && !has_paren(region, i));
        region = i + 1;
      } else if (is_punct(t, "}")) {
        if (transparent_depth > 0) {
          --transparent_depth;
        } else {
          out.skipped.push_back({line_of(t), "unbalanced '}'"});
        }
        knr_pending = false;
        region = i + 1;
      } else if (is_punct(t, "{")) {
        Classified c = classify(region, i);
        // The last K&R parameter declaration ends with ';' right before the body.
        if (knr_pending && region == i) c.kind = RegionKind::KnR;
        knr_pending = false;
        const std::size_t close = braces_[i];
        switch (c.kind) {
          case RegionKind::Transparent:
            ++transparent_depth;
            region = i + 1;
            continue;
          case RegionKind::Function:
            if (close == npos) {
              out.skipped.push_back({line_of(toks_[i]), "unterminated function body"});
              region = i + 1;
              continue;
            }
            out.spans.push_back(make_span(c, i, close));
            break;
          case RegionKind::KnR:
            out.skipped.push_back({line_of(toks_[i]), "K&R-style definition"});
            break;
          case RegionKind::Macro:
            out.skipped.push_back({line_of(toks_[c.name_tok]), "macro-generated function"});
            break;
          case RegionKind::Unrecognized:
            out.skipped.push_back({line_of(toks_[i]), "unrecognized definition head"});
            break;
          case RegionKind::Aggregate:
            break;
        }
        if (close == npos) {
          if (c.kind != RegionKind::Function) {
            out.skipped.push_back({line_of(toks_[i]), "unterminated block"});
          }
          region = i + 1;
          continue;
        }
        i = close;
        region = close + 1;
      }
    }
    return out;
  }

 private:
  std::size_t line_of(const Token& t) const { return lines_.line_of(t.offset); }

  bool has_paren(std::size_t from, std::size_t to) const {
    for (std::size_t k = from; k < to; ++k) {
      if (is_punct(toks_[k], "(")) return true;
    }
    return false;
  }

  // `int f(a, b) int a;` : a parameter list followed by a type name.
  bool statement_is_knr_head(std::size_t from, std::size_t to) const {
    for (std::size_t k = from; k < to; ++k) {
      if (!is_punct(toks_[k], "(") || parens_[k] == npos || parens_[k] >= to) continue;
      if (k == from || !is_ident(toks_[k - 1]) || in(kParenAttributes, toks_[k - 1].text) ||
          is_call_excluded(toks_[k - 1].text)) {
        k = parens_[k];
        continue;
      }
      const std::size_t after = parens_[k] + 1;
      if (after < to && is_ident(toks_[after]) && !is_annotation(toks_[after].text)) return true;
      k = parens_[k];
    }
    return false;
  }

  bool is_transparent(std::size_t from, std::size_t to) const {
    if (from >= to) return false;
    std::size_t k = from;
    if (toks_[k].text == "inline") ++k;
    if (k < to && toks_[k].text == "namespace") {
      for (++k; k < to; ++k) {
        if (!is_ident(toks_[k]) && !is_punct(toks_[k], "::")) return false;
      }
      return true;
    }
    return to - from == 1 && toks_[from].text == "extern";
  }

  bool valid_tail(std::size_t from, std::size_t to) const {
    for (std::size_t k = from; k < to; ++k) {
      const Token& t = toks_[k];
      if (is_punct(t, "->") || is_punct(t, ":")) return true;
      if (is_punct(t, "&")) continue;
      if (is_ident(t) && is_annotation(t.text)) {
        if (k + 1 < to && is_punct(toks_[k + 1], "(") && parens_[k + 1] != npos) {
          k = parens_[k + 1];
        }
        continue;
      }
      return false;
    }
    return true;
  }

  Classified classify(std::size_t from, std::size_t to) const {
    Classified c;
    if (is_transparent(from, to)) {
      c.kind = RegionKind::Transparent;
      return c;
    }
    bool saw_group = false;
    for (std::size_t k = from; k < to; ++k) {
      if (is_punct(toks_[k], "=")) return c;  // initializer
      if (is_punct(toks_[k], "(") && parens_[k] != npos) k = parens_[k];
    }
    // Scan top-level paren groups from the right for the parameter list.
    for (std::size_t k = to; k-- > from;) {
      if (!is_punct(toks_[k], ")") || parens_[k] == npos || parens_[k] < from) continue;
      const std::size_t open = parens_[k];
      saw_group = true;
      const std::size_t close = k;
      k = open;
      if (open == from) continue;
      const Token& name = toks_[open - 1];
      if (!is_ident(name) || in(kParenAttributes, name.text)) continue;
      if (is_c_keyword(name.text)) {
        // Control statements only show up here in recovery after a broken body.
        if (name.text == "if" || name.text == "while" || name.text == "for" ||
            name.text == "switch") {
          return c;
        }
        continue;
      }
      std::size_t before = open - 1;
      while (before > from && (is_punct(toks_[before - 1], "::") || is_punct(toks_[before - 1], "~"))) {
        before -= is_punct(toks_[before - 1], "~") ? 1 : 2;
      }
      if (before > from) {
        const Token& q = toks_[before - 1];
        if (is_punct(q, ",") || is_punct(q, ":") || is_punct(q, "(")) continue;
      }
      if (!valid_tail(close + 1, to)) continue;
      c.name_tok = open - 1;
      c.start_tok = start_token(from, before);
      if (c.start_tok == c.name_tok && all_caps(name.text)) {
        c.kind = RegionKind::Macro;
      } else {
        c.kind = RegionKind::Function;
      }
      return c;
    }
    if (!saw_group) return c;
    for (std::size_t k = from; k < to; ++k) {
      const auto w = toks_[k].text;
      if (w == "struct" || w == "union" || w == "enum" || w == "class" || w == "typedef") return c;
    }
    c.kind = RegionKind::Unrecognized;
    return c;
  }

  // Drops leading macro invocations that lack a terminating ';'.
  std::size_t start_token(std::size_t from, std::size_t name_begin) const {
    std::size_t start = from;
    for (std::size_t k = from; k < name_begin; ++k) {
      if (is_punct(toks_[k], "(") && parens_[k] != npos && parens_[k] < name_begin) {
        const bool attribute = k > from && is_ident(toks_[k - 1]) && in(kParenAttributes, toks_[k - 1].text);
        if (!attribute) start = parens_[k] + 1;
        k = parens_[k];
      }
    }
    return start;
  }

  FunctionSpan make_span(const Classified& c, std::size_t open_brace, std::size_t close_brace) const {
    FunctionSpan s;
    const Token& name = toks_[c.name_tok];
    s.name = std::string(name.text);
    if (c.name_tok > 0 && is_punct(toks_[c.name_tok - 1], "~")) s.name = "~" + s.name;
    s.path = std::string(path_);
    s.start_offset = toks_[c.start_tok].offset;
    s.brace_offset = toks_[open_brace].offset;
    s.end_offset = toks_[close_brace].offset + 1;
    s.start_line = lines_.line_of(s.start_offset);
    s.end_line = lines_.line_of(s.end_offset - 1);
    std::string_view head = text_.substr(s.start_offset, s.brace_offset - s.start_offset);
    while (!head.empty() && std::isspace(static_cast<unsigned char>(head.back()))) head.remove_suffix(1);
    s.signature_text = std::string(head);
    s.body_text = std::string(text_.substr(s.start_offset, s.end_offset - s.start_offset));
    return s;
  }

  std::string_view text_;
  std::string_view path_;
  std::string masked_;
  std::vector<Token> toks_;
  LineTable lines_;
  std::vector<std::size_t> braces_;
  std::vector<std::size_t> parens_;
};

}  // namespace

SliceResult slice_functions(std::string_view file_text, std::string_view path) {
  return Slicer(file_text, path).run();
}

}  // namespace repovul
