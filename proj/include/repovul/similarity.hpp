#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace repovul {

// |A ∩ B| / |A ∪ B| over token sets; 1 when both are empty.
double jaccard_score(std::span<const std::string> a, std::span<const std::string> b);

// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

// Unit-cost Levenshtein distance over bytes.
std::size_t levenshtein(std::string_view a, std::string_view b);

// 1 - lev(a', b') / max(|a'|, |b'|) on whitespace-normalized text.
double edit_similarity(std::string_view a, std::string_view b);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  double delta = 1.0;

  void validate() const;  // throws Error{InvalidArgument}
};

enum class Bm25Variant { Okapi, Plus };

// Scores each candidate against the query; the candidates are the collection
// for IDF, ln(1 + (N - n_t + 0.5) / (n_t + 0.5)). Each distinct query term
// contributes once. The Plus variant adds delta for every query term present
// in the candidate. Throws Error{EmptyCollection}.
std::vector<double> bm25_scores(std::span<const std::string> query,
                                std::span<const std::vector<std::string>> candidates,
                                const Bm25Params& params, Bm25Variant variant);

// dot(u, v) / (|u| |v|), 0 when either norm is 0. Throws
// Error{DimensionMismatch} for differing or zero lengths.
double cosine_score(std::span<const double> u, std::span<const double> v);

}  // namespace repovul
