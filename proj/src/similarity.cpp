#include "repovul/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "repovul/error.hpp"

namespace repovul {

double jaccard_score(std::span<const std::string> a, std::span<const std::string> b) {
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0u : 1u)});
      diagonal = up;
    }
  }
  return row[b.size()];
}

double edit_similarity(std::string_view a, std::string_view b) {
  const std::string na = normalize_whitespace(a);
  const std::string nb = normalize_whitespace(b);
  const std::size_t longest = std::max(na.size(), nb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(na, nb)) / static_cast<double>(longest);
}

void Bm25Params::validate() const {
  if (!(k1 > 0.0) || !std::isfinite(k1)) throw Error(ErrorCode::InvalidArgument, "bm25 k1 must be positive");
  if (!(b >= 0.0 && b <= 1.0)) throw Error(ErrorCode::InvalidArgument, "bm25 b must lie in [0, 1]");
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorCode::InvalidArgument, "bm25 delta must be non-negative");
  }
}

std::vector<double> bm25_scores(std::span<const std::string> query,
                                std::span<const std::vector<std::string>> candidates,
                                const Bm25Params& params, Bm25Variant variant) {
  params.validate();
  if (candidates.empty()) throw Error(ErrorCode::EmptyCollection, "bm25 needs at least one candidate");

  const std::set<std::string> terms(query.begin(), query.end());
  const auto n_docs = static_cast<double>(candidates.size());
  double total_len = 0.0;
  std::vector<std::unordered_map<std::string, std::size_t>> tf(candidates.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t d = 0; d < candidates.size(); ++d) {
    total_len += static_cast<double>(candidates[d].size());
    for (const auto& tok : candidates[d]) {
      if (terms.count(tok) && tf[d][tok]++ == 0) ++df[tok];
    }
  }
  const double avgdl = total_len / n_docs;

  std::vector<double> scores(candidates.size(), 0.0);
  for (std::size_t d = 0; d < candidates.size(); ++d) {
    const double dl = static_cast<double>(candidates[d].size());
    const double norm = params.k1 * (1.0 - params.b + (avgdl > 0.0 ? params.b * dl / avgdl : 0.0));
    for (const auto& term : terms) {
      const auto it = tf[d].find(term);
      if (it == tf[d].end()) continue;
      const double f = static_cast<double>(it->second);
      const double n_t = static_cast<double>(df[term]);
      const double idf = std::log(1.0 + (n_docs - n_t + 0.5) / (n_t + 0.5));
      double weight = f * (params.k1 + 1.0) / (f + norm);
      if (variant == Bm25Variant::Plus) weight += params.delta;
      scores[d] += idf * weight;
    }
  }
  return scores;
}

double cosine_score(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector sizes " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

}  // namespace repovul
