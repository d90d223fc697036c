#include "repovul/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "repovul/error.hpp"
#include "repovul/hash.hpp"
#include "repovul/tokenize.hpp"

namespace repovul {

std::string_view to_string(ScorerId id) {
  switch (id) {
    case ScorerId::Random: return "random";
    case ScorerId::Jaccard: return "jaccard";
    case ScorerId::Edit: return "edit";
    case ScorerId::Bm25: return "bm25";
    case ScorerId::Bm25Plus: return "bm25plus";
    case ScorerId::Cosine: return "cosine";
  }
  return "unknown";
}

ScorerId scorer_id_from_string(std::string_view s) {
  for (ScorerId id : {ScorerId::Random, ScorerId::Jaccard, ScorerId::Edit, ScorerId::Bm25,
                      ScorerId::Bm25Plus, ScorerId::Cosine}) {
    if (to_string(id) == s) return id;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scorer: " + std::string(s));
}

Scorer Scorer::random(RandomParams params) {
  if (params.trials < 1) throw Error(ErrorCode::InvalidArgument, "random scorer needs trials >= 1");
  Scorer s(ScorerId::Random);
  s.random_ = params;
  return s;
}

Scorer Scorer::jaccard() { return Scorer(ScorerId::Jaccard); }
Scorer Scorer::edit() { return Scorer(ScorerId::Edit); }

Scorer Scorer::bm25(Bm25Params params) {
  params.validate();
  Scorer s(ScorerId::Bm25);
  s.bm25_ = params;
  return s;
}

Scorer Scorer::bm25plus(Bm25Params params) {
  params.validate();
  Scorer s(ScorerId::Bm25Plus);
  s.bm25_ = params;
  return s;
}

Scorer Scorer::cosine(std::shared_ptr<EmbeddingProvider> provider) {
  Scorer s(ScorerId::Cosine);
  s.provider_ = std::move(provider);
  return s;
}

std::vector<double> Scorer::score(std::string_view target_code,
                                  const std::vector<const Dependency*>& candidates) const {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  switch (id_) {
    case ScorerId::Random:
      throw Error(ErrorCode::InvalidArgument, "the random scorer ranks by permutation");
    case ScorerId::Jaccard: {
      const auto query = tokenize(target_code);
      for (const Dependency* d : candidates) scores.push_back(jaccard_score(query, tokenize(d->code)));
      break;
    }
    case ScorerId::Edit:
      for (const Dependency* d : candidates) scores.push_back(edit_similarity(target_code, d->code));
      break;
    case ScorerId::Bm25:
    case ScorerId::Bm25Plus: {
      const auto query = tokenize(target_code);
      std::vector<std::vector<std::string>> docs;
      docs.reserve(candidates.size());
      for (const Dependency* d : candidates) docs.push_back(tokenize(d->code));
      scores = bm25_scores(query, docs, bm25_,
                           id_ == ScorerId::Bm25 ? Bm25Variant::Okapi : Bm25Variant::Plus);
      break;
    }
    case ScorerId::Cosine: {
      if (!provider_) throw Error(ErrorCode::ProviderUnavailable, "cosine scorer has no embedding provider");
      const auto query = provider_->embed(target_code);
      for (const Dependency* d : candidates) scores.push_back(cosine_score(query, provider_->embed(d->code)));
      break;
    }
  }
  return scores;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with rejection sampling; std::shuffle and
  // uniform_int_distribution are not portable across standard libraries.
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(draw % bound)]);
  }
  return perm;
}

namespace {

Ranking rank(const std::vector<const Dependency*>& cands, const std::vector<double>& scores,
             std::size_t k) {
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    const Dependency& x = *cands[a];
    const Dependency& y = *cands[b];
    if (x.kind != y.kind) return x.kind == DepKind::Callee;
    if (x.path != y.path) return x.path < y.path;
    return x.start_line < y.start_line;
  });
  Ranking out;
  for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
    const Dependency& d = *cands[order[r]];
    out.push_back({d.kind, d.name, d.path, d.start_line, scores[order[r]], r + 1});
  }
  return out;
}

}  // namespace

RetrievalResult retrieve_top_k(const FunctionSample& sample, const DependencySet& deps,
                               const Scorer& scorer, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  RetrievalResult result;
  result.sample_id = sample.sample_id;
  result.scorer_id = scorer.id();
  result.k = k;

  std::vector<const Dependency*> cands;
  for (const auto& d : deps.callees) cands.push_back(&d);
  for (const auto& d : deps.callers) cands.push_back(&d);
  if (cands.empty()) {
    result.no_candidates = true;
    result.trials.emplace_back();
    return result;
  }

  if (scorer.id() != ScorerId::Random) {
    result.trials.push_back(rank(cands, scorer.score(sample.code, cands), k));
    return result;
  }
  const auto n = cands.size();
  for (int t = 0; t < scorer.random_params().trials; ++t) {
    const std::uint64_t seed = Fnv1a()
                                   .field(std::to_string(scorer.random_params().seed))
                                   .field(sample.sample_id)
                                   .field(std::to_string(t))
                                   .value();
    const auto perm = seeded_permutation(n, seed);
    // perm[pos] is the candidate placed at position pos; earlier positions score higher.
    std::vector<double> scores(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
      scores[perm[pos]] = static_cast<double>(n - pos) / static_cast<double>(n);
    }
    result.trials.push_back(rank(cands, scores, k));
  }
  return result;
}

}  // namespace repovul
