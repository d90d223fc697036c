#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "repovul/corpus.hpp"
#include "repovul/depgraph.hpp"
#include "repovul/similarity.hpp"

namespace repovul {

enum class ScorerId { Random, Jaccard, Edit, Bm25, Bm25Plus, Cosine };

std::string_view to_string(ScorerId id);
ScorerId scorer_id_from_string(std::string_view s);

struct RandomParams {
  std::uint64_t seed = 0;
  int trials = 100;
};

// Source of dense vectors for the cosine scorer.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

class Scorer {
 public:
  static Scorer random(RandomParams params);
  static Scorer jaccard();
  static Scorer edit();
  static Scorer bm25(Bm25Params params = {});
  static Scorer bm25plus(Bm25Params params = {});
  static Scorer cosine(std::shared_ptr<EmbeddingProvider> provider);

  ScorerId id() const { return id_; }
  const Bm25Params& bm25_params() const { return bm25_; }
  const RandomParams& random_params() const { return random_; }

  // Relevance of every candidate to the target code, in candidate order.
  // Not defined for the random scorer.
  std::vector<double> score(std::string_view target_code,
                            const std::vector<const Dependency*>& candidates) const;

 private:
  explicit Scorer(ScorerId id) : id_(id) {}

  ScorerId id_;
  Bm25Params bm25_;
  RandomParams random_;
  std::shared_ptr<EmbeddingProvider> provider_;
};

struct RankedDependency {
  DepKind kind = DepKind::Callee;
  std::string name;
  std::string path;
  std::size_t start_line = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const RankedDependency&) const = default;
};

using Ranking = std::vector<RankedDependency>;

struct RetrievalResult {
  std::string sample_id;
  ScorerId scorer_id = ScorerId::Jaccard;
  std::size_t k = 0;
  // One ranking per trial; deterministic scorers produce exactly one.
  std::vector<Ranking> trials;
  bool no_candidates = false;

  const Ranking& ranked() const { return trials.front(); }
  bool operator==(const RetrievalResult&) const = default;
};

// Top-k of the sample's callees and callers by (score desc, callee before
// caller, path asc, start_line asc). The random scorer ranks by `trials`
// seeded permutations derived from (seed, sample_id, trial).
RetrievalResult retrieve_top_k(const FunctionSample& sample, const DependencySet& deps,
                               const Scorer& scorer, std::size_t k);

// Uniform permutation of [0, n) from a 64-bit seed; identical on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace repovul
