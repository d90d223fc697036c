#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repovul/corpus.hpp"
#include "repovul/depgraph.hpp"
#include "repovul/retrieval.hpp"

namespace repovul {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct BinaryMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
};

// Any zero denominator defines that metric as 0.
BinaryMetrics compute_metrics(const ConfusionMatrix& cm);

using LabelMap = std::map<std::string, int>;  // sample_id -> 0/1

// Throws Error{KeyMismatch} unless both maps have the same keys.
std::pair<ConfusionMatrix, BinaryMetrics> binary_metrics(const LabelMap& predicted, const LabelMap& labels);

struct AtK {
  std::size_t k = 0;
  double match = 0.0;       // averaged over trials for the random scorer
  double precision = 0.0;   // match / k
  double precision_capped = 0.0;  // match / min(k, m + n), 0 when there are no candidates
  std::optional<double> recall;   // match / GT, absent when GT == 0
};

struct RetrievalEval {
  std::string sample_id;
  std::size_t gt = 0;
  std::size_t candidates = 0;
  std::vector<AtK> at_k;
};

// Per-sample Pre@K / Rec@K. Every k must be <= result.k unless the ranking
// already holds all candidates.
RetrievalEval retrieval_metrics(const RetrievalResult& result, const DependencySet& deps,
                                std::span<const std::size_t> ks);

struct RetrievalSummaryAtK {
  std::size_t k = 0;
  double precision = 0.0;          // macro over samples with candidates
  double precision_capped = 0.0;
  double recall = 0.0;             // macro over samples with GT > 0
  double precision_micro = 0.0;
  double recall_micro = 0.0;
};

struct RetrievalSummary {
  std::size_t samples = 0;
  std::size_t precision_evaluable = 0;
  std::size_t recall_evaluable = 0;
  std::vector<RetrievalSummaryAtK> at_k;
};

RetrievalSummary aggregate_retrieval(std::span<const RetrievalEval> evals, std::span<const std::size_t> ks);

enum class Partition { Train, Valid, Test };
enum class SplitStrategy { Random, Time };

std::string_view to_string(Partition p);
std::string_view to_string(SplitStrategy s);
SplitStrategy split_strategy_from_string(std::string_view s);

struct SplitItem {
  std::string sample_id;
  std::int64_t timestamp = 0;
  std::string group;  // patch id; used when grouping by patch
};

struct SplitAssignment {
  SplitStrategy strategy = SplitStrategy::Random;
  std::optional<std::uint64_t> seed;
  std::map<std::string, Partition> assignment;
  std::array<std::size_t, 3> sizes{};  // train, valid, test
  // Realized time boundaries: first timestamp of valid and of test.
  std::optional<std::int64_t> valid_from;
  std::optional<std::int64_t> test_from;
};

// Train/valid/test sizes for an 8:1:1 cut of n items, rounded to nearest.
std::array<std::size_t, 3> split_sizes(std::size_t n);

// Seeded shuffle then contiguous cut. Throws Error{TooFewSamples} below 10.
SplitAssignment split_random(std::span<const SplitItem> items, std::uint64_t seed, bool group_by_patch = false);

// Sort by (timestamp, sample_id) then contiguous cut.
SplitAssignment split_by_time(std::span<const SplitItem> items, bool group_by_patch = false);

using PredictionsByDetector = std::map<std::string, LabelMap>;

struct CweDetectorRow {
  std::size_t correct = 0;
  ConfusionMatrix confusion;
  BinaryMetrics metrics;
};

struct CweRow {
  std::string cwe;
  bool unknown = false;  // no sample carries this CWE
  std::vector<std::string> sample_ids;
  std::map<std::string, CweDetectorRow> detectors;
};

struct CweReport {
  std::size_t cap = 0;
  std::vector<CweRow> rows;
};

// For each CWE picks up to `cap` samples (by sample_id) and scores every detector.
CweReport per_cwe_report(const PredictionsByDetector& predictions, std::span<const FunctionSample> samples,
                         std::span<const std::string> cwes, std::size_t cap);

struct OverlapReport {
  std::map<std::string, std::size_t> correct;    // correctly predicted vulnerable samples
  std::map<std::string, std::size_t> exclusive;  // found by this detector only
  std::size_t union_count = 0;
  std::size_t intersection_count = 0;
};

// Set algebra over the correctly-predicted-vulnerable sets. Throws
// Error{SampleSetMismatch} when detectors cover different samples.
OverlapReport overlap_report(const PredictionsByDetector& predictions, const LabelMap& labels);

}  // namespace repovul
