#include "repovul/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "repovul/error.hpp"

namespace repovul {

BinaryMetrics compute_metrics(const ConfusionMatrix& cm) {
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fn = static_cast<double>(cm.fn);
  BinaryMetrics m;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = denom > 0 ? std::clamp((tp * tn - fp * fn) / std::sqrt(denom), -1.0, 1.0) : 0.0;
  return m;
}

std::pair<ConfusionMatrix, BinaryMetrics> binary_metrics(const LabelMap& predicted, const LabelMap& labels) {
  if (predicted.size() != labels.size()) {
    throw Error(ErrorCode::KeyMismatch, std::to_string(predicted.size()) + " predictions for " +
                                            std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  auto p = predicted.begin();
  for (auto l = labels.begin(); l != labels.end(); ++l, ++p) {
    if (p->first != l->first) throw Error(ErrorCode::KeyMismatch, "unmatched sample " + p->first);
    const bool pred = p->second != 0;
    const bool truth = l->second != 0;
    if (pred && truth) ++cm.tp;
    else if (pred) ++cm.fp;
    else if (truth) ++cm.fn;
    else ++cm.tn;
  }
  return {cm, compute_metrics(cm)};
}

RetrievalEval retrieval_metrics(const RetrievalResult& result, const DependencySet& deps,
                                std::span<const std::size_t> ks) {
  if (result.sample_id != deps.sample_id) {
    throw Error(ErrorCode::KeyMismatch, result.sample_id + " vs " + deps.sample_id);
  }
  std::set<std::tuple<DepKind, std::string, std::size_t>> vul;
  for (const auto* list : {&deps.callees, &deps.callers}) {
    for (const auto& d : *list) {
      if (d.vul_related) vul.emplace(d.kind, d.path, d.start_line);
    }
  }
  RetrievalEval eval;
  eval.sample_id = result.sample_id;
  eval.gt = vul.size();
  eval.candidates = deps.size();
  for (std::size_t k : ks) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
    if (k > result.k && result.k < eval.candidates) {
      throw Error(ErrorCode::InvalidArgument, "k=" + std::to_string(k) + " exceeds retrieved depth " +
                                                  std::to_string(result.k));
    }
    double match_sum = 0.0;
    for (const Ranking& ranking : result.trials) {
      std::size_t match = 0;
      for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
        match += vul.count({ranking[r].kind, ranking[r].path, ranking[r].start_line});
      }
      match_sum += static_cast<double>(match);
    }
    AtK at;
    at.k = k;
    at.match = result.trials.empty() ? 0.0 : match_sum / static_cast<double>(result.trials.size());
    at.precision = at.match / static_cast<double>(k);
    const std::size_t capped = std::min(k, eval.candidates);
    at.precision_capped = capped > 0 ? at.match / static_cast<double>(capped) : 0.0;
    if (eval.gt > 0) at.recall = at.match / static_cast<double>(eval.gt);
    eval.at_k.push_back(at);
  }
  return eval;
}

RetrievalSummary aggregate_retrieval(std::span<const RetrievalEval> evals, std::span<const std::size_t> ks) {
  RetrievalSummary summary;
  summary.samples = evals.size();
  for (const auto& e : evals) {
    if (e.candidates > 0) ++summary.precision_evaluable;
    if (e.gt > 0) ++summary.recall_evaluable;
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    RetrievalSummaryAtK row;
    row.k = ks[i];
    double pre = 0.0, pre_capped = 0.0, rec = 0.0;
    double match_all = 0.0, match_gt = 0.0, gt_total = 0.0;
    std::size_t pre_n = 0;
    for (const auto& e : evals) {
      const AtK& at = e.at_k.at(i);
      if (e.candidates > 0) {
        pre += at.precision;
        pre_capped += at.precision_capped;
        match_all += at.match;
        ++pre_n;
      }
      if (at.recall) {
        rec += *at.recall;
        match_gt += at.match;
        gt_total += static_cast<double>(e.gt);
      }
    }
    row.precision = pre_n > 0 ? pre / static_cast<double>(pre_n) : 0.0;
    row.precision_capped = pre_n > 0 ? pre_capped / static_cast<double>(pre_n) : 0.0;
    row.recall = summary.recall_evaluable > 0 ? rec / static_cast<double>(summary.recall_evaluable) : 0.0;
    row.precision_micro = pre_n > 0 ? match_all / static_cast<double>(pre_n * row.k) : 0.0;
    row.recall_micro = gt_total > 0 ? match_gt / gt_total : 0.0;
    summary.at_k.push_back(row);
  }
  return summary;
}

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Valid: return "valid";
    case Partition::Test: return "test";
  }
  return "unknown";
}

std::string_view to_string(SplitStrategy s) { return s == SplitStrategy::Random ? "random" : "time"; }

SplitStrategy split_strategy_from_string(std::string_view s) {
  if (s == "random") return SplitStrategy::Random;
  if (s == "time") return SplitStrategy::Time;
  throw Error(ErrorCode::InvalidArgument, "unknown split strategy: " + std::string(s));
}

std::array<std::size_t, 3> split_sizes(std::size_t n) {
  const std::size_t train = (8 * n + 5) / 10;
  const std::size_t valid = (n + 5) / 10;
  return {train, valid, n - train - valid};
}

namespace {

// Units are consecutive runs of items that must share a partition. Each unit
// goes to the first partition whose target is not yet reached.
SplitAssignment cut(const std::vector<std::vector<const SplitItem*>>& units, std::size_t n) {
  SplitAssignment out;
  const auto target = split_sizes(n);
  std::array<std::size_t, 3> filled{};
  for (const auto& unit : units) {
    std::size_t part = 0;
    while (part < 2 && filled[part] >= target[part]) ++part;
    for (const SplitItem* item : unit) out.assignment[item->sample_id] = static_cast<Partition>(part);
    filled[part] += unit.size();
  }
  out.sizes = filled;
  return out;
}

std::vector<std::vector<const SplitItem*>> make_units(const std::vector<const SplitItem*>& ordered,
                                                      bool group_by_patch) {
  std::vector<std::vector<const SplitItem*>> units;
  if (!group_by_patch) {
    for (const SplitItem* item : ordered) units.push_back({item});
    return units;
  }
  std::map<std::string, std::size_t> slot;
  for (const SplitItem* item : ordered) {
    const auto [it, fresh] = slot.emplace(item->group, units.size());
    if (fresh) units.emplace_back();
    units[it->second].push_back(item);
  }
  return units;
}

void require_enough(std::span<const SplitItem> items) {
  if (items.size() < 10) {
    throw Error(ErrorCode::TooFewSamples, "need at least 10 samples, got " + std::to_string(items.size()));
  }
}

}  // namespace

SplitAssignment split_random(std::span<const SplitItem> items, std::uint64_t seed, bool group_by_patch) {
  require_enough(items);
  std::vector<const SplitItem*> sorted;
  for (const auto& item : items) sorted.push_back(&item);
  std::sort(sorted.begin(), sorted.end(),
            [](const SplitItem* a, const SplitItem* b) { return a->sample_id < b->sample_id; });
  auto units = make_units(sorted, group_by_patch);
  const auto perm = seeded_permutation(units.size(), seed);
  std::vector<std::vector<const SplitItem*>> shuffled;
  shuffled.reserve(units.size());
  for (std::size_t idx : perm) shuffled.push_back(std::move(units[idx]));
  SplitAssignment out = cut(shuffled, items.size());
  out.strategy = SplitStrategy::Random;
  out.seed = seed;
  return out;
}

SplitAssignment split_by_time(std::span<const SplitItem> items, bool group_by_patch) {
  require_enough(items);
  std::vector<const SplitItem*> sorted;
  for (const auto& item : items) sorted.push_back(&item);
  std::sort(sorted.begin(), sorted.end(), [](const SplitItem* a, const SplitItem* b) {
    if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
    return a->sample_id < b->sample_id;
  });
  SplitAssignment out = cut(make_units(sorted, group_by_patch), items.size());
  out.strategy = SplitStrategy::Time;
  for (const SplitItem* item : sorted) {
    const Partition p = out.assignment.at(item->sample_id);
    if (p == Partition::Valid && !out.valid_from) out.valid_from = item->timestamp;
    if (p == Partition::Test && !out.test_from) out.test_from = item->timestamp;
  }
  return out;
}

CweReport per_cwe_report(const PredictionsByDetector& predictions, std::span<const FunctionSample> samples,
                         std::span<const std::string> cwes, std::size_t cap) {
  CweReport report;
  report.cap = cap;
  for (const std::string& cwe : cwes) {
    CweRow row;
    row.cwe = cwe;
    std::vector<const FunctionSample*> matching;
    for (const auto& s : samples) {
      if (std::find(s.cwe_ids.begin(), s.cwe_ids.end(), cwe) != s.cwe_ids.end()) matching.push_back(&s);
    }
    std::sort(matching.begin(), matching.end(),
              [](const FunctionSample* a, const FunctionSample* b) { return a->sample_id < b->sample_id; });
    if (matching.size() > cap) matching.resize(cap);
    row.unknown = matching.empty();
    LabelMap labels;
    for (const FunctionSample* s : matching) {
      row.sample_ids.push_back(s->sample_id);
      labels[s->sample_id] = s->label;
    }
    for (const auto& [detector, preds] : predictions) {
      LabelMap subset;
      for (const auto& [id, label] : labels) {
        const auto it = preds.find(id);
        if (it == preds.end()) throw Error(ErrorCode::KeyMismatch, detector + " has no outcome for " + id);
        subset[id] = it->second;
      }
      CweDetectorRow d;
      std::tie(d.confusion, d.metrics) = binary_metrics(subset, labels);
      d.correct = d.confusion.tp + d.confusion.tn;
      row.detectors[detector] = d;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

OverlapReport overlap_report(const PredictionsByDetector& predictions, const LabelMap& labels) {
  if (predictions.size() < 2) throw Error(ErrorCode::InvalidArgument, "overlap needs at least two detectors");
  std::map<std::string, std::set<std::string>> hits;
  for (const auto& [detector, preds] : predictions) {
    if (preds.size() != labels.size() ||
        !std::equal(preds.begin(), preds.end(), labels.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw Error(ErrorCode::SampleSetMismatch, detector + " covers a different sample set");
    }
    auto& set = hits[detector];
    for (const auto& [id, p] : preds) {
      if (p == 1 && labels.at(id) == 1) set.insert(id);
    }
  }
  OverlapReport report;
  std::map<std::string, std::size_t> found_by;
  for (const auto& [detector, set] : hits) {
    report.correct[detector] = set.size();
    for (const auto& id : set) ++found_by[id];
  }
  report.union_count = found_by.size();
  for (const auto& [id, count] : found_by) {
    if (count == hits.size()) ++report.intersection_count;
  }
  for (const auto& [detector, set] : hits) {
    report.exclusive[detector] = static_cast<std::size_t>(
        std::count_if(set.begin(), set.end(), [&](const std::string& id) { return found_by[id] == 1; }));
  }
  return report;
}

}  // namespace repovul
