#pragma once

// Ranking metrics over labeled hypernymy pairs: P@k and the macro/micro
// average and largest reciprocal ranks per hypernym group.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypermine/model.hpp"

namespace hypermine {

struct LabeledPair {
  TermPair pair;
  bool positive = false;
  bool operator==(const LabeledPair&) const = default;
};

class LabeledPairSet {
 public:
  /// Throws ValidationError on a duplicate pair or a self-pair.
  void add(TermPair pair, bool positive);
  std::optional<bool> find(TermPair pair) const;
  bool contains(TermPair pair) const { return index_.count(pair) != 0; }
  std::size_t size() const noexcept { return pairs_.size(); }
  std::size_t num_positive() const noexcept { return positives_; }
  const std::vector<LabeledPair>& pairs() const noexcept { return pairs_; }

 private:
  std::vector<LabeledPair> pairs_;
  std::unordered_map<TermPair, std::size_t, TermPairHash> index_;
  std::size_t positives_ = 0;
};

/// TSV rows: hypernym, hyponym, 1|0.
std::string serialize_labels(const LabeledPairSet& labels, const Vocabulary& vocab);
LabeledPairSet parse_labels(std::string_view tsv, const Vocabulary& vocab, const std::string& where = "labels");
void write_labels(const std::filesystem::path& path, const LabeledPairSet& labels, const Vocabulary& vocab);
LabeledPairSet read_labels(const std::filesystem::path& path, const Vocabulary& vocab);

/// Fraction of positives among the first k ranked pairs. Throws when k is 0
/// or exceeds the list, or when one of the first k pairs is unlabeled.
double precision_at_k(const RankedPairList& ranked, const LabeledPairSet& labels, std::size_t k);

struct RankMetrics {
  double ma_marr = 0.0;
  double mi_marr = 0.0;
  double ma_mlrr = 0.0;
  double mi_mlrr = 0.0;
  std::size_t groups = 0;     // groups with at least one positive
  std::size_t positives = 0;  // positives in those groups
};

/// Per-group values: ARR (mean reciprocal rank of the positives), LRR
/// (largest reciprocal rank) and the positive count.
struct GroupRank {
  double arr = 0.0;
  double lrr = 0.0;
  std::size_t positives = 0;
};

/// Macro means weight groups equally, micro means by positive count.
RankMetrics aggregate_group_ranks(std::span<const GroupRank> groups);

/// Groups are keyed by hypernym. Each labeled pair must appear in `ranked`;
/// unlabeled ranked pairs are ignored. Groups without a positive are skipped
/// with a warning.
RankMetrics reciprocal_rank_metrics(const RankedPairList& ranked, const LabeledPairSet& labels);

/// Restricts `ranked` to labeled pairs, appends labeled pairs it lacks with
/// score 0 and reorders with a seeded tie break.
RankedPairList evaluation_order(const RankedPairList& ranked, const LabeledPairSet& labels,
                                std::uint64_t tie_seed);

struct EvaluationReport {
  std::vector<std::pair<std::size_t, double>> precision;  // (k, P@k)
  RankMetrics ranks;
  std::size_t labeled_pairs = 0;
  std::size_t unscored_pairs = 0;  // labeled pairs filled in with score 0
};

/// P@k for each k (k larger than the labeled set is skipped with a warning)
/// plus the reciprocal-rank metrics on evaluation_order(ranked, labels).
EvaluationReport evaluate(const RankedPairList& ranked, const LabeledPairSet& labels,
                          std::span<const std::size_t> ks, std::uint64_t tie_seed);

std::string serialize_report(const EvaluationReport& report);

}  // namespace hypermine
