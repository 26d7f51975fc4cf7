#pragma once

// Distributional-inclusion measures over a binary ContextIndex and the
// pairwise feature grid (contexts x measures).

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hypermine/context.hpp"

namespace hypermine {

enum class Measure : std::uint8_t {
  kWeedsPrec = 0,  // M1
  kInvCL = 1,      // M2
  kClarkeDiff = 2, // M3
  kOverlap = 3,    // M4
};

inline constexpr std::array<Measure, 4> kAllMeasures = {Measure::kWeedsPrec, Measure::kInvCL,
                                                       Measure::kClarkeDiff, Measure::kOverlap};

std::string measure_name(Measure m);  // "M1".."M4"
Measure parse_measure(std::string_view name);

struct DihScores {
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;

  double get(Measure m) const;
};

/// Size of the intersection of two sorted unit lists.
std::size_t intersection_size(std::span<const UnitId> a, std::span<const UnitId> b);

/// Scores for t1 -> t2 (t1 the candidate hypernym). With binary relevance,
/// a = |C_t1 ∩ C_t2|: M1 = a/|C_t2|, M2 = sqrt(a/|C_t2| * (1 - a/|C_t1|)),
/// M3 = a/|C_t2| - a/|C_t1|, M4 = a/|C|. Any 0/0 is 0.
DihScores dih_measures(const ContextIndex& ctx, TermId t1, TermId t2);

using TermPair = std::pair<TermId, TermId>;

struct TermPairHash {
  std::size_t operator()(const TermPair& p) const noexcept {
    return std::hash<std::uint64_t>()((static_cast<std::uint64_t>(p.first) << 32) | p.second);
  }
};

/// Pairwise feature vectors g_{t1 t2} in a fixed layout: contexts in
/// declaration order, measures in the given order within each context.
class PairwiseFeatures {
 public:
  PairwiseFeatures() = default;
  PairwiseFeatures(std::vector<std::string> context_ids, std::vector<Measure> measures);

  std::size_t dim() const noexcept { return context_ids_.size() * measures_.size(); }
  std::size_t size() const noexcept { return pairs_.size(); }
  const std::vector<std::string>& context_ids() const noexcept { return context_ids_; }
  const std::vector<Measure>& measures() const noexcept { return measures_; }
  const std::vector<TermPair>& pairs() const noexcept { return pairs_; }

  /// Column labels "<context-id>/<measure>" in layout order.
  std::vector<std::string> column_names() const;
  /// Stable hash of the layout, recorded in model checkpoints.
  std::string layout_fingerprint() const;

  void add(TermPair pair, std::span<const double> values);
  bool contains(TermPair pair) const { return index_.count(pair) != 0; }
  std::span<const double> at(TermPair pair) const;  // throws if absent
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_.data() + i * dim(), dim());
  }

  /// (pair, context) blocks where either term had no relevant unit.
  std::size_t missing_blocks() const noexcept { return missing_blocks_; }
  void add_missing_blocks(std::size_t n) noexcept { missing_blocks_ += n; }

 private:
  std::vector<std::string> context_ids_;
  std::vector<Measure> measures_;
  std::vector<TermPair> pairs_;
  std::vector<double> data_;
  std::unordered_map<TermPair, std::size_t, TermPairHash> index_;
  std::size_t missing_blocks_ = 0;
};

/// Computes g for every pair; parallel over pairs with `threads` workers,
/// output order equal to input order.
PairwiseFeatures compute_pairwise_features(std::span<const TermPair> pairs,
                                           std::span<const ContextIndex> contexts,
                                           std::span<const Measure> measures,
                                           std::size_t threads = 1);

/// All ordered pairs (t1 != t2) with M4 > 0 in at least one context.
std::vector<TermPair> cooccurring_pairs(std::span<const ContextIndex> contexts, std::size_t num_terms);

/// Header line then t1_surface, t2_surface and N values per row.
std::string serialize_features(const PairwiseFeatures& features, const Vocabulary& vocab);
PairwiseFeatures parse_features(std::string_view text, const Vocabulary& vocab,
                                const std::string& where = "features");
void write_features(const std::filesystem::path& path, const PairwiseFeatures& features,
                    const Vocabulary& vocab);
PairwiseFeatures read_features(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace hypermine
