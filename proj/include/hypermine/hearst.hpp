#pragma once

// Weak supervision: hypernym/hyponym pairs mined from the corpus with the
// classic lexico-syntactic patterns.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hypermine/hin.hpp"

namespace hypermine {

enum class HearstPattern : std::uint8_t {
  kSuchAs = 0,     // Y such as X1, X2 and X3
  kSuchYAs = 1,    // such Y as X1, X2
  kOrOther = 2,    // X1, X2 or other Y
  kAndOther = 3,   // X1, X2 and other Y
  kIncluding = 4,  // Y including X1, X2
  kEspecially = 5, // Y especially X1, X2
};

class PatternSet {
 public:
  static PatternSet all();
  static PatternSet none() { return PatternSet(0); }
  /// "default" (all six) or a comma-separated list of
  /// such_as, such_y_as, or_other, and_other, including, especially.
  static PatternSet parse(std::string_view spec);

  PatternSet with(HearstPattern p) const { return PatternSet(bits_ | bit(p)); }
  bool contains(HearstPattern p) const { return (bits_ & bit(p)) != 0; }

 private:
  explicit PatternSet(std::uint8_t bits) : bits_(bits) {}
  static std::uint8_t bit(HearstPattern p) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(p)); }
  std::uint8_t bits_;
};

struct SeedPair {
  TermId hypernym = 0;
  TermId hyponym = 0;
  std::uint64_t count = 0;
  bool operator==(const SeedPair&) const = default;
};

/// Weak-supervision pair list S. Kept sorted by (hypernym, hyponym); no
/// duplicates and no self-pairs.
class SeedPairSet {
 public:
  SeedPairSet() = default;

  /// Adds `count` occurrences; merges with an existing entry. Self-pairs are
  /// rejected with ValidationError.
  void add(TermId hypernym, TermId hyponym, std::uint64_t count = 1);

  bool contains(TermId hypernym, TermId hyponym) const;
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const std::vector<SeedPair>& pairs() const noexcept { return pairs_; }

  /// Distinct terms appearing on either side, ascending.
  std::vector<TermId> terms() const;

  bool operator==(const SeedPairSet& other) const { return pairs_ == other.pairs_; }

 private:
  std::vector<SeedPair> pairs_;
};

/// Runs the enabled patterns over every sentence. Slots are matched against
/// the vocabulary with greedy longest multi-token lookup; naive plural
/// stripping ("-s", "-es", "-ies" to "-y") is applied to the last token
/// when the exact form is not a term.
SeedPairSet extract_seed_pairs(const Corpus& corpus, const Vocabulary& vocab,
                               const PatternSet& patterns);

/// Pairs found in a single tokenized sentence, one entry per match.
std::vector<SeedPair> extract_from_sentence(std::span<const std::string> tokens,
                                            const Vocabulary& vocab,
                                            const PatternSet& patterns);

/// Partitions S into k folds whose sizes differ by at most one.
std::vector<SeedPairSet> split_folds(const SeedPairSet& seeds, std::size_t k, std::uint64_t seed);

std::string serialize_seeds(const SeedPairSet& seeds, const Vocabulary& vocab);
SeedPairSet parse_seeds(std::string_view tsv, const Vocabulary& vocab,
                        const std::string& where = "seeds");
void write_seeds(const std::filesystem::path& path, const SeedPairSet& seeds, const Vocabulary& vocab);
SeedPairSet read_seeds(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace hypermine
