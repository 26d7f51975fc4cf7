#pragma once

// Context domains at several granularities: Simplest (every neighbor of a
// term node is a unit), GroupBy(type) and Cluster(K) built on top of it.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypermine/embedding.hpp"
#include "hypermine/hin.hpp"

namespace hypermine {

using UnitId = std::uint32_t;

enum class ContextKind { kSimplest, kGroupBy, kCluster };

/// Parsed form of `simplest`, `groupby:<node_type>` or `cluster:<K>`.
struct ContextSpec {
  ContextKind kind = ContextKind::kSimplest;
  std::string group_type;
  std::size_t clusters = 0;

  static ContextSpec parse(std::string_view text);
  std::string label() const;
  bool operator==(const ContextSpec&) const = default;
};

/// Binary term-to-unit relevance for one context definition.
class ContextIndex {
 public:
  ContextIndex() = default;
  /// `postings[t]` lists the units relevant to term t; each list is sorted
  /// and deduplicated on construction.
  ContextIndex(std::string id, std::vector<std::string> units,
               std::vector<std::vector<UnitId>> postings);

  const std::string& id() const noexcept { return id_; }
  std::size_t total_units() const noexcept { return units_.size(); }
  std::size_t num_terms() const noexcept { return postings_.size(); }
  const std::string& unit(UnitId u) const { return units_.at(u); }
  const std::vector<std::string>& units() const noexcept { return units_; }

  /// Relevant units of t (C_t). Empty for terms this context does not cover.
  std::span<const UnitId> relevant(TermId t) const;
  bool covers(TermId t) const { return t < postings_.size() && !postings_[t].empty(); }

  bool operator==(const ContextIndex& other) const {
    return id_ == other.id_ && units_ == other.units_ && postings_ == other.postings_;
  }

 private:
  std::string id_;
  std::vector<std::string> units_;
  std::vector<std::vector<UnitId>> postings_;
};

/// Every non-target node adjacent to a target node is a unit; units are
/// ordered by node id.
ContextIndex build_simplest(const HinGraph& graph, const Vocabulary& vocab,
                            std::string_view target_type);

/// One unit per `group_type` node; a term is relevant to a group when it is
/// relevant to at least one Simplest unit adjacent to the group node.
ContextIndex build_group_by(const HinGraph& graph, const Vocabulary& vocab,
                            std::string_view target_type, std::string_view group_type);

/// K-means over the Simplest units' vectors; one unit per non-empty cluster.
ContextIndex build_cluster(const ContextIndex& simplest, const NodeEmbeddings& vectors,
                           std::size_t k, std::uint64_t seed, std::size_t max_iters = 100);

/// Builds a context from its spec. `simplest` and `vectors` are only needed
/// for cluster specs (pass nullptr otherwise).
ContextIndex build_context(const ContextSpec& spec, const HinGraph& graph, const Vocabulary& vocab,
                           std::string_view target_type, const ContextIndex* simplest,
                           const NodeEmbeddings* vectors, std::uint64_t seed);

/// Lifts relevance from `base` onto merged units: `members[g]` lists the base
/// units merged into new unit g.
ContextIndex lift_context(const ContextIndex& base, std::string id,
                          std::vector<std::string> unit_labels,
                          const std::vector<std::vector<UnitId>>& members);

/// JSON-lines: a header object then one posting list per term.
std::string serialize_context(const ContextIndex& ctx, const Vocabulary& vocab);
ContextIndex parse_context(std::string_view text, const std::string& where = "context");
void write_context(const std::filesystem::path& path, const ContextIndex& ctx, const Vocabulary& vocab);
ContextIndex read_context(const std::filesystem::path& path);

}  // namespace hypermine
