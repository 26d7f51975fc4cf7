#pragma once

// Taxonomy DAG from the top-scored pairs: prune to popular terms and the
// highest-scoring edges, then break cycles one random edge at a time.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hypermine/model.hpp"

namespace hypermine {

inline constexpr std::size_t kDefaultTopTerms = 500;
inline constexpr std::size_t kDefaultTopEdges = 5000;

struct TaxonomyEdge {
  TermId hypernym = 0;
  TermId hyponym = 0;
  double score = 0.0;
  bool operator==(const TaxonomyEdge&) const = default;
};

enum class RemovalPolicy {
  kUniform,          // every edge of the found cycle equally likely
  kLowScoreWeighted, // the i-th best edge of an m-edge cycle has weight i
};

struct TaxonomyConfig {
  std::size_t top_terms = kDefaultTopTerms;
  std::size_t top_edges = kDefaultTopEdges;
  std::uint64_t seed = 0;
  RemovalPolicy removal = RemovalPolicy::kUniform;
};

struct TaxonomyDag {
  std::vector<TermId> nodes;               // sorted; endpoints of the pruned edges
  std::vector<TaxonomyEdge> edges;         // retained, in descending score order
  std::vector<TaxonomyEdge> removed_edges; // in removal order
  std::size_t pruned_edges = 0;            // edges kept by pruning (= edges + removed)
};

/// `popular_terms`, when non-empty, replaces participation counts as the
/// term popularity order (most popular first).
TaxonomyDag build_taxonomy(const RankedPairList& ranked, const TaxonomyConfig& config,
                           std::span<const TermId> popular_terms = {});

/// Edges of the first cycle found by DFS (nodes and out-edges visited in
/// ascending order), or empty when acyclic. Each element indexes `edges`.
std::vector<std::size_t> find_cycle(std::span<const TermId> nodes, std::span<const TaxonomyEdge> edges);

/// Kahn's algorithm.
bool is_acyclic(std::span<const TermId> nodes, std::span<const TaxonomyEdge> edges);

std::string taxonomy_to_dot(const TaxonomyDag& dag, const Vocabulary& vocab);
std::string taxonomy_to_json(const TaxonomyDag& dag, const Vocabulary& vocab);
std::string removed_edges_tsv(const TaxonomyDag& dag, const Vocabulary& vocab);

}  // namespace hypermine
