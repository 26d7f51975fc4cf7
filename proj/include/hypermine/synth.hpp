#pragma once

// Synthetic text-rich HIN with a planted concept tree.
//
// Node types: keyword (the terms), paper, author, venue, year. Each paper
// belongs to one concept, mentions that concept's keywords and each ancestor's
// keywords independently with probability p_anc. Authors are anchored at a
// concept: they write one paper on every concept from the root down to the
// anchor and the rest from the anchor's subtree, so authors group papers
// along root-to-subtree paths. Venues group papers by top-level subtree;
// years are random and carry no hierarchy signal.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hypermine/hin.hpp"
#include "hypermine/metrics.hpp"

namespace hypermine {

struct SynthConfig {
  std::size_t depth = 3;      // levels below the root
  std::size_t branching = 3;
  std::size_t terms_per_concept = 1;
  std::size_t documents = 2000;
  double p_anc = 0.0;
  std::size_t docs_per_author = 8;
  std::size_t venues_per_area = 2;
  std::size_t years = 10;
  double hearst_fraction = 0.2;       // share of positive pairs given a pattern sentence
  double plural_probability = 0.3;    // pattern sentences with a plural hypernym
  std::size_t filler_sentences = 2;   // pattern-free sentences per paper
  std::size_t negatives_per_side = 5; // corruptions per positive and slot
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthDataset {
  HinGraph graph;
  Corpus corpus;
  Vocabulary vocab;  // keyword vocabulary
  LabeledPairSet labels;
  std::vector<std::size_t> parent;                // concept -> parent (root maps to itself)
  std::vector<std::size_t> level;                 // concept depth, root 0
  std::vector<std::vector<TermId>> concept_terms; // concept -> term ids
  std::size_t hearst_pairs = 0;                   // positive pairs given a pattern sentence

  std::size_t num_concepts() const noexcept { return parent.size(); }
  bool is_ancestor(std::size_t a, std::size_t c) const;  // strict
  /// (parent term, child term) for every planted tree edge.
  std::vector<TermPair> planted_edges() const;
};

inline constexpr const char* kSynthTargetType = "keyword";

SynthDataset generate_synthetic_hin(const SynthConfig& config);

/// nodes.tsv, edges.tsv, schema.json, corpus.jsonl, labels.tsv and the
/// planted tree as tree.tsv (parent, child surfaces).
void write_synthetic(const SynthDataset& data, const std::filesystem::path& dir);

}  // namespace hypermine
