#include "hypermine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hypermine/util.hpp"

namespace hypermine {

void SynthConfig::validate() const {
  if (depth == 0 || branching == 0) throw ValidationError("synth: depth and branching must be positive");
  if (terms_per_concept == 0) throw ValidationError("synth: terms_per_concept must be positive");
  if (!(p_anc >= 0.0 && p_anc <= 1.0)) throw ValidationError("synth: p_anc must lie in [0, 1]");
  if (!(hearst_fraction >= 0.0 && hearst_fraction <= 1.0)) {
    throw ValidationError("synth: hearst_fraction must lie in [0, 1]");
  }
  if (!(plural_probability >= 0.0 && plural_probability <= 1.0)) {
    throw ValidationError("synth: plural_probability must lie in [0, 1]");
  }
  if (docs_per_author == 0 || venues_per_area == 0 || years == 0) {
    throw ValidationError("synth: group sizes must be positive");
  }
  std::size_t concepts = 1, level = 1;
  for (std::size_t d = 0; d < depth; ++d) {
    level *= branching;
    concepts += level;
    if (concepts > 1000000) throw ValidationError("synth: tree too large");
  }
  if (documents < concepts) {
    throw ValidationError("synth: " + std::to_string(documents) + " documents cannot cover " +
                          std::to_string(concepts) + " concepts");
  }
  if (documents / docs_per_author == 0) throw ValidationError("synth: more documents per author than documents");
  if (branching * venues_per_area > documents) throw ValidationError("synth: more venues than documents");
}

bool SynthDataset::is_ancestor(std::size_t a, std::size_t c) const {
  while (c != parent[c]) {
    c = parent[c];
    if (c == a) return true;
  }
  return false;
}

std::vector<TermPair> SynthDataset::planted_edges() const {
  std::vector<TermPair> out;
  for (std::size_t c = 0; c < parent.size(); ++c) {
    if (parent[c] == c) continue;
    for (TermId p : concept_terms[parent[c]]) {
      for (TermId t : concept_terms[c]) out.emplace_back(p, t);
    }
  }
  return out;
}

namespace {

// Pronounceable words from consonant-vowel syllables. No 's' and no word
// ends in a consonant, so plural stripping can never create a collision.
class WordMaker {
 public:
  std::string make(Rng& rng) {
    static constexpr std::string_view kConsonants = "bdfgklmnprtvz";
    static constexpr std::string_view kVowels = "aeiou";
    while (true) {
      std::string word;
      const std::size_t syllables = 2 + uniform_index(rng, 2);
      for (std::size_t i = 0; i < syllables; ++i) {
        word += kConsonants[uniform_index(rng, kConsonants.size())];
        word += kVowels[uniform_index(rng, kVowels.size())];
      }
      if (used_.insert(word).second) return word;
    }
  }

 private:
  std::set<std::string> used_;
};

std::string pad(std::size_t i, std::size_t width = 5) {
  std::string s = std::to_string(i);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

SynthDataset generate_synthetic_hin(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SynthDataset out;

  // Concept tree, breadth first.
  out.parent.push_back(0);
  out.level.push_back(0);
  std::vector<std::vector<std::size_t>> children(1);
  for (std::size_t head = 0; head < out.parent.size(); ++head) {
    if (out.level[head] == config.depth) continue;
    for (std::size_t b = 0; b < config.branching; ++b) {
      std::size_t c = out.parent.size();
      out.parent.push_back(head);
      out.level.push_back(out.level[head] + 1);
      children.emplace_back();
      children[head].push_back(c);
    }
  }
  const std::size_t num_concepts = out.parent.size();
  auto path_to = [&](std::size_t c) {
    std::vector<std::size_t> path{c};
    while (path.back() != out.parent[path.back()]) path.push_back(out.parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
  };
  auto area_of = [&](std::size_t c) -> std::size_t {  // depth-1 ancestor index, or branching for the root
    if (c == 0) return config.branching;
    auto path = path_to(c);
    return path[1] - 1;
  };

  // Keywords. Term ids follow node ids, which follow concept order.
  WordMaker words;
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
  std::vector<std::vector<std::string>> concept_words(num_concepts);
  std::vector<std::vector<std::string>> concept_nodes(num_concepts);
  std::size_t keyword_count = 0;
  for (std::size_t c = 0; c < num_concepts; ++c) {
    for (std::size_t k = 0; k < config.terms_per_concept; ++k) {
      std::string word = words.make(rng);
      if (uniform_unit(rng) < 0.25) word += " " + words.make(rng);
      std::string id = "k" + pad(keyword_count++);
      nodes.push_back({id, "keyword", word, ""});
      concept_words[c].push_back(word);
      concept_nodes[c].push_back(id);
    }
  }

  // Papers: one per concept first, the rest uniform over concepts.
  std::vector<std::size_t> paper_concept(config.documents);
  for (std::size_t i = 0; i < config.documents; ++i) {
    paper_concept[i] = i < num_concepts ? i : uniform_index(rng, num_concepts);
  }
  std::vector<std::vector<std::size_t>> papers_of(num_concepts);
  for (std::size_t i = 0; i < config.documents; ++i) papers_of[paper_concept[i]].push_back(i);
  std::vector<std::vector<std::size_t>> subtree_papers(num_concepts);
  for (std::size_t c = 0; c < num_concepts; ++c) {
    for (std::size_t a : path_to(c)) {
      subtree_papers[a].insert(subtree_papers[a].end(), papers_of[c].begin(), papers_of[c].end());
    }
  }

  auto paper_id = [&](std::size_t i) { return "p" + pad(i); };
  std::vector<std::vector<std::size_t>> paper_tags(config.documents);  // concepts mentioned
  for (std::size_t i = 0; i < config.documents; ++i) {
    nodes.push_back({paper_id(i), "paper", "", ""});
    std::size_t c = paper_concept[i];
    paper_tags[i].push_back(c);
    for (std::size_t a = c; a != out.parent[a];) {
      a = out.parent[a];
      if (uniform_unit(rng) < config.p_anc) paper_tags[i].push_back(a);
    }
    for (std::size_t t : paper_tags[i]) {
      for (const auto& kw : concept_nodes[t]) edges.push_back({paper_id(i), kw, "mentions", ""});
    }
  }

  // Authors.
  const std::size_t num_authors = config.documents / config.docs_per_author;
  for (std::size_t a = 0; a < num_authors; ++a) {
    std::string id = "a" + pad(a);
    nodes.push_back({id, "author", "", ""});
    std::size_t anchor = uniform_index(rng, num_concepts);
    std::set<std::size_t> written;
    for (std::size_t c : path_to(anchor)) {
      written.insert(papers_of[c][uniform_index(rng, papers_of[c].size())]);
    }
    const auto& pool = subtree_papers[anchor];
    for (std::size_t tries = 0; written.size() < config.docs_per_author && tries < 4 * config.docs_per_author;
         ++tries) {
      written.insert(pool[uniform_index(rng, pool.size())]);
    }
    for (std::size_t p : written) edges.push_back({id, paper_id(p), "writes", ""});
  }

  // Venues per top-level area (plus one area for root papers), years at random.
  const std::size_t areas = config.branching + 1;
  for (std::size_t v = 0; v < areas * config.venues_per_area; ++v) nodes.push_back({"v" + pad(v, 3), "venue", "", ""});
  for (std::size_t y = 0; y < config.years; ++y) nodes.push_back({"y" + std::to_string(2000 + y), "year", "", ""});
  for (std::size_t i = 0; i < config.documents; ++i) {
    std::size_t v = area_of(paper_concept[i]) * config.venues_per_area + uniform_index(rng, config.venues_per_area);
    edges.push_back({paper_id(i), "v" + pad(v, 3), "published_in", ""});
    edges.push_back({paper_id(i), "y" + std::to_string(2000 + uniform_index(rng, config.years)), "published_year", ""});
  }

  Schema schema;
  schema.node_types = {"keyword", "paper", "author", "venue", "year"};
  schema.edge_types = {{"mentions", "paper", "keyword"},
                       {"writes", "author", "paper"},
                       {"published_in", "paper", "venue"},
                       {"published_year", "paper", "year"}};
  out.graph = HinGraph::build(std::move(schema), nodes, edges);
  out.vocab = target_vocabulary(out.graph, kSynthTargetType);
  out.concept_terms.resize(num_concepts);
  for (std::size_t c = 0; c < num_concepts; ++c) {
    for (const auto& id : concept_nodes[c]) {
      out.concept_terms[c].push_back(*out.vocab.find_node(out.graph.index_of(id)));
    }
  }

  // Corpus: pattern-free filler per paper, then pattern sentences for a
  // sample of true pairs placed in a paper of the hyponym's concept.
  out.corpus.documents.resize(config.documents);
  static constexpr const char* kFiller[] = {"we study {} in this work .", "this paper reports results on {} .",
                                            "{} is discussed in detail .", "experiments with {} are presented ."};
  auto fill = [](std::string tmpl, const std::string& a) {
    auto at = tmpl.find("{}");
    return tmpl.replace(at, 2, a);
  };
  for (std::size_t i = 0; i < config.documents; ++i) {
    auto& doc = out.corpus.documents[i];
    doc.owner = paper_id(i);
    for (std::size_t s = 0; s < config.filler_sentences; ++s) {
      const auto& tags = paper_tags[i];
      std::size_t c = tags[uniform_index(rng, tags.size())];
      const auto& word = concept_words[c][uniform_index(rng, concept_words[c].size())];
      doc.sentences.push_back(tokenize(fill(kFiller[uniform_index(rng, 4)], word)));
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> concept_pairs;  // (ancestor, descendant)
  for (std::size_t c = 0; c < num_concepts; ++c) {
    for (std::size_t a = c; a != out.parent[a];) {
      a = out.parent[a];
      concept_pairs.emplace_back(a, c);
    }
  }
  std::sort(concept_pairs.begin(), concept_pairs.end());
  static constexpr const char* kPatterns[] = {"{Y} such as {X} .",  "such {Y} as {X} .",    "{X} and other {Y} .",
                                              "{X} or other {Y} .", "{Y} including {X} .", "{Y} , especially {X} ."};
  for (const auto& [a, c] : concept_pairs) {
    if (uniform_unit(rng) >= config.hearst_fraction) continue;
    std::string y = concept_words[a][uniform_index(rng, concept_words[a].size())];
    std::string x = concept_words[c][uniform_index(rng, concept_words[c].size())];
    if (uniform_unit(rng) < config.plural_probability) y += "s";
    std::string sentence = kPatterns[uniform_index(rng, 6)];
    sentence.replace(sentence.find("{Y}"), 3, y);
    sentence.replace(sentence.find("{X}"), 3, x);
    std::size_t paper = papers_of[c][uniform_index(rng, papers_of[c].size())];
    out.corpus.documents[paper].sentences.push_back(tokenize(sentence));
    ++out.hearst_pairs;
  }

  // Labels: every ancestor-descendant term pair, plus corruptions.
  std::set<TermPair> positive;
  for (const auto& [a, c] : concept_pairs) {
    for (TermId p : out.concept_terms[a]) {
      for (TermId t : out.concept_terms[c]) positive.emplace(p, t);
    }
  }
  for (const auto& p : positive) out.labels.add(p, true);
  const std::size_t n_terms = out.vocab.size();
  for (const auto& [hyper, hypo] : positive) {
    for (int side = 0; side < 2; ++side) {
      std::size_t made = 0;
      for (std::size_t tries = 0; made < config.negatives_per_side && tries < 50 * config.negatives_per_side;
           ++tries) {
        TermId t = static_cast<TermId>(uniform_index(rng, n_terms));
        TermPair cand = side == 0 ? TermPair{hyper, t} : TermPair{t, hypo};
        if (cand.first == cand.second || positive.count(cand) || out.labels.contains(cand)) continue;
        out.labels.add(cand, false);
        ++made;
      }
    }
  }
  return out;
}

void write_synthetic(const SynthDataset& data, const std::filesystem::path& dir) {
  write_graph_dir(data.graph, dir);
  write_file(dir / "corpus.jsonl", serialize_corpus(data.corpus));
  write_labels(dir / "labels.tsv", data.labels, data.vocab);
  std::string tree;
  for (const auto& [p, c] : data.planted_edges()) {
    tree += data.vocab[p].surface + '\t' + data.vocab[c].surface + '\n';
  }
  write_file(dir / "tree.tsv", tree);
}

}  // namespace hypermine
