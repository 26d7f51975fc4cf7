#include "hypermine/taxonomy.hpp"

#include <algorithm>
#include <json.hpp>
#include <map>
#include <set>
#include <unordered_map>

#include "hypermine/log.hpp"

namespace hypermine {

namespace {

std::vector<TermId> select_terms(const RankedPairList& ranked, std::size_t top_terms,
                                 std::span<const TermId> popular_terms) {
  std::vector<TermId> order;
  if (!popular_terms.empty()) {
    std::set<TermId> seen;
    for (TermId t : popular_terms) {
      if (seen.insert(t).second) order.push_back(t);
    }
  } else {
    std::map<TermId, std::size_t> count;
    for (const auto& r : ranked) {
      ++count[r.pair.first];
      ++count[r.pair.second];
    }
    for (const auto& [t, c] : count) order.push_back(t);
    std::stable_sort(order.begin(), order.end(),
                     [&](TermId a, TermId b) { return count[a] > count[b]; });
  }
  if (order.size() > top_terms) order.resize(top_terms);
  std::sort(order.begin(), order.end());
  return order;
}

// Index of a node within the sorted node list.
std::size_t slot(std::span<const TermId> nodes, TermId t) {
  return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), t) - nodes.begin());
}

// Out-edge lists (edge indices) ordered by target then edge index.
std::vector<std::vector<std::size_t>> out_edges(std::span<const TermId> nodes,
                                                std::span<const TaxonomyEdge> edges) {
  std::vector<std::vector<std::size_t>> out(nodes.size());
  for (std::size_t e = 0; e < edges.size(); ++e) out[slot(nodes, edges[e].hypernym)].push_back(e);
  for (auto& list : out) {
    std::stable_sort(list.begin(), list.end(),
                     [&](std::size_t a, std::size_t b) { return edges[a].hyponym < edges[b].hyponym; });
  }
  return out;
}

}  // namespace

std::vector<std::size_t> find_cycle(std::span<const TermId> nodes, std::span<const TaxonomyEdge> edges) {
  const auto out = out_edges(nodes, edges);
  enum : std::uint8_t { kWhite, kGray, kBlack };
  std::vector<std::uint8_t> color(nodes.size(), kWhite);
  std::vector<std::size_t> via(nodes.size(), 0);  // edge that reached the node

  struct Frame {
    std::size_t node;
    std::size_t next;
  };
  for (std::size_t root = 0; root < nodes.size(); ++root) {
    if (color[root] != kWhite) continue;
    std::vector<Frame> stack{{root, 0}};
    color[root] = kGray;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next == out[f.node].size()) {
        color[f.node] = kBlack;
        stack.pop_back();
        continue;
      }
      std::size_t e = out[f.node][f.next++];
      std::size_t v = slot(nodes, edges[e].hyponym);
      if (color[v] == kGray) {
        // Back edge: walk the tree edges from f.node up to v.
        std::vector<std::size_t> cycle{e};
        for (std::size_t u = f.node; u != v;) {
          cycle.push_back(via[u]);
          u = slot(nodes, edges[via[u]].hypernym);
        }
        std::reverse(cycle.begin(), cycle.end());
        return cycle;
      }
      if (color[v] == kWhite) {
        color[v] = kGray;
        via[v] = e;
        stack.push_back({v, 0});
      }
    }
  }
  return {};
}

bool is_acyclic(std::span<const TermId> nodes, std::span<const TaxonomyEdge> edges) {
  std::vector<std::size_t> indegree(nodes.size(), 0);
  const auto out = out_edges(nodes, edges);
  for (const auto& e : edges) ++indegree[slot(nodes, e.hyponym)];
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    std::size_t u = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t e : out[u]) {
      if (--indegree[slot(nodes, edges[e].hyponym)] == 0) ready.push_back(slot(nodes, edges[e].hyponym));
    }
  }
  return visited == nodes.size();
}

TaxonomyDag build_taxonomy(const RankedPairList& ranked, const TaxonomyConfig& config,
                           std::span<const TermId> popular_terms) {
  if (config.top_terms == 0 || config.top_edges == 0) {
    throw ValidationError("taxonomy: top_terms and top_edges must be positive");
  }
  if (ranked.empty()) throw ValidationError("taxonomy: empty ranked list");

  const auto terms = select_terms(ranked, config.top_terms, popular_terms);
  auto kept = [&](TermId t) { return std::binary_search(terms.begin(), terms.end(), t); };

  // Ranked lists are already in descending score order; re-sort stably in
  // case a caller passes something else.
  std::vector<TaxonomyEdge> edges;
  std::set<TermPair> seen;
  for (const auto& r : ranked) {
    if (r.pair.first == r.pair.second || !kept(r.pair.first) || !kept(r.pair.second)) continue;
    if (!seen.insert(r.pair).second) continue;
    edges.push_back({r.pair.first, r.pair.second, r.score});
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const TaxonomyEdge& a, const TaxonomyEdge& b) { return a.score > b.score; });
  if (edges.size() > config.top_edges) edges.resize(config.top_edges);

  TaxonomyDag dag;
  dag.pruned_edges = edges.size();
  for (const auto& e : edges) {
    dag.nodes.push_back(e.hypernym);
    dag.nodes.push_back(e.hyponym);
  }
  std::sort(dag.nodes.begin(), dag.nodes.end());
  dag.nodes.erase(std::unique(dag.nodes.begin(), dag.nodes.end()), dag.nodes.end());
  if (edges.empty()) {
    log::warn("taxonomy is empty after pruning");
    return dag;
  }

  Rng rng(config.seed);
  while (true) {
    auto cycle = find_cycle(dag.nodes, edges);
    if (cycle.empty()) break;
    std::size_t pick = 0;
    if (config.removal == RemovalPolicy::kUniform) {
      pick = uniform_index(rng, cycle.size());
    } else {
      // Rank cycle edges by descending score; weight i+1 for rank i.
      std::vector<std::size_t> by_score(cycle.size());
      for (std::size_t i = 0; i < cycle.size(); ++i) by_score[i] = i;
      std::stable_sort(by_score.begin(), by_score.end(), [&](std::size_t a, std::size_t b) {
        return edges[cycle[a]].score > edges[cycle[b]].score;
      });
      const std::size_t total = cycle.size() * (cycle.size() + 1) / 2;
      std::size_t draw = uniform_index(rng, total);
      for (std::size_t i = 0; i < by_score.size(); ++i) {
        if (draw < i + 1) {
          pick = by_score[i];
          break;
        }
        draw -= i + 1;
      }
    }
    const std::size_t e = cycle[pick];
    dag.removed_edges.push_back(edges[e]);
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(e));
  }
  dag.edges = std::move(edges);
  return dag;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string taxonomy_to_dot(const TaxonomyDag& dag, const Vocabulary& vocab) {
  std::string out = "digraph taxonomy {\n";
  for (TermId t : dag.nodes) {
    out += "  n" + std::to_string(t) + " [label=\"" + dot_escape(vocab[t].surface) + "\"];\n";
  }
  for (const auto& e : dag.edges) {
    out += "  n" + std::to_string(e.hypernym) + " -> n" + std::to_string(e.hyponym) + " [score=\"" +
           format_double(e.score) + "\"];\n";
  }
  out += "}\n";
  return out;
}

std::string taxonomy_to_json(const TaxonomyDag& dag, const Vocabulary& vocab) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::json::array();
  for (TermId t : dag.nodes) doc["nodes"].push_back(vocab[t].surface);
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : dag.edges) {
    doc["edges"].push_back(nlohmann::ordered_json{
        {"hypernym", vocab[e.hypernym].surface}, {"hyponym", vocab[e.hyponym].surface}, {"score", e.score}});
  }
  doc["removed_edges"] = dag.removed_edges.size();
  return doc.dump(2) + "\n";
}

std::string removed_edges_tsv(const TaxonomyDag& dag, const Vocabulary& vocab) {
  std::string out;
  for (const auto& e : dag.removed_edges) {
    out += vocab[e.hypernym].surface + '\t' + vocab[e.hyponym].surface + '\t' + format_double(e.score) + '\n';
  }
  return out;
}

}  // namespace hypermine
