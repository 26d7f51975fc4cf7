#include "hypermine/context.hpp"

#include <algorithm>
#include <json.hpp>

#include "hypermine/kmeans.hpp"
#include "hypermine/util.hpp"

namespace hypermine {

using json = nlohmann::json;

ContextSpec ContextSpec::parse(std::string_view text) {
  ContextSpec spec;
  if (text == "simplest") return spec;
  auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ValidationError("invalid context spec '" + std::string(text) + "'");
  }
  auto head = text.substr(0, colon);
  auto arg = text.substr(colon + 1);
  if (head == "groupby" && !arg.empty()) {
    spec.kind = ContextKind::kGroupBy;
    spec.group_type = std::string(arg);
    return spec;
  }
  if (head == "cluster" && !arg.empty()) {
    spec.kind = ContextKind::kCluster;
    long long k = parse_int(arg, "context spec '" + std::string(text) + "'");
    if (k <= 0) throw ValidationError("cluster count must be positive in '" + std::string(text) + "'");
    spec.clusters = static_cast<std::size_t>(k);
    return spec;
  }
  throw ValidationError("invalid context spec '" + std::string(text) + "'");
}

std::string ContextSpec::label() const {
  switch (kind) {
    case ContextKind::kSimplest:
      return "simplest";
    case ContextKind::kGroupBy:
      return "groupby:" + group_type;
    case ContextKind::kCluster:
      return "cluster:" + std::to_string(clusters);
  }
  return "";
}

ContextIndex::ContextIndex(std::string id, std::vector<std::string> units,
                           std::vector<std::vector<UnitId>> postings)
    : id_(std::move(id)), units_(std::move(units)), postings_(std::move(postings)) {
  if (units_.empty()) throw ValidationError("empty context: " + id_ + " has no units");
  for (auto& list : postings_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (!list.empty() && list.back() >= units_.size()) {
      throw ValidationError("context " + id_ + ": posting references unit " +
                            std::to_string(list.back()) + " out of range");
    }
  }
}

std::span<const UnitId> ContextIndex::relevant(TermId t) const {
  if (t >= postings_.size()) return {};
  return postings_[t];
}

namespace {

struct SimplestLayout {
  std::vector<NodeIndex> unit_nodes;
  std::vector<std::vector<UnitId>> postings;
};

SimplestLayout simplest_layout(const HinGraph& graph, const Vocabulary& vocab,
                               std::string_view target_type) {
  TypeIndex target = graph.require_node_type(target_type);
  std::vector<NodeIndex> units;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    auto node = static_cast<NodeIndex>(i);
    if (graph.node(node).type == target) continue;
    for (const auto& nb : graph.neighbors(node)) {
      if (graph.node(nb.node).type == target) {
        units.push_back(node);
        break;
      }
    }
  }
  std::sort(units.begin(), units.end(),
            [&](NodeIndex a, NodeIndex b) { return graph.node(a).id < graph.node(b).id; });

  SimplestLayout layout;
  layout.unit_nodes = units;
  layout.postings.resize(vocab.size());
  std::unordered_map<NodeIndex, UnitId> unit_of;
  for (std::size_t u = 0; u < units.size(); ++u) unit_of.emplace(units[u], static_cast<UnitId>(u));
  for (const auto& term : vocab.terms()) {
    for (const auto& nb : graph.neighbors(term.node)) {
      auto it = unit_of.find(nb.node);
      if (it != unit_of.end()) layout.postings[term.id].push_back(it->second);
    }
  }
  return layout;
}

}  // namespace

ContextIndex build_simplest(const HinGraph& graph, const Vocabulary& vocab,
                            std::string_view target_type) {
  auto layout = simplest_layout(graph, vocab, target_type);
  if (layout.unit_nodes.empty()) {
    throw ValidationError("empty context: no node is linked to a " + std::string(target_type) + " node");
  }
  std::vector<std::string> labels;
  labels.reserve(layout.unit_nodes.size());
  for (auto n : layout.unit_nodes) labels.push_back(graph.node(n).id);
  return ContextIndex("simplest", std::move(labels), std::move(layout.postings));
}

ContextIndex lift_context(const ContextIndex& base, std::string id,
                          std::vector<std::string> unit_labels,
                          const std::vector<std::vector<UnitId>>& members) {
  if (unit_labels.size() != members.size()) throw Error("lift_context: label/member size mismatch");
  // Invert base postings: unit -> terms.
  std::vector<std::vector<TermId>> terms_of(base.total_units());
  for (TermId t = 0; t < base.num_terms(); ++t) {
    for (UnitId u : base.relevant(t)) terms_of[u].push_back(t);
  }
  std::vector<std::vector<UnitId>> postings(base.num_terms());
  for (std::size_t g = 0; g < members.size(); ++g) {
    for (UnitId u : members[g]) {
      for (TermId t : terms_of.at(u)) postings[t].push_back(static_cast<UnitId>(g));
    }
  }
  return ContextIndex(std::move(id), std::move(unit_labels), std::move(postings));
}

ContextIndex build_group_by(const HinGraph& graph, const Vocabulary& vocab,
                            std::string_view target_type, std::string_view group_type) {
  TypeIndex group = graph.require_node_type(group_type);
  if (group_type == target_type) {
    throw ValidationError("groupby type must differ from the target type");
  }
  auto layout = simplest_layout(graph, vocab, target_type);
  if (layout.unit_nodes.empty()) {
    throw ValidationError("empty context: no node is linked to a " + std::string(target_type) + " node");
  }
  std::unordered_map<NodeIndex, UnitId> unit_of;
  for (std::size_t u = 0; u < layout.unit_nodes.size(); ++u) {
    unit_of.emplace(layout.unit_nodes[u], static_cast<UnitId>(u));
  }
  std::vector<std::string> base_labels;
  for (auto n : layout.unit_nodes) base_labels.push_back(graph.node(n).id);
  ContextIndex base("simplest", std::move(base_labels), std::move(layout.postings));

  auto groups = graph.nodes_of_type(group);
  if (groups.empty()) {
    throw ValidationError("empty context: no nodes of type " + std::string(group_type));
  }
  std::vector<std::string> labels;
  std::vector<std::vector<UnitId>> members(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    labels.push_back(graph.node(groups[g]).id);
    for (const auto& nb : graph.neighbors(groups[g])) {
      auto it = unit_of.find(nb.node);
      if (it != unit_of.end()) members[g].push_back(it->second);
    }
  }
  return lift_context(base, "groupby:" + std::string(group_type), std::move(labels), members);
}

ContextIndex build_cluster(const ContextIndex& simplest, const NodeEmbeddings& vectors,
                           std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  const std::size_t n = simplest.total_units();
  const std::size_t dim = vectors.dim();
  std::vector<double> data;
  data.reserve(n * dim);
  for (const auto& unit : simplest.units()) {
    if (!vectors.contains(unit)) {
      throw ValidationError("build_cluster: missing vector for unit " + unit);
    }
    auto row = vectors.at(unit);
    data.insert(data.end(), row.begin(), row.end());
  }
  auto result = kmeans(data, dim, k, seed, max_iters);

  // Renumber non-empty clusters in cluster-index order.
  std::vector<std::vector<UnitId>> by_cluster(k);
  for (std::size_t u = 0; u < n; ++u) by_cluster[result.assignment[u]].push_back(static_cast<UnitId>(u));
  std::vector<std::vector<UnitId>> members;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < k; ++c) {
    if (by_cluster[c].empty()) continue;
    labels.push_back("cluster" + std::to_string(c));
    members.push_back(std::move(by_cluster[c]));
  }
  return lift_context(simplest, "cluster:" + std::to_string(k), std::move(labels), members);
}

ContextIndex build_context(const ContextSpec& spec, const HinGraph& graph, const Vocabulary& vocab,
                           std::string_view target_type, const ContextIndex* simplest,
                           const NodeEmbeddings* vectors, std::uint64_t seed) {
  switch (spec.kind) {
    case ContextKind::kSimplest:
      return build_simplest(graph, vocab, target_type);
    case ContextKind::kGroupBy:
      return build_group_by(graph, vocab, target_type, spec.group_type);
    case ContextKind::kCluster: {
      if (vectors == nullptr) throw ValidationError(spec.label() + " requires node vectors");
      if (simplest != nullptr) return build_cluster(*simplest, *vectors, spec.clusters, seed);
      auto base = build_simplest(graph, vocab, target_type);
      return build_cluster(base, *vectors, spec.clusters, seed);
    }
  }
  throw Error("unreachable context kind");
}

std::string serialize_context(const ContextIndex& ctx, const Vocabulary& vocab) {
  std::string out;
  json header{{"context_id", ctx.id()},
              {"total_units", ctx.total_units()},
              {"num_terms", ctx.num_terms()},
              {"units", ctx.units()}};
  out += header.dump() + "\n";
  for (TermId t = 0; t < ctx.num_terms(); ++t) {
    auto rel = ctx.relevant(t);
    json line{{"term_id", t},
              {"term", t < vocab.size() ? vocab[t].surface : std::string()},
              {"units", std::vector<UnitId>(rel.begin(), rel.end())}};
    out += line.dump() + "\n";
  }
  return out;
}

ContextIndex parse_context(std::string_view text, const std::string& where) {
  auto lines = split(text, '\n');
  if (lines.empty() || lines[0].empty()) throw ParseError(where + ": missing header");
  try {
    json header = json::parse(lines[0]);
    auto id = header.at("context_id").get<std::string>();
    auto units = header.at("units").get<std::vector<std::string>>();
    auto num_terms = header.at("num_terms").get<std::size_t>();
    if (header.at("total_units").get<std::size_t>() != units.size()) {
      throw ParseError(where + ": total_units does not match unit list");
    }
    std::vector<std::vector<UnitId>> postings(num_terms);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      json line = json::parse(lines[i]);
      auto t = line.at("term_id").get<std::size_t>();
      if (t >= num_terms) throw ParseError(where + ":" + std::to_string(i + 1) + ": term_id out of range");
      postings[t] = line.at("units").get<std::vector<UnitId>>();
    }
    return ContextIndex(std::move(id), std::move(units), std::move(postings));
  } catch (const json::exception& ex) {
    throw ParseError(where + ": " + ex.what());
  }
}

void write_context(const std::filesystem::path& path, const ContextIndex& ctx, const Vocabulary& vocab) {
  write_file(path, serialize_context(ctx, vocab));
}

ContextIndex read_context(const std::filesystem::path& path) {
  return parse_context(read_file(path), path.filename().string());
}

}  // namespace hypermine
