#include "hypermine/hin.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <sstream>

#include "hypermine/log.hpp"
#include "hypermine/util.hpp"

namespace hypermine {

using json = nlohmann::json;

std::optional<TypeIndex> Schema::node_type(std::string_view name) const {
  for (std::size_t i = 0; i < node_types.size(); ++i) {
    if (node_types[i] == name) return static_cast<TypeIndex>(i);
  }
  return std::nullopt;
}

std::optional<TypeIndex> Schema::edge_type(std::string_view name) const {
  for (std::size_t i = 0; i < edge_types.size(); ++i) {
    if (edge_types[i].name == name) return static_cast<TypeIndex>(i);
  }
  return std::nullopt;
}

HinGraph HinGraph::build(Schema schema, std::span<const NodeRecord> nodes,
                         std::span<const EdgeRecord> edges) {
  using Kind = GraphError::Kind;
  for (const auto& decl : schema.edge_types) {
    if (!schema.node_type(decl.src_type) || !schema.node_type(decl.dst_type)) {
      throw GraphError(Kind::kBadSchema, "schema: edge type " + decl.name +
                                             " references an undeclared node type");
    }
  }

  HinGraph graph;
  graph.schema_ = std::move(schema);
  graph.nodes_.reserve(nodes.size());
  for (const auto& rec : nodes) {
    auto type = graph.schema_.node_type(rec.type);
    if (!type) {
      throw GraphError(Kind::kUnknownNodeType, rec.where + ": unknown node type " + rec.type);
    }
    auto index = static_cast<NodeIndex>(graph.nodes_.size());
    if (!graph.index_.emplace(rec.id, index).second) {
      throw GraphError(Kind::kDuplicateNodeId, rec.where + ": duplicate node id " + rec.id);
    }
    graph.nodes_.push_back(Node{rec.id, *type, rec.text_key});
  }

  graph.edges_.reserve(edges.size());
  for (const auto& rec : edges) {
    auto type = graph.schema_.edge_type(rec.type);
    if (!type) {
      throw GraphError(Kind::kUnknownEdgeType, rec.where + ": unknown edge type " + rec.type);
    }
    auto src = graph.find(rec.src);
    if (!src) throw GraphError(Kind::kDanglingEndpoint, rec.where + ": dangling endpoint " + rec.src);
    auto dst = graph.find(rec.dst);
    if (!dst) throw GraphError(Kind::kDanglingEndpoint, rec.where + ": dangling endpoint " + rec.dst);
    const auto& decl = graph.schema_.edge_types[*type];
    const auto& src_type = graph.schema_.node_types[graph.nodes_[*src].type];
    const auto& dst_type = graph.schema_.node_types[graph.nodes_[*dst].type];
    if (src_type != decl.src_type || dst_type != decl.dst_type) {
      throw GraphError(Kind::kSchemaViolation,
                       rec.where + ": schema violation: edge type " + decl.name + " requires (" +
                           decl.src_type + ", " + decl.dst_type + ") but got (" + src_type +
                           ", " + dst_type + ")");
    }
    graph.edges_.push_back(Edge{*src, *dst, *type});
  }

  // CSR adjacency, both directions.
  std::vector<std::size_t> degree(graph.nodes_.size(), 0);
  for (const auto& e : graph.edges_) {
    ++degree[e.src];
    ++degree[e.dst];
  }
  graph.adjacency_offsets_.assign(graph.nodes_.size() + 1, 0);
  for (std::size_t i = 0; i < degree.size(); ++i) {
    graph.adjacency_offsets_[i + 1] = graph.adjacency_offsets_[i] + degree[i];
  }
  graph.adjacency_.resize(graph.adjacency_offsets_.back());
  std::vector<std::size_t> cursor(graph.adjacency_offsets_.begin(),
                                  graph.adjacency_offsets_.end() - 1);
  for (const auto& e : graph.edges_) {
    graph.adjacency_[cursor[e.src]++] = Neighbor{e.dst, e.type};
    graph.adjacency_[cursor[e.dst]++] = Neighbor{e.src, e.type};
  }
  for (std::size_t i = 0; i < graph.nodes_.size(); ++i) {
    auto first = graph.adjacency_.begin() + static_cast<std::ptrdiff_t>(graph.adjacency_offsets_[i]);
    auto last = graph.adjacency_.begin() + static_cast<std::ptrdiff_t>(graph.adjacency_offsets_[i + 1]);
    std::sort(first, last, [](const Neighbor& a, const Neighbor& b) {
      return a.node != b.node ? a.node < b.node : a.edge_type < b.edge_type;
    });
  }
  return graph;
}

std::optional<NodeIndex> HinGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex HinGraph::index_of(std::string_view id) const {
  auto found = find(id);
  if (!found) {
    throw GraphError(GraphError::Kind::kUnknownNode, "unknown node id " + std::string(id));
  }
  return *found;
}

std::span<const Neighbor> HinGraph::neighbors(NodeIndex index) const {
  if (index >= nodes_.size()) {
    throw GraphError(GraphError::Kind::kUnknownNode, "node index out of range");
  }
  return std::span<const Neighbor>(adjacency_.data() + adjacency_offsets_[index],
                                   adjacency_offsets_[index + 1] - adjacency_offsets_[index]);
}

std::vector<std::string> HinGraph::neighbors_of_type(std::string_view id,
                                                     std::string_view neighbor_type) const {
  NodeIndex self = index_of(id);
  TypeIndex type = require_node_type(neighbor_type);
  std::vector<std::string> out;
  for (const auto& nb : neighbors(self)) {
    if (nodes_[nb.node].type == type) out.push_back(nodes_[nb.node].id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<NodeIndex> HinGraph::nodes_of_type(TypeIndex type) const {
  std::vector<NodeIndex> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].type == type) out.push_back(static_cast<NodeIndex>(i));
  }
  std::sort(out.begin(), out.end(),
            [this](NodeIndex a, NodeIndex b) { return nodes_[a].id < nodes_[b].id; });
  return out;
}

TypeIndex HinGraph::require_node_type(std::string_view name) const {
  auto type = schema_.node_type(name);
  if (!type) {
    throw GraphError(GraphError::Kind::kUnknownNodeType, "unknown node type " + std::string(name));
  }
  return *type;
}

Schema parse_schema(std::string_view json_text, const std::string& where) {
  Schema schema;
  try {
    json doc = json::parse(json_text);
    for (const auto& t : doc.at("node_types")) schema.node_types.push_back(t.get<std::string>());
    for (const auto& e : doc.at("edge_types")) {
      schema.edge_types.push_back(EdgeTypeDecl{e.at("name").get<std::string>(),
                                               e.at("src_type").get<std::string>(),
                                               e.at("dst_type").get<std::string>()});
    }
  } catch (const json::exception& ex) {
    throw ParseError(where + ": " + ex.what());
  }
  return schema;
}

std::string serialize_schema(const Schema& schema) {
  json doc;
  doc["node_types"] = schema.node_types;
  doc["edge_types"] = json::array();
  for (const auto& e : schema.edge_types) {
    doc["edge_types"].push_back({{"name", e.name}, {"src_type", e.src_type}, {"dst_type", e.dst_type}});
  }
  return doc.dump(2) + "\n";
}

namespace {

bool skip_line(std::string_view line) { return line.empty() || line.front() == '#'; }

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) {
      if (start < text.size()) lines.push_back(strip_cr(text.substr(start)));
      break;
    }
    lines.push_back(strip_cr(text.substr(start, pos - start)));
    start = pos + 1;
  }
  return lines;
}

}  // namespace

HinGraph parse_graph(std::string_view nodes_text, std::string_view edges_text,
                     std::string_view schema_text) {
  using Kind = GraphError::Kind;
  Schema schema = parse_schema(schema_text);

  std::vector<NodeRecord> nodes;
  auto node_lines = lines_of(nodes_text);
  for (std::size_t i = 0; i < node_lines.size(); ++i) {
    if (skip_line(node_lines[i])) continue;
    std::string where = "nodes:" + std::to_string(i + 1);
    auto fields = split(node_lines[i], '\t');
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
      throw GraphError(Kind::kMalformedLine, where + ": expected node_id, node_type[, text_key]");
    }
    nodes.push_back(NodeRecord{fields[0], fields[1], fields.size() == 3 ? fields[2] : "", where});
  }

  std::vector<EdgeRecord> edges;
  auto edge_lines = lines_of(edges_text);
  for (std::size_t i = 0; i < edge_lines.size(); ++i) {
    if (skip_line(edge_lines[i])) continue;
    std::string where = "edges:" + std::to_string(i + 1);
    auto fields = split(edge_lines[i], '\t');
    if (fields.size() != 3) {
      throw GraphError(Kind::kMalformedLine, where + ": expected src_id, dst_id, edge_type");
    }
    edges.push_back(EdgeRecord{fields[0], fields[1], fields[2], where});
  }
  return HinGraph::build(std::move(schema), nodes, edges);
}

HinGraph load_graph(const std::filesystem::path& nodes_path,
                    const std::filesystem::path& edges_path,
                    const std::filesystem::path& schema_path) {
  return parse_graph(read_file(nodes_path), read_file(edges_path), read_file(schema_path));
}

HinGraph load_graph_dir(const std::filesystem::path& dir) {
  return load_graph(dir / "nodes.tsv", dir / "edges.tsv", dir / "schema.json");
}

std::string serialize_nodes(const HinGraph& graph) {
  std::string out;
  for (const auto& n : graph.nodes()) {
    out += n.id;
    out += '\t';
    out += graph.schema().node_types[n.type];
    if (!n.text_key.empty()) {
      out += '\t';
      out += n.text_key;
    }
    out += '\n';
  }
  return out;
}

std::string serialize_edges(const HinGraph& graph) {
  std::string out;
  for (const auto& e : graph.edges()) {
    out += graph.node(e.src).id;
    out += '\t';
    out += graph.node(e.dst).id;
    out += '\t';
    out += graph.schema().edge_types[e.type].name;
    out += '\n';
  }
  return out;
}

void write_graph_dir(const HinGraph& graph, const std::filesystem::path& dir) {
  write_file(dir / "nodes.tsv", serialize_nodes(graph));
  write_file(dir / "edges.tsv", serialize_edges(graph));
  write_file(dir / "schema.json", serialize_schema(graph.schema()));
}

std::string normalize_term(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<Term> terms) : terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    by_surface_.emplace(t.surface, t.id);  // first (lowest id) wins
    by_node_.emplace(t.node, t.id);
    std::size_t tokens = t.surface.empty()
                             ? 0
                             : static_cast<std::size_t>(std::count(t.surface.begin(), t.surface.end(), ' ')) + 1;
    max_tokens_ = std::max(max_tokens_, tokens);
  }
}

std::optional<TermId> Vocabulary::find_surface(std::string_view normalized) const {
  auto it = by_surface_.find(std::string(normalized));
  if (it == by_surface_.end()) return std::nullopt;
  return it->second;
}

std::optional<TermId> Vocabulary::find_node(NodeIndex node) const {
  auto it = by_node_.find(node);
  if (it == by_node_.end()) return std::nullopt;
  return it->second;
}

TermId Vocabulary::require_surface(std::string_view surface) const {
  auto id = find_surface(normalize_term(surface));
  if (!id) throw ValidationError("term not in vocabulary: " + std::string(surface));
  return *id;
}

Vocabulary target_vocabulary(const HinGraph& graph, std::string_view target_type) {
  TypeIndex type = graph.require_node_type(target_type);
  std::vector<Term> terms;
  std::unordered_map<std::string, std::string> first_owner;
  for (NodeIndex idx : graph.nodes_of_type(type)) {
    const Node& node = graph.node(idx);
    std::string surface = normalize_term(node.text_key.empty() ? node.id : node.text_key);
    auto [it, inserted] = first_owner.emplace(surface, node.id);
    if (!inserted) {
      log::warn("duplicate term surface '" + surface + "' for nodes " + it->second + " and " +
                node.id);
    }
    terms.push_back(Term{static_cast<TermId>(terms.size()), std::move(surface), node.id, idx});
  }
  if (terms.empty()) {
    log::warn("target type " + std::string(target_type) + " has no nodes; vocabulary is empty");
  }
  return Vocabulary(std::move(terms));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      flush();
    } else if (c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?' ||
               c == '(' || c == ')' || c == '"') {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

Corpus parse_corpus(std::string_view jsonl, const HinGraph& graph, const std::string& where) {
  Corpus corpus;
  auto lines = lines_of(jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string loc = where + ":" + std::to_string(i + 1);
    Document doc;
    try {
      json rec = json::parse(lines[i]);
      doc.owner = rec.at("node_id").get<std::string>();
      if (rec.contains("sentences")) {
        for (const auto& s : rec.at("sentences")) {
          doc.sentences.push_back(s.get<std::vector<std::string>>());
        }
      } else if (rec.contains("text")) {
        doc.sentences.push_back(tokenize(rec.at("text").get<std::string>()));
      }
    } catch (const json::exception& ex) {
      throw ParseError(loc + ": " + ex.what());
    }
    if (!graph.find(doc.owner)) {
      throw GraphError(GraphError::Kind::kDanglingEndpoint, loc + ": unknown owner node " + doc.owner);
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const HinGraph& graph) {
  return parse_corpus(read_file(path), graph, path.filename().string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.documents) {
    json rec;
    rec["node_id"] = doc.owner;
    rec["sentences"] = doc.sentences;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace hypermine
