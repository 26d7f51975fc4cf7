#pragma once

// Typed graph, target vocabulary and attached corpus.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypermine/error.hpp"

namespace hypermine {

using NodeIndex = std::uint32_t;
using TypeIndex = std::uint32_t;
using TermId = std::uint32_t;

class GraphError : public ValidationError {
 public:
  enum class Kind {
    kMalformedLine,
    kUnknownNodeType,
    kUnknownEdgeType,
    kDanglingEndpoint,
    kDuplicateNodeId,
    kSchemaViolation,
    kUnknownNode,
    kBadSchema,
  };
  GraphError(Kind kind, const std::string& message) : ValidationError(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct EdgeTypeDecl {
  std::string name;
  std::string src_type;
  std::string dst_type;
  bool operator==(const EdgeTypeDecl&) const = default;
};

struct Schema {
  std::vector<std::string> node_types;
  std::vector<EdgeTypeDecl> edge_types;

  std::optional<TypeIndex> node_type(std::string_view name) const;
  std::optional<TypeIndex> edge_type(std::string_view name) const;
  bool operator==(const Schema&) const = default;
};

/// Raw records as read from the nodes/edges files. `where` is a
/// "file:line" label used in diagnostics.
struct NodeRecord {
  std::string id;
  std::string type;
  std::string text_key;
  std::string where;
};

struct EdgeRecord {
  std::string src;
  std::string dst;
  std::string type;
  std::string where;
};

struct Node {
  std::string id;
  TypeIndex type = 0;
  std::string text_key;
  bool operator==(const Node&) const = default;
};

struct Edge {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  TypeIndex type = 0;
  bool operator==(const Edge&) const = default;
};

struct Neighbor {
  NodeIndex node = 0;
  TypeIndex edge_type = 0;
};

/// Validated heterogeneous graph. Immutable after construction. Edges keep
/// their given direction but adjacency is undirected.
class HinGraph {
 public:
  static HinGraph build(Schema schema, std::span<const NodeRecord> nodes,
                        std::span<const EdgeRecord> edges);

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Node& node(NodeIndex index) const { return nodes_.at(index); }
  const std::string& type_name(NodeIndex index) const {
    return schema_.node_types.at(nodes_.at(index).type);
  }

  std::optional<NodeIndex> find(std::string_view id) const;
  NodeIndex index_of(std::string_view id) const;  // throws kUnknownNode

  /// Undirected adjacency, sorted by (neighbor, edge type), one entry per edge.
  std::span<const Neighbor> neighbors(NodeIndex index) const;

  /// Node ids of `neighbor_type` adjacent to `id` via any edge, sorted.
  std::vector<std::string> neighbors_of_type(std::string_view id,
                                             std::string_view neighbor_type) const;

  /// Nodes of the given type, ordered by node id.
  std::vector<NodeIndex> nodes_of_type(TypeIndex type) const;

  TypeIndex require_node_type(std::string_view name) const;

  bool operator==(const HinGraph& other) const {
    return schema_ == other.schema_ && nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  Schema schema_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<std::size_t> adjacency_offsets_;
  std::vector<Neighbor> adjacency_;
};

Schema parse_schema(std::string_view json_text, const std::string& where = "schema");
std::string serialize_schema(const Schema& schema);

HinGraph parse_graph(std::string_view nodes_text, std::string_view edges_text,
                     std::string_view schema_text);
HinGraph load_graph(const std::filesystem::path& nodes_path,
                    const std::filesystem::path& edges_path,
                    const std::filesystem::path& schema_path);
/// Loads nodes.tsv, edges.tsv and schema.json from a directory.
HinGraph load_graph_dir(const std::filesystem::path& dir);

std::string serialize_nodes(const HinGraph& graph);
std::string serialize_edges(const HinGraph& graph);
void write_graph_dir(const HinGraph& graph, const std::filesystem::path& dir);

/// Lowercase and collapse runs of whitespace into one space; trims the ends.
std::string normalize_term(std::string_view text);

struct Term {
  TermId id = 0;
  std::string surface;
  std::string node_id;
  NodeIndex node = 0;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<Term> terms);

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  const Term& operator[](TermId id) const { return terms_.at(id); }
  const std::vector<Term>& terms() const noexcept { return terms_; }

  /// Exact lookup of a normalized surface. Duplicated surfaces resolve to the
  /// lowest term id.
  std::optional<TermId> find_surface(std::string_view normalized) const;
  std::optional<TermId> find_node(NodeIndex node) const;
  TermId require_surface(std::string_view surface) const;

  /// Longest term length in tokens.
  std::size_t max_tokens() const noexcept { return max_tokens_; }

 private:
  std::vector<Term> terms_;
  std::unordered_map<std::string, TermId> by_surface_;
  std::unordered_map<NodeIndex, TermId> by_node_;
  std::size_t max_tokens_ = 0;
};

/// All nodes of `target_type` ordered by node id. A term's surface is its
/// text_key when present, else its node id; both normalized.
Vocabulary target_vocabulary(const HinGraph& graph, std::string_view target_type);

struct Document {
  std::string owner;
  std::vector<std::vector<std::string>> sentences;
};

struct Corpus {
  std::vector<Document> documents;
};

/// Whitespace tokenizer that also splits off common punctuation.
std::vector<std::string> tokenize(std::string_view text);

Corpus parse_corpus(std::string_view jsonl, const HinGraph& graph,
                    const std::string& where = "corpus");
Corpus load_corpus(const std::filesystem::path& path, const HinGraph& graph);
std::string serialize_corpus(const Corpus& corpus);

}  // namespace hypermine
