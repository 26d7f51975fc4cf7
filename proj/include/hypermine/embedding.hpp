#pragma once

// Nodewise feature vectors f_v: a default structural trainer (typed random
// walks + skip-gram with negative sampling) and a text import path.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypermine/hin.hpp"

namespace hypermine {

inline constexpr std::size_t kDefaultEmbeddingDim = 128;

class NodeEmbeddings {
 public:
  NodeEmbeddings() = default;
  explicit NodeEmbeddings(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  /// Appends a vector; throws on duplicate id, wrong length or non-finite value.
  void add(std::string id, std::span<const double> values);

  bool contains(std::string_view id) const;
  std::span<const double> at(std::string_view id) const;  // throws if absent
  std::span<const double> row(std::size_t index) const {
    return std::span<const double>(data_.data() + index * dim_, dim_);
  }

  bool operator==(const NodeEmbeddings& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EmbeddingConfig {
  std::size_t dim = kDefaultEmbeddingDim;
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 40;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 1;
  double learning_rate = 0.025;
};

/// Walks pick an edge type uniformly among those present at the current node,
/// then a neighbor uniformly among that type's neighbors. Isolated nodes get
/// seeded random unit-norm vectors. Deterministic for a fixed seed.
NodeEmbeddings train_embedding(const HinGraph& graph, const EmbeddingConfig& config,
                               std::uint64_t seed);

/// Text format: first line "d=<int>", then node_id and d values per line,
/// tab-separated (whitespace also accepted on import).
std::string serialize_embedding(const NodeEmbeddings& store);
NodeEmbeddings parse_embedding(std::string_view text, const std::string& where = "embedding");
void write_embedding(const std::filesystem::path& path, const NodeEmbeddings& store);
NodeEmbeddings import_embedding(const std::filesystem::path& path);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace hypermine
