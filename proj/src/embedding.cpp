#include "hypermine/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hypermine/util.hpp"

namespace hypermine {

void NodeEmbeddings::add(std::string id, std::span<const double> values) {
  if (values.size() != dim_) {
    throw ValidationError("embedding for " + id + " has " + std::to_string(values.size()) +
                          " values, expected " + std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("embedding for " + id + " has a non-finite value");
  }
  if (!index_.emplace(id, ids_.size()).second) {
    throw ValidationError("duplicate embedding for node " + id);
  }
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

bool NodeEmbeddings::contains(std::string_view id) const {
  return index_.find(std::string(id)) != index_.end();
}

std::span<const double> NodeEmbeddings::at(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw ValidationError("no embedding for node " + std::string(id));
  return row(it->second);
}

namespace {

// Walk step sampler: edge type uniformly among the types present, then a
// neighbor uniformly within that type.
class TypedWalker {
 public:
  explicit TypedWalker(const HinGraph& graph) {
    const std::size_t n = graph.nodes().size();
    groups_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto nbs = graph.neighbors(static_cast<NodeIndex>(i));
      // Neighbors are sorted by node; regroup by edge type.
      std::vector<std::pair<TypeIndex, NodeIndex>> typed;
      for (const auto& nb : nbs) typed.emplace_back(nb.edge_type, nb.node);
      std::sort(typed.begin(), typed.end());
      for (std::size_t j = 0; j < typed.size();) {
        std::size_t k = j;
        std::vector<NodeIndex> targets;
        while (k < typed.size() && typed[k].first == typed[j].first) targets.push_back(typed[k++].second);
        groups_[i].push_back(std::move(targets));
        j = k;
      }
    }
  }

  bool isolated(NodeIndex node) const { return groups_[node].empty(); }

  NodeIndex step(NodeIndex node, Rng& rng) const {
    const auto& types = groups_[node];
    const auto& targets = types[uniform_index(rng, types.size())];
    return targets[uniform_index(rng, targets.size())];
  }

 private:
  std::vector<std::vector<std::vector<NodeIndex>>> groups_;
};

double sigmoid(double x) {
  if (x > 6.0) return 1.0;
  if (x < -6.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

NodeEmbeddings train_embedding(const HinGraph& graph, const EmbeddingConfig& config,
                               std::uint64_t seed) {
  if (config.dim == 0) throw ValidationError("embedding dimension must be positive");
  const std::size_t n = graph.nodes().size();
  if (n == 0) throw ValidationError("cannot embed an empty graph");
  const std::size_t d = config.dim;

  Rng rng(seed);
  TypedWalker walker(graph);

  std::vector<double> input(n * d);
  std::vector<double> output(n * d, 0.0);
  for (auto& v : input) v = (uniform_unit(rng) - 0.5) / static_cast<double>(d);

  // Negative-sampling table from degree^0.75.
  std::vector<double> cumulative(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::pow(static_cast<double>(graph.neighbors(static_cast<NodeIndex>(i)).size()), 0.75);
    cumulative[i] = acc;
  }
  auto draw_negative = [&]() -> NodeIndex {
    double target = uniform_unit(rng) * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    return static_cast<NodeIndex>(it - cumulative.begin());
  };

  std::vector<NodeIndex> starts;
  for (std::size_t i = 0; i < n; ++i) {
    if (!walker.isolated(static_cast<NodeIndex>(i))) starts.push_back(static_cast<NodeIndex>(i));
  }

  const std::size_t total_walks =
      std::max<std::size_t>(1, config.epochs * config.walks_per_node * starts.size());
  std::size_t walks_done = 0;
  std::vector<NodeIndex> walk;
  std::vector<double> grad(d);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t round = 0; round < config.walks_per_node; ++round) {
      std::vector<NodeIndex> order = starts;
      shuffle(order, rng);
      for (NodeIndex start : order) {
        double lr = config.learning_rate *
                    std::max(1e-4, 1.0 - static_cast<double>(walks_done) / static_cast<double>(total_walks));
        ++walks_done;
        walk.assign(1, start);
        for (std::size_t s = 1; s < config.walk_length; ++s) walk.push_back(walker.step(walk.back(), rng));

        for (std::size_t i = 0; i < walk.size(); ++i) {
          std::size_t lo = i >= config.window ? i - config.window : 0;
          std::size_t hi = std::min(walk.size(), i + config.window + 1);
          for (std::size_t j = lo; j < hi; ++j) {
            if (j == i) continue;
            double* center = input.data() + walk[i] * d;
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t s = 0; s <= config.negatives; ++s) {
              NodeIndex target = s == 0 ? walk[j] : draw_negative();
              double label = s == 0 ? 1.0 : 0.0;
              if (s != 0 && target == walk[j]) continue;
              double* ctx = output.data() + target * d;
              double dot = 0.0;
              for (std::size_t k = 0; k < d; ++k) dot += center[k] * ctx[k];
              double g = (label - sigmoid(dot)) * lr;
              for (std::size_t k = 0; k < d; ++k) {
                grad[k] += g * ctx[k];
                ctx[k] += g * center[k];
              }
            }
            for (std::size_t k = 0; k < d; ++k) center[k] += grad[k];
          }
        }
      }
    }
  }

  NodeEmbeddings store(d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto node = static_cast<NodeIndex>(i);
    if (walker.isolated(node)) {
      Rng iso(seed ^ (0x9E3779B97F4A7C15ull * (i + 1)));
      double norm = 0.0;
      for (auto& v : row) {
        v = uniform_unit(iso) * 2.0 - 1.0;
        norm += v * v;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) norm = 1.0;
      for (auto& v : row) v /= norm;
    } else {
      std::copy_n(input.data() + i * d, d, row.begin());
    }
    store.add(graph.node(node).id, row);
  }
  return store;
}

std::string serialize_embedding(const NodeEmbeddings& store) {
  std::string out = "d=" + std::to_string(store.dim()) + "\n";
  for (std::size_t i = 0; i < store.size(); ++i) {
    out += store.ids()[i];
    for (double v : store.row(i)) {
      out += '\t';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

NodeEmbeddings parse_embedding(std::string_view text, const std::string& where) {
  auto lines = split(text, '\n');
  if (lines.empty() || lines[0].rfind("d=", 0) != 0) {
    throw ParseError(where + ":1: expected header d=<int>");
  }
  long long dim = parse_int(std::string_view(lines[0]).substr(2), where + ":1");
  if (dim <= 0) throw ParseError(where + ":1: dimension must be positive");
  NodeEmbeddings store(static_cast<std::size_t>(dim));
  std::vector<double> values;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string loc = where + ":" + std::to_string(i + 1);
    std::vector<std::string> fields;
    if (line.find('\t') != std::string::npos) {
      fields = split(line, '\t');
    } else {
      std::istringstream ss(line);
      for (std::string f; ss >> f;) fields.push_back(f);
    }
    if (fields.size() != static_cast<std::size_t>(dim) + 1) {
      throw ParseError(loc + ": row for " + fields[0] + " has " + std::to_string(fields.size() - 1) +
                       " values, expected " + std::to_string(dim));
    }
    values.clear();
    for (std::size_t k = 1; k < fields.size(); ++k) values.push_back(parse_double(fields[k], loc));
    try {
      store.add(fields[0], values);
    } catch (const ValidationError& ex) {
      throw ParseError(loc + ": " + ex.what());
    }
  }
  return store;
}

void write_embedding(const std::filesystem::path& path, const NodeEmbeddings& store) {
  write_file(path, serialize_embedding(store));
}

NodeEmbeddings import_embedding(const std::filesystem::path& path) {
  return parse_embedding(read_file(path), path.filename().string());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace hypermine
