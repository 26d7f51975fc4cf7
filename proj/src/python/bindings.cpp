#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hypermine/context.hpp"
#include "hypermine/dih.hpp"
#include "hypermine/embedding.hpp"
#include "hypermine/hearst.hpp"
#include "hypermine/hin.hpp"
#include "hypermine/metrics.hpp"
#include "hypermine/model.hpp"
#include "hypermine/pipeline.hpp"
#include "hypermine/synth.hpp"
#include "hypermine/taxonomy.hpp"

namespace py = pybind11;
using namespace hypermine;

namespace {

using PyRanked = std::vector<std::tuple<TermId, TermId, double>>;
using PyLabels = std::vector<std::tuple<TermId, TermId, bool>>;

RankedPairList to_ranked(const PyRanked& in) {
  RankedPairList out;
  out.reserve(in.size());
  for (const auto& [a, b, s] : in) out.push_back({{a, b}, s});
  return out;
}

PyRanked from_ranked(const RankedPairList& in) {
  PyRanked out;
  out.reserve(in.size());
  for (const auto& r : in) out.emplace_back(r.pair.first, r.pair.second, r.score);
  return out;
}

LabeledPairSet to_labels(const PyLabels& in) {
  LabeledPairSet out;
  for (const auto& [a, b, positive] : in) out.add({a, b}, positive);
  return out;
}

PyLabels from_labels(const LabeledPairSet& in) {
  PyLabels out;
  for (const auto& lp : in.pairs()) out.emplace_back(lp.pair.first, lp.pair.second, lp.positive);
  return out;
}

std::vector<Measure> to_measures(const std::vector<std::string>& names) {
  if (names.empty()) return {kAllMeasures.begin(), kAllMeasures.end()};
  std::vector<Measure> out;
  for (const auto& n : names) out.push_back(parse_measure(n));
  return out;
}

py::dict rank_metrics_dict(const RankMetrics& m) {
  py::dict d;
  d["MaMARR"] = m.ma_marr;
  d["MiMARR"] = m.mi_marr;
  d["MaMLRR"] = m.ma_mlrr;
  d["MiMLRR"] = m.mi_mlrr;
  d["groups"] = m.groups;
  d["positives"] = m.positives;
  return d;
}

py::list edge_list(const std::vector<TaxonomyEdge>& edges) {
  py::list out;
  for (const auto& e : edges) out.append(py::make_tuple(e.hypernym, e.hyponym, e.score));
  return out;
}

// A trained model together with the inputs it was trained on.
struct Model {
  ModelParams params;
  std::vector<double> loss_trace;
};

}  // namespace

PYBIND11_MODULE(_hypermine, m) {
  m.doc() = "Hypernymy discovery over text-rich heterogeneous information networks";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());

  py::class_<HinGraph>(m, "Graph")
      .def_static("load", &load_graph_dir, py::arg("directory"))
      .def_static("parse", &parse_graph, py::arg("nodes"), py::arg("edges"), py::arg("schema"))
      .def_property_readonly("num_nodes", [](const HinGraph& g) { return g.nodes().size(); })
      .def_property_readonly("num_edges", [](const HinGraph& g) { return g.edges().size(); })
      .def("neighbors_of_type", &HinGraph::neighbors_of_type, py::arg("node_id"), py::arg("node_type"))
      .def("vocabulary", [](const HinGraph& g, const std::string& type) { return target_vocabulary(g, type); },
           py::arg("target_type") = "keyword");

  py::class_<Vocabulary>(m, "Vocabulary")
      .def("__len__", &Vocabulary::size)
      .def("__getitem__", [](const Vocabulary& v, TermId id) { return v[id].surface; })
      .def("surfaces",
           [](const Vocabulary& v) {
             std::vector<std::string> out;
             for (const auto& t : v.terms()) out.push_back(t.surface);
             return out;
           })
      .def("find", [](const Vocabulary& v, const std::string& s) { return v.find_surface(normalize_term(s)); })
      .def("node_id", [](const Vocabulary& v, TermId id) { return v[id].node_id; });

  py::class_<Corpus>(m, "Corpus")
      .def_static("load", &load_corpus, py::arg("path"), py::arg("graph"))
      .def_property_readonly("num_documents", [](const Corpus& c) { return c.documents.size(); });

  py::class_<SeedPairSet>(m, "SeedPairSet")
      .def(py::init<>())
      .def("add", &SeedPairSet::add, py::arg("hypernym"), py::arg("hyponym"), py::arg("count") = 1)
      .def("__len__", &SeedPairSet::size)
      .def("__contains__",
           [](const SeedPairSet& s, std::pair<TermId, TermId> p) { return s.contains(p.first, p.second); })
      .def("pairs", [](const SeedPairSet& s) {
        std::vector<std::tuple<TermId, TermId, std::uint64_t>> out;
        for (const auto& p : s.pairs()) out.emplace_back(p.hypernym, p.hyponym, p.count);
        return out;
      });

  m.def(
      "extract_seed_pairs",
      [](const Corpus& corpus, const Vocabulary& vocab, const std::string& patterns) {
        return extract_seed_pairs(corpus, vocab, PatternSet::parse(patterns));
      },
      py::arg("corpus"), py::arg("vocab"), py::arg("patterns") = "default");

  py::class_<NodeEmbeddings>(m, "Embeddings")
      .def_static("load", &import_embedding, py::arg("path"))
      .def("save", [](const NodeEmbeddings& e, const std::filesystem::path& p) { write_embedding(p, e); })
      .def_property_readonly("dim", &NodeEmbeddings::dim)
      .def("__len__", &NodeEmbeddings::size)
      .def("ids", &NodeEmbeddings::ids)
      .def("vector", [](const NodeEmbeddings& e, const std::string& id) {
        auto row = e.at(id);
        return std::vector<double>(row.begin(), row.end());
      });

  m.def(
      "train_embedding",
      [](const HinGraph& g, std::size_t dim, std::size_t walks_per_node, std::size_t walk_length, std::size_t window,
         std::size_t negatives, std::size_t epochs, double learning_rate, std::uint64_t seed) {
        EmbeddingConfig cfg{dim, walks_per_node, walk_length, window, negatives, epochs, learning_rate};
        py::gil_scoped_release release;
        return train_embedding(g, cfg, seed);
      },
      py::arg("graph"), py::arg("dim") = kDefaultEmbeddingDim, py::arg("walks_per_node") = 10,
      py::arg("walk_length") = 40, py::arg("window") = 5, py::arg("negatives") = 5, py::arg("epochs") = 1,
      py::arg("learning_rate") = 0.025, py::arg("seed") = 0);

  py::class_<ContextIndex>(m, "Context")
      .def_property_readonly("id", &ContextIndex::id)
      .def_property_readonly("total_units", &ContextIndex::total_units)
      .def("relevant",
           [](const ContextIndex& c, TermId t) {
             std::vector<std::string> out;
             for (UnitId u : c.relevant(t)) out.push_back(c.unit(u));
             return out;
           })
      .def("covers", &ContextIndex::covers);

  m.def("build_simplest", &build_simplest, py::arg("graph"), py::arg("vocab"), py::arg("target_type") = "keyword");
  m.def("build_group_by", &build_group_by, py::arg("graph"), py::arg("vocab"), py::arg("target_type"),
        py::arg("group_type"));
  m.def("build_cluster", &build_cluster, py::arg("simplest"), py::arg("embeddings"), py::arg("k"),
        py::arg("seed") = 0, py::arg("max_iters") = 100);
  m.def(
      "build_context",
      [](const std::string& spec, const HinGraph& g, const Vocabulary& v, const std::string& target_type,
         const NodeEmbeddings* emb, std::uint64_t seed) {
        auto parsed = ContextSpec::parse(spec);
        std::optional<ContextIndex> simplest;
        if (parsed.kind == ContextKind::kCluster) simplest = build_simplest(g, v, target_type);
        return build_context(parsed, g, v, target_type, simplest ? &*simplest : nullptr, emb, seed);
      },
      py::arg("spec"), py::arg("graph"), py::arg("vocab"), py::arg("target_type") = "keyword",
      py::arg("embeddings") = nullptr, py::arg("seed") = 0);

  m.def(
      "dih_measures",
      [](const ContextIndex& c, TermId t1, TermId t2) {
        auto s = dih_measures(c, t1, t2);
        py::dict d;
        d["M1"] = s.m1;
        d["M2"] = s.m2;
        d["M3"] = s.m3;
        d["M4"] = s.m4;
        return d;
      },
      py::arg("context"), py::arg("hypernym"), py::arg("hyponym"));

  py::class_<PairwiseFeatures>(m, "PairwiseFeatures")
      .def_property_readonly("dim", &PairwiseFeatures::dim)
      .def("__len__", &PairwiseFeatures::size)
      .def("column_names", &PairwiseFeatures::column_names)
      .def("pairs", &PairwiseFeatures::pairs)
      .def("__getitem__", [](const PairwiseFeatures& f, TermPair p) {
        auto row = f.at(p);
        return std::vector<double>(row.begin(), row.end());
      });

  m.def(
      "compute_pairwise_features",
      [](const std::vector<TermPair>& pairs, const std::vector<ContextIndex>& contexts,
         const std::vector<std::string>& measures, std::size_t threads) {
        auto ms = to_measures(measures);
        py::gil_scoped_release release;
        return compute_pairwise_features(pairs, contexts, ms, threads);
      },
      py::arg("pairs"), py::arg("contexts"), py::arg("measures") = std::vector<std::string>{},
      py::arg("threads") = 1);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("negative_ratio", &TrainConfig::negative_ratio)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("node_dropout", &TrainConfig::node_dropout)
      .def_readwrite("pair_dropout", &TrainConfig::pair_dropout)
      .def_readwrite("node_hidden", &TrainConfig::node_hidden)
      .def_property(
          "corrupt",
          [](const TrainConfig& c) { return c.corrupt == CorruptSlot::kHyponym ? "hyponym" : "hypernym"; },
          [](TrainConfig& c, const std::string& slot) {
            if (slot == "hyponym") c.corrupt = CorruptSlot::kHyponym;
            else if (slot == "hypernym") c.corrupt = CorruptSlot::kHypernym;
            else throw ValidationError("corrupt must be hyponym or hypernym");
          });

  py::class_<Model>(m, "Model")
      .def_readonly("loss_trace", &Model::loss_trace)
      .def_property_readonly("num_parameters", [](const Model& md) { return md.params.values().size(); })
      .def("save",
           [](const Model& md, const std::filesystem::path& path, const std::string& fingerprint,
              const TrainConfig& cfg) { write_file(path, serialize_checkpoint(md.params, fingerprint, cfg)); },
           py::arg("path"), py::arg("layout_fingerprint") = "", py::arg("config") = TrainConfig{});

  m.def(
      "train",
      [](const SeedPairSet& seeds, const Vocabulary& vocab, const NodeEmbeddings& emb,
         const PairwiseFeatures& features, const TrainConfig& cfg, const std::vector<TermId>& pool) {
        py::gil_scoped_release release;
        ModelInputs inputs(vocab, emb, features);
        auto result = train(seeds, inputs, cfg, pool);
        return Model{std::move(result.params), std::move(result.loss_trace)};
      },
      py::arg("seeds"), py::arg("vocab"), py::arg("embeddings"), py::arg("features"),
      py::arg("config") = TrainConfig{}, py::arg("pool") = std::vector<TermId>{});

  m.def(
      "rank_pairs",
      [](const Model& md, const std::vector<TermPair>& candidates, const Vocabulary& vocab,
         const NodeEmbeddings& emb, const PairwiseFeatures& features, std::uint64_t tie_seed, std::size_t threads) {
        RankedPairList ranked;
        {
          py::gil_scoped_release release;
          ModelInputs inputs(vocab, emb, features);
          ranked = rank_pairs(md.params, candidates, inputs, tie_seed, threads);
        }
        return from_ranked(ranked);
      },
      py::arg("model"), py::arg("candidates"), py::arg("vocab"), py::arg("embeddings"), py::arg("features"),
      py::arg("tie_seed") = 0, py::arg("threads") = 1);

  m.def(
      "order_by_score",
      [](const PyRanked& scored, std::uint64_t tie_seed) {
        return from_ranked(order_by_score(to_ranked(scored), tie_seed));
      },
      py::arg("scored"), py::arg("tie_seed") = 0);

  m.def(
      "precision_at_k",
      [](const PyRanked& ranked, const PyLabels& labels, std::size_t k) {
        return precision_at_k(to_ranked(ranked), to_labels(labels), k);
      },
      py::arg("ranked"), py::arg("labels"), py::arg("k"));

  m.def(
      "reciprocal_rank_metrics",
      [](const PyRanked& ranked, const PyLabels& labels) {
        return rank_metrics_dict(reciprocal_rank_metrics(to_ranked(ranked), to_labels(labels)));
      },
      py::arg("ranked"), py::arg("labels"));

  m.def(
      "evaluate_json",
      [](const PyRanked& ranked, const PyLabels& labels, const std::vector<std::size_t>& ks, std::uint64_t tie_seed) {
        return serialize_report(evaluate(to_ranked(ranked), to_labels(labels), ks, tie_seed));
      },
      py::arg("ranked"), py::arg("labels"), py::arg("ks") = std::vector<std::size_t>{100, 1000},
      py::arg("tie_seed") = 0);

  m.def(
      "build_taxonomy",
      [](const PyRanked& ranked, std::size_t top_terms, std::size_t top_edges, std::uint64_t seed,
         const std::string& removal) {
        TaxonomyConfig cfg{top_terms, top_edges, seed, RemovalPolicy::kUniform};
        if (removal == "low_score") cfg.removal = RemovalPolicy::kLowScoreWeighted;
        else if (removal != "uniform") throw ValidationError("removal must be uniform or low_score");
        auto dag = build_taxonomy(to_ranked(ranked), cfg);
        py::dict d;
        d["nodes"] = dag.nodes;
        d["edges"] = edge_list(dag.edges);
        d["removed_edges"] = edge_list(dag.removed_edges);
        d["pruned_edges"] = dag.pruned_edges;
        return d;
      },
      py::arg("ranked"), py::arg("top_terms") = kDefaultTopTerms, py::arg("top_edges") = kDefaultTopEdges,
      py::arg("seed") = 0, py::arg("removal") = "uniform");

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("depth", &SynthConfig::depth)
      .def_readwrite("branching", &SynthConfig::branching)
      .def_readwrite("terms_per_concept", &SynthConfig::terms_per_concept)
      .def_readwrite("documents", &SynthConfig::documents)
      .def_readwrite("p_anc", &SynthConfig::p_anc)
      .def_readwrite("docs_per_author", &SynthConfig::docs_per_author)
      .def_readwrite("venues_per_area", &SynthConfig::venues_per_area)
      .def_readwrite("years", &SynthConfig::years)
      .def_readwrite("hearst_fraction", &SynthConfig::hearst_fraction)
      .def_readwrite("plural_probability", &SynthConfig::plural_probability)
      .def_readwrite("filler_sentences", &SynthConfig::filler_sentences)
      .def_readwrite("negatives_per_side", &SynthConfig::negatives_per_side)
      .def_readwrite("seed", &SynthConfig::seed);

  py::class_<SynthDataset>(m, "SynthDataset")
      .def_readonly("graph", &SynthDataset::graph)
      .def_readonly("corpus", &SynthDataset::corpus)
      .def_readonly("vocab", &SynthDataset::vocab)
      .def_property_readonly("labels", [](const SynthDataset& d) { return from_labels(d.labels); })
      .def_readonly("hearst_pairs", &SynthDataset::hearst_pairs)
      .def("planted_edges", &SynthDataset::planted_edges)
      .def("write", [](const SynthDataset& d, const std::filesystem::path& dir) { write_synthetic(d, dir); });

  m.def("generate_synthetic", &generate_synthetic_hin, py::arg("config") = SynthConfig{});

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config_path, bool force, std::optional<std::string> stop_after,
         std::optional<std::uint64_t> seed) {
        auto cfg = load_pipeline_config(config_path);
        if (seed) cfg.seed = *seed;
        RunOptions opts;
        opts.force = force;
        opts.stop_after = std::move(stop_after);
        std::vector<StageReport> reports;
        {
          py::gil_scoped_release release;
          reports = run_pipeline(cfg, opts);
        }
        std::vector<std::pair<std::string, bool>> out;
        for (const auto& r : reports) out.emplace_back(r.stage, r.skipped);
        return out;
      },
      py::arg("config"), py::arg("force") = false, py::arg("stop_after") = std::nullopt,
      py::arg("seed") = std::nullopt);

  m.def("stage_names", &stage_names);
}
