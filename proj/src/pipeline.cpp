#include "hypermine/pipeline.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>

#include "hypermine/log.hpp"

namespace hypermine {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

CandidateMode parse_candidate_mode(std::string_view text) {
  if (text == "labels") return CandidateMode::kLabels;
  if (text == "all") return CandidateMode::kAll;
  if (text == "cooccur") return CandidateMode::kCooccur;
  throw ValidationError("unknown candidate mode '" + std::string(text) + "' (labels, all, cooccur)");
}

std::string candidate_mode_name(CandidateMode mode) {
  switch (mode) {
    case CandidateMode::kLabels: return "labels";
    case CandidateMode::kAll: return "all";
    case CandidateMode::kCooccur: return "cooccur";
  }
  return "labels";
}

void PipelineConfig::validate() const {
  if (graph_dir.empty()) throw ValidationError("config: graph directory is required");
  if (corpus.empty()) throw ValidationError("config: corpus is required");
  if (output_dir.empty()) throw ValidationError("config: output directory is required");
  if (contexts.empty()) throw ValidationError("config: at least one context is required");
  if (measures.empty()) throw ValidationError("config: at least one measure is required");
  if (candidates == CandidateMode::kLabels && labels.empty()) {
    throw ValidationError("config: candidates = labels needs a labels file");
  }
  std::set<std::string> labels_seen;
  for (const auto& c : contexts) {
    if (!labels_seen.insert(c.label()).second) throw ValidationError("config: duplicate context " + c.label());
  }
  train.validate();
  if (threads == 0) throw ValidationError("config: threads must be positive");
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view json_text, const fs::path& base_dir, const std::string& where) {
  PipelineConfig cfg;
  try {
    json doc = json::parse(json_text);
    check_keys(doc,
               {"graph", "corpus", "labels", "output", "target_type", "patterns", "contexts", "measures",
                "candidates", "embedding", "train", "evaluation", "taxonomy", "seed", "threads", "deterministic"},
               where);
    auto path_of = [&](const char* key) {
      fs::path p = doc.at(key).get<std::string>();
      return p.is_absolute() ? p : base_dir / p;
    };
    cfg.graph_dir = path_of("graph");
    cfg.corpus = path_of("corpus");
    cfg.output_dir = path_of("output");
    if (doc.contains("labels")) cfg.labels = path_of("labels");
    read_opt(doc, "target_type", cfg.target_type);
    read_opt(doc, "patterns", cfg.patterns);
    PatternSet::parse(cfg.patterns);
    if (doc.contains("contexts")) {
      for (const auto& c : doc.at("contexts")) cfg.contexts.push_back(ContextSpec::parse(c.get<std::string>()));
    } else {
      cfg.contexts.push_back(ContextSpec::parse("simplest"));
    }
    if (doc.contains("measures")) {
      cfg.measures.clear();
      for (const auto& m : doc.at("measures")) cfg.measures.push_back(parse_measure(m.get<std::string>()));
    }
    if (doc.contains("candidates")) cfg.candidates = parse_candidate_mode(doc.at("candidates").get<std::string>());
    if (doc.contains("embedding")) {
      const auto& e = doc.at("embedding");
      check_keys(e, {"dim", "walks_per_node", "walk_length", "window", "negatives", "epochs", "learning_rate", "import"},
                 where + ": embedding");
      read_opt(e, "dim", cfg.embedding.dim);
      read_opt(e, "walks_per_node", cfg.embedding.walks_per_node);
      read_opt(e, "walk_length", cfg.embedding.walk_length);
      read_opt(e, "window", cfg.embedding.window);
      read_opt(e, "negatives", cfg.embedding.negatives);
      read_opt(e, "epochs", cfg.embedding.epochs);
      read_opt(e, "learning_rate", cfg.embedding.learning_rate);
      if (e.contains("import")) {
        fs::path p = e.at("import").get<std::string>();
        cfg.embedding_import = p.is_absolute() ? p : base_dir / p;
      }
    }
    if (doc.contains("train")) {
      const auto& t = doc.at("train");
      check_keys(t, {"negative_ratio", "epochs", "batch_size", "learning_rate", "node_dropout", "pair_dropout",
                     "node_hidden", "corrupt"},
                 where + ": train");
      read_opt(t, "negative_ratio", cfg.train.negative_ratio);
      read_opt(t, "epochs", cfg.train.epochs);
      read_opt(t, "batch_size", cfg.train.batch_size);
      read_opt(t, "learning_rate", cfg.train.learning_rate);
      read_opt(t, "node_dropout", cfg.train.node_dropout);
      read_opt(t, "pair_dropout", cfg.train.pair_dropout);
      read_opt(t, "node_hidden", cfg.train.node_hidden);
      if (t.contains("corrupt")) {
        auto slot = t.at("corrupt").get<std::string>();
        if (slot == "hyponym") cfg.train.corrupt = CorruptSlot::kHyponym;
        else if (slot == "hypernym") cfg.train.corrupt = CorruptSlot::kHypernym;
        else throw ParseError(where + ": train.corrupt must be hyponym or hypernym");
      }
    }
    if (doc.contains("evaluation")) {
      const auto& e = doc.at("evaluation");
      check_keys(e, {"ks"}, where + ": evaluation");
      read_opt(e, "ks", cfg.ks);
    }
    if (doc.contains("taxonomy")) {
      const auto& t = doc.at("taxonomy");
      check_keys(t, {"top_terms", "top_edges", "removal"}, where + ": taxonomy");
      read_opt(t, "top_terms", cfg.taxonomy.top_terms);
      read_opt(t, "top_edges", cfg.taxonomy.top_edges);
      if (t.contains("removal")) {
        auto r = t.at("removal").get<std::string>();
        if (r == "uniform") cfg.taxonomy.removal = RemovalPolicy::kUniform;
        else if (r == "low_score") cfg.taxonomy.removal = RemovalPolicy::kLowScoreWeighted;
        else throw ParseError(where + ": taxonomy.removal must be uniform or low_score");
      }
    }
    read_opt(doc, "seed", cfg.seed);
    read_opt(doc, "threads", cfg.threads);
    read_opt(doc, "deterministic", cfg.deterministic);
  } catch (const json::exception& ex) {
    throw ParseError(where + ": " + ex.what());
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  return parse_pipeline_config(read_file(path), fs::absolute(path).parent_path(), path.filename().string());
}

StageSeeds stage_seeds(std::uint64_t s) { return {s + 101, s + 202, s + 303, s + 404, s + 505, s + 606}; }

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"extract-seeds", "embed", "build-contexts", "compute-features",
                                                 "train",         "score", "evaluate",       "build-taxonomy"};
  return names;
}

std::vector<TermPair> candidate_pairs(CandidateMode mode, const Vocabulary& vocab, const LabeledPairSet* labels,
                                      std::span<const ContextIndex> contexts) {
  std::vector<TermPair> out;
  switch (mode) {
    case CandidateMode::kLabels:
      if (labels == nullptr) throw ValidationError("candidate mode 'labels' needs a labels file");
      for (const auto& lp : labels->pairs()) out.push_back(lp.pair);
      break;
    case CandidateMode::kAll:
      for (TermId a = 0; a < vocab.size(); ++a) {
        for (TermId b = 0; b < vocab.size(); ++b) {
          if (a != b) out.emplace_back(a, b);
        }
      }
      break;
    case CandidateMode::kCooccur:
      out = cooccurring_pairs(contexts, vocab.size());
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<TermId> negative_pool(const SeedPairSet& seeds, std::span<const TermPair> candidates) {
  std::vector<TermId> pool = seeds.terms();
  for (const auto& p : candidates) {
    pool.push_back(p.first);
    pool.push_back(p.second);
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return pool;
}

std::vector<TermPair> feature_pairs(const SeedPairSet& seeds, std::span<const TermPair> candidates,
                                    CorruptSlot corrupt) {
  std::vector<TermPair> out(candidates.begin(), candidates.end());
  for (const auto& p : seeds.pairs()) out.emplace_back(p.hypernym, p.hyponym);
  if (!seeds.empty()) {
    auto pool = negative_pool(seeds, candidates);
    NegativeSampler sampler(seeds, pool, corrupt);
    auto neg = sampler.admissible_pairs();
    out.insert(out.end(), neg.begin(), neg.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string serialize_pairs(std::span<const TermPair> pairs, const Vocabulary& vocab) {
  std::string out;
  for (const auto& [a, b] : pairs) out += vocab[a].surface + '\t' + vocab[b].surface + '\n';
  return out;
}

std::vector<TermPair> parse_pairs(std::string_view tsv, const Vocabulary& vocab, const std::string& where) {
  std::vector<TermPair> out;
  std::size_t line_no = 0;
  for (const auto& line : split(tsv, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    std::string loc = where + ":" + std::to_string(line_no);
    auto fields = split(line, '\t');
    if (fields.size() < 2) throw ParseError(loc + ": expected two terms");
    auto a = vocab.find_surface(normalize_term(fields[0]));
    auto b = vocab.find_surface(normalize_term(fields[1]));
    if (!a || !b) throw ValidationError(loc + ": term not in vocabulary");
    out.emplace_back(*a, *b);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string context_file_name(std::size_t index, const ContextSpec& spec) {
  std::string label = spec.label();
  std::replace(label.begin(), label.end(), ':', '_');
  std::string idx = std::to_string(index);
  if (idx.size() < 2) idx = "0" + idx;
  return idx + "_" + label + ".jsonl";
}

std::string tsv_trace(const std::vector<double>& trace) {
  std::string out = "epoch\tloss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i + 1) + '\t' + format_double(trace[i]) + '\n';
  return out;
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const RunOptions& opt)
      : cfg_(cfg), opt_(opt), out_(cfg.output_dir), seeds_(stage_seeds(cfg.seed)) {
    threads_ = cfg.deterministic ? 1 : cfg.threads;
    manifest_path_ = out_ / "manifest.json";
    if (fs::exists(manifest_path_) && !opt.force) {
      try {
        manifest_ = json::parse(read_file(manifest_path_));
      } catch (const json::exception& ex) {
        throw PipelineError("manifest", "cannot parse " + manifest_path_.string() + ": " + ex.what());
      }
    }
    if (!manifest_.is_object()) manifest_ = json::object();
    manifest_["tool"] = "hypermine";
    manifest_["version"] = kVersion;
    manifest_["seed"] = cfg.seed;
    if (!manifest_.contains("stages")) manifest_["stages"] = json::object();
  }

  std::vector<StageReport> run() {
    const fs::path nodes = cfg_.graph_dir / "nodes.tsv", edges = cfg_.graph_dir / "edges.tsv",
                   schema = cfg_.graph_dir / "schema.json";
    const std::vector<fs::path> graph_files{nodes, edges, schema};
    auto with = [&](std::vector<fs::path> extra) {
      std::vector<fs::path> all = graph_files;
      all.insert(all.end(), extra.begin(), extra.end());
      return all;
    };
    const fs::path seeds_path = out_ / "seeds.tsv";
    const fs::path emb_path = out_ / "embedding.tsv";
    const fs::path features_path = out_ / "features.tsv";
    const fs::path candidates_path = out_ / "candidates.tsv";
    const fs::path model_path = out_ / "model.json";
    const fs::path loss_path = out_ / "loss.tsv";
    const fs::path ranked_path = out_ / "ranked.tsv";
    const fs::path metrics_path = out_ / "metrics.json";
    const fs::path dot_path = out_ / "taxonomy.dot", tax_json_path = out_ / "taxonomy.json",
                   removed_path = out_ / "removed_edges.tsv";
    std::vector<fs::path> context_paths;
    for (std::size_t i = 0; i < cfg_.contexts.size(); ++i) {
      context_paths.push_back(out_ / "contexts" / context_file_name(i, cfg_.contexts[i]));
    }
    const bool has_labels = !cfg_.labels.empty();

    // extract-seeds
    stage("extract-seeds", ojson{{"target_type", cfg_.target_type}, {"patterns", cfg_.patterns}},
          with({cfg_.corpus}), {seeds_path}, [&] {
            auto corpus = load_corpus(cfg_.corpus, graph());
            auto seeds = extract_seed_pairs(corpus, vocab(), PatternSet::parse(cfg_.patterns));
            write_seeds(seeds_path, seeds, vocab());
          });
    if (stopped("extract-seeds")) return reports_;

    // embed
    {
      ojson params{{"dim", cfg_.embedding.dim},
                   {"walks_per_node", cfg_.embedding.walks_per_node},
                   {"walk_length", cfg_.embedding.walk_length},
                   {"window", cfg_.embedding.window},
                   {"negatives", cfg_.embedding.negatives},
                   {"epochs", cfg_.embedding.epochs},
                   {"learning_rate", cfg_.embedding.learning_rate},
                   {"seed", seeds_.embed},
                   {"import", cfg_.embedding_import ? cfg_.embedding_import->string() : ""}};
      auto inputs = cfg_.embedding_import ? with({*cfg_.embedding_import}) : graph_files;
      stage("embed", params, inputs, {emb_path}, [&] {
        NodeEmbeddings emb = cfg_.embedding_import ? import_embedding(*cfg_.embedding_import)
                                                   : train_embedding(graph(), cfg_.embedding, seeds_.embed);
        write_embedding(emb_path, emb);
      });
    }
    if (stopped("embed")) return reports_;

    // build-contexts
    {
      ojson specs = ojson::array();
      bool needs_vectors = false;
      for (const auto& c : cfg_.contexts) {
        specs.push_back(c.label());
        needs_vectors |= c.kind == ContextKind::kCluster;
      }
      auto inputs = needs_vectors ? with({emb_path}) : graph_files;
      stage("build-contexts", ojson{{"contexts", specs}, {"target_type", cfg_.target_type}, {"seed", seeds_.contexts}},
            inputs, context_paths, [&] {
              std::optional<NodeEmbeddings> emb;
              if (needs_vectors) emb = import_embedding(emb_path);
              auto simplest = build_simplest(graph(), vocab(), cfg_.target_type);
              for (std::size_t i = 0; i < cfg_.contexts.size(); ++i) {
                auto ctx = build_context(cfg_.contexts[i], graph(), vocab(), cfg_.target_type, &simplest,
                                         emb ? &*emb : nullptr, seeds_.contexts + i);
                write_context(context_paths[i], ctx, vocab());
              }
            });
    }
    if (stopped("build-contexts")) return reports_;

    // compute-features
    {
      ojson measures = ojson::array();
      for (auto m : cfg_.measures) measures.push_back(measure_name(m));
      ojson params{{"measures", measures},
                   {"candidates", candidate_mode_name(cfg_.candidates)},
                   {"corrupt", cfg_.train.corrupt == CorruptSlot::kHyponym ? "hyponym" : "hypernym"}};
      std::vector<fs::path> inputs = with(context_paths);
      inputs.push_back(seeds_path);
      if (cfg_.candidates == CandidateMode::kLabels) inputs.push_back(cfg_.labels);
      stage("compute-features", params, inputs, {features_path, candidates_path}, [&] {
        auto contexts = load_contexts(context_paths);
        auto seeds = read_seeds(seeds_path, vocab());
        std::optional<LabeledPairSet> labels;
        if (cfg_.candidates == CandidateMode::kLabels) labels = read_labels(cfg_.labels, vocab());
        auto cands = candidate_pairs(cfg_.candidates, vocab(), labels ? &*labels : nullptr, contexts);
        auto pairs = feature_pairs(seeds, cands, cfg_.train.corrupt);
        auto features = compute_pairwise_features(pairs, contexts, cfg_.measures, threads_);
        if (features.missing_blocks() > 0) {
          log::warn(std::to_string(features.missing_blocks()) + " (pair, context) feature blocks had an uncovered term");
        }
        write_features(features_path, features, vocab());
        write_file(candidates_path, serialize_pairs(cands, vocab()));
      });
    }
    if (stopped("compute-features")) return reports_;

    // train
    {
      const auto& t = cfg_.train;
      ojson params{{"negative_ratio", t.negative_ratio}, {"epochs", t.epochs},
                   {"batch_size", t.batch_size},         {"learning_rate", t.learning_rate},
                   {"node_dropout", t.node_dropout},     {"pair_dropout", t.pair_dropout},
                   {"node_hidden", t.node_hidden},       {"seed", seeds_.train}};
      stage("train", params, with({seeds_path, features_path, candidates_path, emb_path}), {model_path, loss_path},
            [&] {
              auto seeds = read_seeds(seeds_path, vocab());
              auto features = read_features(features_path, vocab());
              auto emb = import_embedding(emb_path);
              auto cands = parse_pairs(read_file(candidates_path), vocab(), "candidates.tsv");
              ModelInputs inputs(vocab(), emb, features);
              TrainConfig tc = cfg_.train;
              tc.seed = seeds_.train;
              auto pool = negative_pool(seeds, cands);
              auto result = train(seeds, inputs, tc, pool);
              write_file(model_path, serialize_checkpoint(result.params, features.layout_fingerprint(), tc));
              write_file(loss_path, tsv_trace(result.loss_trace));
            });
    }
    if (stopped("train")) return reports_;

    // score
    stage("score", ojson{{"tie_seed", seeds_.score}}, with({model_path, features_path, candidates_path, emb_path}),
          {ranked_path}, [&] {
            auto cp = parse_checkpoint(read_file(model_path), "model.json");
            auto features = read_features(features_path, vocab());
            if (cp.layout_fingerprint != features.layout_fingerprint()) {
              throw ValidationError("model was trained on a different feature layout");
            }
            auto emb = import_embedding(emb_path);
            auto cands = parse_pairs(read_file(candidates_path), vocab(), "candidates.tsv");
            ModelInputs inputs(vocab(), emb, features);
            auto ranked = rank_pairs(cp.params, cands, inputs, seeds_.score, threads_);
            write_file(ranked_path, serialize_ranked(ranked, vocab()));
          });
    if (stopped("score")) return reports_;

    // evaluate
    if (has_labels) {
      ojson ks = cfg_.ks;
      stage("evaluate", ojson{{"ks", ks}, {"tie_seed", seeds_.evaluate}}, with({ranked_path, cfg_.labels}),
            {metrics_path}, [&] {
              auto ranked = parse_ranked(read_file(ranked_path), vocab(), "ranked.tsv");
              auto labels = read_labels(cfg_.labels, vocab());
              auto report = evaluate(ranked, labels, cfg_.ks, seeds_.evaluate);
              write_file(metrics_path, serialize_report(report));
            });
    } else {
      progress("evaluate: skipped (no labels)");
    }
    if (stopped("evaluate")) return reports_;

    // build-taxonomy
    stage("build-taxonomy",
          ojson{{"top_terms", cfg_.taxonomy.top_terms},
                {"top_edges", cfg_.taxonomy.top_edges},
                {"removal", cfg_.taxonomy.removal == RemovalPolicy::kUniform ? "uniform" : "low_score"},
                {"seed", seeds_.taxonomy}},
          with({ranked_path}), {dot_path, tax_json_path, removed_path}, [&] {
            auto ranked = parse_ranked(read_file(ranked_path), vocab(), "ranked.tsv");
            TaxonomyConfig tc = cfg_.taxonomy;
            tc.seed = seeds_.taxonomy;
            auto dag = build_taxonomy(ranked, tc);
            write_file(dot_path, taxonomy_to_dot(dag, vocab()));
            write_file(tax_json_path, taxonomy_to_json(dag, vocab()));
            write_file(removed_path, removed_edges_tsv(dag, vocab()));
          });
    return reports_;
  }

 private:
  const HinGraph& graph() {
    if (!graph_) graph_ = load_graph_dir(cfg_.graph_dir);
    return *graph_;
  }
  const Vocabulary& vocab() {
    if (!vocab_) vocab_ = target_vocabulary(graph(), cfg_.target_type);
    return *vocab_;
  }

  std::vector<ContextIndex> load_contexts(const std::vector<fs::path>& paths) {
    std::vector<ContextIndex> out;
    for (const auto& p : paths) out.push_back(read_context(p));
    return out;
  }

  void progress(const std::string& line) {
    if (opt_.progress) opt_.progress(line);
  }

  bool stopped(const std::string& stage) const { return opt_.stop_after && *opt_.stop_after == stage; }

  std::string rel(const fs::path& p) const {
    auto r = p.lexically_relative(out_);
    return (r.empty() || r.native().rfind("..", 0) == 0) ? p.string() : r.string();
  }

  json hash_files(const std::vector<fs::path>& files, const std::string& stage, const char* what) {
    json out = json::object();
    for (const auto& f : files) {
      if (!fs::exists(f)) throw PipelineError(stage, std::string("missing ") + what + " file " + f.string());
      out[rel(f)] = sha256_file(f);
    }
    return out;
  }

  template <typename Fn>
  void stage(const std::string& name, const ojson& params, const std::vector<fs::path>& inputs,
             const std::vector<fs::path>& outputs, Fn&& fn) {
    const std::string params_hash = sha256_hex(params.dump());
    json& stages = manifest_["stages"];
    try {
      json input_hashes = hash_files(inputs, name, "input");
      if (!opt_.force && stages.contains(name)) {
        const json& entry = stages[name];
        const json recorded = entry.value("outputs", json::object());
        bool outputs_present = true;
        for (const auto& [path, hash] : recorded.items()) {
          fs::path full = fs::path(path).is_absolute() ? fs::path(path) : out_ / path;
          if (!fs::exists(full)) {
            outputs_present = false;
            continue;
          }
          if (sha256_file(full) != hash.template get<std::string>()) {
            throw PipelineError(name, "hash mismatch for " + full.string() +
                                          ": the file changed since it was written; refusing to resume "
                                          "(rerun with --force to recompute)");
          }
        }
        bool outputs_match = outputs_present && recorded.size() == outputs.size();
        if (outputs_match && entry.value("params_hash", "") == params_hash && entry.value("inputs", json()) == input_hashes) {
          reports_.push_back({name, true});
          progress(name + ": up to date");
          return;
        }
      }
      progress(name + ": running");
      fn();
      json entry;
      entry["params"] = params;
      entry["params_hash"] = params_hash;
      entry["inputs"] = std::move(input_hashes);
      entry["outputs"] = hash_files(outputs, name, "output");
      stages[name] = std::move(entry);
      write_file(manifest_path_, manifest_.dump(2) + "\n");
      reports_.push_back({name, false});
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& ex) {
      throw PipelineError(name, ex.what());
    }
  }

  const PipelineConfig& cfg_;
  const RunOptions& opt_;
  fs::path out_;
  fs::path manifest_path_;
  StageSeeds seeds_;
  std::size_t threads_ = 1;
  json manifest_;
  std::optional<HinGraph> graph_;
  std::optional<Vocabulary> vocab_;
  std::vector<StageReport> reports_;
};

}  // namespace

std::vector<StageReport> run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  if (options.stop_after &&
      std::find(stage_names().begin(), stage_names().end(), *options.stop_after) == stage_names().end()) {
    throw ValidationError("unknown stage " + *options.stop_after);
  }
  fs::create_directories(config.output_dir);
  Runner runner(config, options);
  return runner.run();
}

}  // namespace hypermine
