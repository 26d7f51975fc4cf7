// hypermine command line.
//
// Every stage subcommand works either on explicit files or, given --config,
// runs the configured pipeline up to and including that stage.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "hypermine/log.hpp"
#include "hypermine/pipeline.hpp"
#include "hypermine/synth.hpp"

namespace fs = std::filesystem;
using namespace hypermine;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool deterministic = false;

  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
  std::size_t thread_count() const { return deterministic ? 1 : threads.value_or(1); }
};

struct GraphArgs {
  std::string graph;
  std::string target_type = "keyword";
};

void add_graph_args(CLI::App* cmd, GraphArgs& g) {
  cmd->add_option("--graph", g.graph, "directory with nodes.tsv, edges.tsv, schema.json");
  cmd->add_option("--target-type", g.target_type, "node type whose nodes are the terms");
}

struct Loaded {
  HinGraph graph;
  Vocabulary vocab;
};

Loaded load(const GraphArgs& g) {
  if (g.graph.empty()) throw ValidationError("--graph is required without --config");
  Loaded l{load_graph_dir(g.graph), {}};
  l.vocab = target_vocabulary(l.graph, g.target_type);
  return l;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string(flag) + " is required without --config");
}

PipelineConfig config_with_overrides(const Globals& globals) {
  auto cfg = load_pipeline_config(globals.config);
  if (globals.seed) cfg.seed = *globals.seed;
  if (globals.threads) cfg.threads = *globals.threads;
  if (globals.deterministic) cfg.deterministic = true;
  cfg.validate();
  return cfg;
}

void run_config(const Globals& globals, std::optional<std::string> stop_after, bool force) {
  auto cfg = config_with_overrides(globals);
  RunOptions opt;
  opt.force = force;
  opt.stop_after = std::move(stop_after);
  opt.progress = [](const std::string& line) { std::cerr << line << "\n"; };
  run_pipeline(cfg, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypermine: hypernymy discovery over text-rich heterogeneous information networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals globals;
  app.add_option("--config", globals.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", globals.seed, "global seed");
  app.add_option("--threads", globals.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", globals.deterministic, "single-threaded, fixed reduction order");
  app.set_version_flag("--version", kVersion);

  // synth
  SynthConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic HIN with a planted concept tree");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--depth", synth.depth);
  synth_cmd->add_option("--branching", synth.branching);
  synth_cmd->add_option("--terms-per-concept", synth.terms_per_concept);
  synth_cmd->add_option("--documents", synth.documents);
  synth_cmd->add_option("--p-anc", synth.p_anc);
  synth_cmd->add_option("--docs-per-author", synth.docs_per_author);
  synth_cmd->add_option("--venues-per-area", synth.venues_per_area);
  synth_cmd->add_option("--years", synth.years);
  synth_cmd->add_option("--hearst-fraction", synth.hearst_fraction);
  synth_cmd->add_option("--plural-probability", synth.plural_probability);
  synth_cmd->add_option("--filler-sentences", synth.filler_sentences);
  synth_cmd->add_option("--negatives-per-side", synth.negatives_per_side);

  // extract-seeds
  GraphArgs seeds_graph;
  std::string seeds_corpus, seeds_out, patterns = "default";
  auto* seeds_cmd = app.add_subcommand("extract-seeds", "extract hypernymy seed pairs with Hearst patterns");
  add_graph_args(seeds_cmd, seeds_graph);
  seeds_cmd->add_option("--corpus", seeds_corpus, "corpus JSON lines");
  bool vocab_from_graph = true;
  seeds_cmd->add_flag("--vocab-from-graph", vocab_from_graph,
                      "take the term vocabulary from the graph's target nodes (the only source)");
  seeds_cmd->add_option("--patterns", patterns, "default or a comma list of pattern names");
  seeds_cmd->add_option("--out", seeds_out, "seed pairs TSV");

  // embed
  GraphArgs embed_graph;
  EmbeddingConfig embed_cfg;
  std::string embed_out, embed_import;
  auto* embed_cmd = app.add_subcommand("embed", "train node embeddings (typed random walks + skip-gram)");
  add_graph_args(embed_cmd, embed_graph);
  embed_cmd->add_option("--dim", embed_cfg.dim);
  embed_cmd->add_option("--walks-per-node", embed_cfg.walks_per_node);
  embed_cmd->add_option("--walk-length", embed_cfg.walk_length);
  embed_cmd->add_option("--window", embed_cfg.window);
  embed_cmd->add_option("--negatives", embed_cfg.negatives);
  embed_cmd->add_option("--epochs", embed_cfg.epochs);
  embed_cmd->add_option("--learning-rate", embed_cfg.learning_rate);
  embed_cmd->add_option("--import", embed_import, "validate and copy precomputed vectors instead");
  embed_cmd->add_option("--out", embed_out, "embedding file");

  // build-contexts
  GraphArgs ctx_graph;
  std::vector<std::string> ctx_specs;
  std::string ctx_embedding, ctx_out;
  auto* ctx_cmd = app.add_subcommand("build-contexts", "build context indexes (simplest, groupby:T, cluster:K)");
  add_graph_args(ctx_cmd, ctx_graph);
  ctx_cmd->add_option("--context", ctx_specs, "context spec, repeatable");
  ctx_cmd->add_option("--embedding", ctx_embedding, "node vectors, needed for cluster:K");
  ctx_cmd->add_option("--out-dir", ctx_out, "directory for the context files");

  // compute-features
  GraphArgs feat_graph;
  std::vector<std::string> feat_contexts, feat_measures;
  std::string feat_seeds, feat_labels, feat_out, feat_cands_out, feat_mode = "labels", feat_corrupt = "hyponym";
  auto* feat_cmd = app.add_subcommand("compute-features", "compute pairwise DIH feature vectors");
  add_graph_args(feat_cmd, feat_graph);
  feat_cmd->add_option("--contexts", feat_contexts, "context files in layout order");
  feat_cmd->add_option("--measures", feat_measures, "measures (default M1 M2 M3 M4)");
  feat_cmd->add_option("--seeds", feat_seeds, "seed pairs TSV");
  feat_cmd->add_option("--labels", feat_labels, "labels TSV (for --candidates labels)");
  feat_cmd->add_option("--candidates", feat_mode, "labels, all or cooccur");
  feat_cmd->add_option("--corrupt", feat_corrupt, "negative slot: hyponym or hypernym");
  feat_cmd->add_option("--out", feat_out, "features TSV");
  feat_cmd->add_option("--candidates-out", feat_cands_out, "candidate pairs TSV");

  // train
  GraphArgs train_graph;
  TrainConfig train_cfg;
  std::string train_seeds, train_features, train_emb_path, train_cands, train_out, train_loss, train_corrupt = "hyponym";
  auto* train_cmd = app.add_subcommand("train", "train the hypernymy inference model");
  add_graph_args(train_cmd, train_graph);
  train_cmd->add_option("--seeds", train_seeds);
  train_cmd->add_option("--features", train_features);
  train_cmd->add_option("--embedding", train_emb_path);
  train_cmd->add_option("--candidates", train_cands, "candidate pairs TSV; their terms join the negative pool");
  train_cmd->add_option("--negative-ratio", train_cfg.negative_ratio);
  train_cmd->add_option("--epochs", train_cfg.epochs);
  train_cmd->add_option("--batch-size", train_cfg.batch_size);
  train_cmd->add_option("--learning-rate", train_cfg.learning_rate);
  train_cmd->add_option("--node-dropout", train_cfg.node_dropout);
  train_cmd->add_option("--pair-dropout", train_cfg.pair_dropout);
  train_cmd->add_option("--node-hidden", train_cfg.node_hidden);
  train_cmd->add_option("--corrupt", train_corrupt, "negative slot: hyponym or hypernym");
  train_cmd->add_option("--out", train_out, "model checkpoint");
  train_cmd->add_option("--loss-out", train_loss, "per-epoch loss TSV");

  // score
  GraphArgs score_graph;
  std::string score_model, score_features, score_embedding, score_cands, score_out;
  std::uint64_t score_tie_seed = 0;
  auto* score_cmd = app.add_subcommand("score", "score and rank candidate pairs");
  add_graph_args(score_cmd, score_graph);
  score_cmd->add_option("--model", score_model);
  score_cmd->add_option("--features", score_features);
  score_cmd->add_option("--embedding", score_embedding);
  score_cmd->add_option("--candidates", score_cands, "candidate pairs TSV");
  score_cmd->add_option("--tie-seed", score_tie_seed);
  score_cmd->add_option("--out", score_out, "ranked pairs TSV");

  // evaluate
  GraphArgs eval_graph;
  std::string eval_ranked, eval_labels, eval_out;
  std::vector<std::size_t> eval_ks;
  std::uint64_t eval_tie_seed = 0;
  auto* eval_cmd = app.add_subcommand("evaluate", "P@k and reciprocal-rank metrics");
  add_graph_args(eval_cmd, eval_graph);
  eval_cmd->add_option("--ranked", eval_ranked);
  eval_cmd->add_option("--labels", eval_labels);
  eval_cmd->add_option("--k", eval_ks, "cutoff, repeatable (default 100 and 1000)");
  eval_cmd->add_option("--tie-seed", eval_tie_seed);
  eval_cmd->add_option("--out", eval_out, "metrics JSON (stdout when omitted)");

  // build-taxonomy
  GraphArgs tax_graph;
  TaxonomyConfig tax_cfg;
  std::string tax_ranked, tax_out, tax_removal = "uniform";
  auto* tax_cmd = app.add_subcommand("build-taxonomy", "prune the ranking into an acyclic taxonomy");
  add_graph_args(tax_cmd, tax_graph);
  tax_cmd->add_option("--ranked", tax_ranked);
  tax_cmd->add_option("--top-terms", tax_cfg.top_terms);
  tax_cmd->add_option("--top-edges", tax_cfg.top_edges);
  tax_cmd->add_option("--removal", tax_removal, "uniform or low_score");
  tax_cmd->add_option("--out-dir", tax_out, "directory for taxonomy.dot, taxonomy.json, removed_edges.tsv");

  // run
  bool force = false;
  std::string stop_after;
  auto* run_cmd = app.add_subcommand("run", "run the configured pipeline, resuming from existing files");
  run_cmd->add_flag("--force", force, "recompute every stage");
  run_cmd->add_option("--stop-after", stop_after, "last stage to run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const bool use_config = !globals.config.empty();
    auto stage_via_config = [&](const char* stage) {
      run_config(globals, std::string(stage), false);
      return 0;
    };

    if (synth_cmd->parsed()) {
      synth.seed = globals.seed_or(0);
      auto data = generate_synthetic_hin(synth);
      write_synthetic(data, synth_out);
      std::cerr << "wrote " << data.vocab.size() << " terms, " << data.corpus.documents.size() << " documents, "
                << data.labels.size() << " labeled pairs to " << synth_out << "\n";
      return 0;
    }
    if (run_cmd->parsed()) {
      if (!use_config) throw ValidationError("run needs --config");
      run_config(globals, stop_after.empty() ? std::nullopt : std::optional<std::string>(stop_after), force);
      return 0;
    }

    if (seeds_cmd->parsed()) {
      if (use_config) return stage_via_config("extract-seeds");
      require(seeds_corpus, "--corpus");
      require(seeds_out, "--out");
      auto l = load(seeds_graph);
      auto corpus = load_corpus(seeds_corpus, l.graph);
      auto seeds = extract_seed_pairs(corpus, l.vocab, PatternSet::parse(patterns));
      write_seeds(seeds_out, seeds, l.vocab);
      std::cerr << seeds.size() << " seed pairs\n";
      return 0;
    }
    if (embed_cmd->parsed()) {
      if (use_config) return stage_via_config("embed");
      require(embed_out, "--out");
      NodeEmbeddings emb;
      if (!embed_import.empty()) {
        emb = import_embedding(embed_import);
      } else {
        auto l = load(embed_graph);
        emb = train_embedding(l.graph, embed_cfg, stage_seeds(globals.seed_or(0)).embed);
      }
      write_embedding(embed_out, emb);
      return 0;
    }
    if (ctx_cmd->parsed()) {
      if (use_config) return stage_via_config("build-contexts");
      require(ctx_out, "--out-dir");
      if (ctx_specs.empty()) throw ValidationError("--context is required without --config");
      auto l = load(ctx_graph);
      std::optional<NodeEmbeddings> emb;
      if (!ctx_embedding.empty()) emb = import_embedding(ctx_embedding);
      auto simplest = build_simplest(l.graph, l.vocab, ctx_graph.target_type);
      const auto seed = stage_seeds(globals.seed_or(0)).contexts;
      for (std::size_t i = 0; i < ctx_specs.size(); ++i) {
        auto spec = ContextSpec::parse(ctx_specs[i]);
        auto ctx = build_context(spec, l.graph, l.vocab, ctx_graph.target_type, &simplest, emb ? &*emb : nullptr,
                                 seed + i);
        std::string name = spec.label();
        std::replace(name.begin(), name.end(), ':', '_');
        fs::path path = fs::path(ctx_out) / ((i < 10 ? "0" : "") + std::to_string(i) + "_" + name + ".jsonl");
        write_context(path, ctx, l.vocab);
        std::cout << path.string() << "\n";
      }
      return 0;
    }
    if (feat_cmd->parsed()) {
      if (use_config) return stage_via_config("compute-features");
      require(feat_out, "--out");
      require(feat_seeds, "--seeds");
      if (feat_contexts.empty()) throw ValidationError("--contexts is required without --config");
      auto l = load(feat_graph);
      std::vector<ContextIndex> contexts;
      for (const auto& p : feat_contexts) contexts.push_back(read_context(p));
      std::vector<Measure> measures(kAllMeasures.begin(), kAllMeasures.end());
      if (!feat_measures.empty()) {
        measures.clear();
        for (const auto& m : feat_measures) measures.push_back(parse_measure(m));
      }
      auto seeds = read_seeds(feat_seeds, l.vocab);
      std::optional<LabeledPairSet> labels;
      if (!feat_labels.empty()) labels = read_labels(feat_labels, l.vocab);
      auto cands = candidate_pairs(parse_candidate_mode(feat_mode), l.vocab, labels ? &*labels : nullptr, contexts);
      auto slot = feat_corrupt == "hypernym" ? CorruptSlot::kHypernym : CorruptSlot::kHyponym;
      auto features = compute_pairwise_features(feature_pairs(seeds, cands, slot), contexts, measures,
                                                globals.thread_count());
      write_features(feat_out, features, l.vocab);
      if (!feat_cands_out.empty()) write_file(feat_cands_out, serialize_pairs(cands, l.vocab));
      std::cerr << features.size() << " pairs x " << features.dim() << " features\n";
      return 0;
    }
    if (train_cmd->parsed()) {
      if (use_config) return stage_via_config("train");
      require(train_seeds, "--seeds");
      require(train_features, "--features");
      require(train_emb_path, "--embedding");
      require(train_out, "--out");
      auto l = load(train_graph);
      auto seeds = read_seeds(train_seeds, l.vocab);
      auto features = read_features(train_features, l.vocab);
      auto emb = import_embedding(train_emb_path);
      std::vector<TermPair> cands;
      if (!train_cands.empty()) cands = parse_pairs(read_file(train_cands), l.vocab, train_cands);
      train_cfg.corrupt = train_corrupt == "hypernym" ? CorruptSlot::kHypernym : CorruptSlot::kHyponym;
      train_cfg.seed = stage_seeds(globals.seed_or(0)).train;
      ModelInputs inputs(l.vocab, emb, features);
      auto result = train(seeds, inputs, train_cfg, negative_pool(seeds, cands));
      write_file(train_out, serialize_checkpoint(result.params, features.layout_fingerprint(), train_cfg));
      if (!train_loss.empty()) {
        std::string trace = "epoch\tloss\n";
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
          trace += std::to_string(i + 1) + '\t' + format_double(result.loss_trace[i]) + '\n';
        }
        write_file(train_loss, trace);
      }
      return 0;
    }
    if (score_cmd->parsed()) {
      if (use_config) return stage_via_config("score");
      require(score_model, "--model");
      require(score_features, "--features");
      require(score_embedding, "--embedding");
      require(score_cands, "--candidates");
      require(score_out, "--out");
      auto l = load(score_graph);
      auto cp = parse_checkpoint(read_file(score_model), score_model);
      auto features = read_features(score_features, l.vocab);
      if (cp.layout_fingerprint != features.layout_fingerprint()) {
        throw ValidationError("model was trained on a different feature layout");
      }
      auto emb = import_embedding(score_embedding);
      auto cands = parse_pairs(read_file(score_cands), l.vocab, score_cands);
      ModelInputs inputs(l.vocab, emb, features);
      auto ranked = rank_pairs(cp.params, cands, inputs, score_tie_seed, globals.thread_count());
      write_file(score_out, serialize_ranked(ranked, l.vocab));
      return 0;
    }
    if (eval_cmd->parsed()) {
      if (use_config) return stage_via_config("evaluate");
      require(eval_ranked, "--ranked");
      require(eval_labels, "--labels");
      auto l = load(eval_graph);
      if (eval_ks.empty()) eval_ks = {100, 1000};
      auto ranked = parse_ranked(read_file(eval_ranked), l.vocab, eval_ranked);
      auto labels = read_labels(eval_labels, l.vocab);
      auto report = serialize_report(evaluate(ranked, labels, eval_ks, eval_tie_seed));
      if (eval_out.empty()) {
        std::cout << report;
      } else {
        write_file(eval_out, report);
      }
      return 0;
    }
    if (tax_cmd->parsed()) {
      if (use_config) return stage_via_config("build-taxonomy");
      require(tax_ranked, "--ranked");
      require(tax_out, "--out-dir");
      auto l = load(tax_graph);
      if (tax_removal == "low_score") {
        tax_cfg.removal = RemovalPolicy::kLowScoreWeighted;
      } else if (tax_removal != "uniform") {
        throw ValidationError("--removal must be uniform or low_score");
      }
      tax_cfg.seed = stage_seeds(globals.seed_or(0)).taxonomy;
      auto ranked = parse_ranked(read_file(tax_ranked), l.vocab, tax_ranked);
      auto dag = build_taxonomy(ranked, tax_cfg);
      write_file(fs::path(tax_out) / "taxonomy.dot", taxonomy_to_dot(dag, l.vocab));
      write_file(fs::path(tax_out) / "taxonomy.json", taxonomy_to_json(dag, l.vocab));
      write_file(fs::path(tax_out) / "removed_edges.tsv", removed_edges_tsv(dag, l.vocab));
      std::cerr << dag.edges.size() << " edges kept, " << dag.removed_edges.size() << " removed\n";
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
