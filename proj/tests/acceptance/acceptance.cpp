// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hypermine/context.hpp"
#include "hypermine/dih.hpp"
#include "hypermine/hearst.hpp"
#include "hypermine/log.hpp"
#include "hypermine/metrics.hpp"
#include "hypermine/model.hpp"
#include "hypermine/pipeline.hpp"
#include "hypermine/synth.hpp"
#include "hypermine/taxonomy.hpp"
#include "hypermine/util.hpp"
#include "test_oracles.hpp"

using namespace hypermine;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// 1. DIH measures vs literal evaluation on random fixtures.
Outcome dih_oracle() {
  Rng rng(20240501);
  double worst = 0.0;
  std::size_t pairs = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto fx = oracle::random_context(rng, 20, 10);
    for (TermId a = 0; a < fx.num_terms; ++a) {
      for (TermId b = 0; b < fx.num_terms; ++b) {
        if (a == b) continue;
        auto s = dih_measures(fx.ctx, a, b);
        auto o = oracle::brute_force_measures(fx.relevance, a, b);
        worst = std::max({worst, std::abs(s.m1 - o[0]), std::abs(s.m2 - o[1]), std::abs(s.m3 - o[2]),
                          std::abs(s.m4 - o[3])});
        ++pairs;
      }
    }
  }
  return {worst <= 1e-12, fmt("500 fixtures, %zu ordered pairs, max |diff| %.3g", pairs, worst)};
}

// 2. Analytic gradient vs central differences.
Outcome gradient_fidelity() {
  Rng rng(77);
  double worst = 0.0;
  for (int m = 0; m < 20; ++m) {
    const std::size_t terms = 6;
    auto fx = oracle::random_model_fixture(rng, terms, 4, 8);
    ModelInputs inputs(fx.node_dim, fx.node_rows, fx.pairwise);
    auto params = ModelParams::initialize(ModelShape{4, 6, 8}, static_cast<std::uint64_t>(m));
    oracle::randomize(params, rng, 0.8);
    std::vector<TrainingExample> examples;
    for (int e = 0; e < 4; ++e) {
      TermId a = static_cast<TermId>(uniform_index(rng, terms));
      auto other = [&] { return static_cast<TermId>((a + 1 + uniform_index(rng, terms - 1)) % terms); };
      TrainingExample ex{{a, other()}, {}};
      for (int j = 0; j < 3; ++j) ex.negatives.emplace_back(a, other());
      examples.push_back(ex);
    }
    worst = std::max(worst, gradient_check(params, examples, inputs, 1e-5).max_relative_error);
  }
  return {worst < 1e-4, fmt("20 models (d=4, N=8), max relative error %.3g", worst)};
}

// 3. Reciprocal-rank metrics.
Outcome metric_correctness() {
  std::vector<GroupRank> groups{{0.5, 0.5, 1}, {1.0, 1.0, 3}};
  auto two = aggregate_group_ranks(groups);
  bool ok = two.ma_marr == 0.75 && two.mi_marr == 0.875;

  RankedPairList ranked;
  LabeledPairSet labels;
  for (TermId t = 1; t <= 6; ++t) {
    ranked.push_back({{0, t}, 10.0 - t});
    labels.add({0, t}, true);
  }
  auto six = reciprocal_rank_metrics(ranked, labels);
  ok = ok && std::abs(six.ma_marr - 0.40833) <= 1e-5;

  // Random fixtures: LRR >= ARR and agreement with the oracle.
  Rng rng(3);
  std::size_t violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    RankedPairList r;
    LabeledPairSet l;
    const std::size_t n_groups = 1 + uniform_index(rng, 8);
    for (TermId g = 0; g < n_groups; ++g) {
      const std::size_t n = 1 + uniform_index(rng, 10);
      for (TermId j = 0; j < n; ++j) {
        l.add({g, 1000 + j}, uniform_unit(rng) < 0.35);
        r.push_back({{g, 1000 + j}, uniform_unit(rng)});
      }
    }
    r = order_by_score(r, static_cast<std::uint64_t>(trial));
    std::vector<std::pair<std::uint32_t, bool>> order;
    for (const auto& x : r) order.emplace_back(x.pair.first, *l.find(x.pair));
    log::ScopedSink quiet([](const std::string&) {});
    auto m = reciprocal_rank_metrics(r, l);
    auto o = oracle::brute_force_rr(order);
    if (m.ma_mlrr < m.ma_marr || m.mi_mlrr < m.mi_marr) ++violations;
    worst = std::max({worst, std::abs(m.ma_marr - o.ma_arr), std::abs(m.mi_marr - o.mi_arr),
                      std::abs(m.ma_mlrr - o.ma_lrr), std::abs(m.mi_mlrr - o.mi_lrr)});
  }
  ok = ok && violations == 0 && worst <= 1e-12;
  return {ok, fmt("MaMARR %.5g MiMARR %.5g, six-term ARR %.5f, LRR<ARR violations %zu/1000, oracle diff %.2g",
                  two.ma_marr, two.mi_marr, six.ma_marr, violations, worst)};
}

// 4. p_anc = 0: Simplest never links parent and child; GroupBy(author) does.
Outcome granularity_repair() {
  SynthConfig cfg;  // depth 3, branching 3: 40 concepts
  cfg.documents = 2000;
  cfg.p_anc = 0.0;
  cfg.seed = 4;
  auto data = generate_synthetic_hin(cfg);
  auto simplest = build_simplest(data.graph, data.vocab, kSynthTargetType);
  auto grouped = build_group_by(data.graph, data.vocab, kSynthTargetType, "author");
  double simplest_max = 0.0, grouped_sum = 0.0;
  std::size_t leaf_edges = 0;
  const auto edges = data.planted_edges();
  for (const auto& [parent, child] : edges) {
    double s = dih_measures(simplest, parent, child).m1;
    simplest_max = std::max(simplest_max, s);
    grouped_sum += dih_measures(grouped, parent, child).m1;
    leaf_edges += data.level[child] == cfg.depth ? 1 : 0;
  }
  double grouped_mean = grouped_sum / static_cast<double>(edges.size());
  return {data.vocab.size() == 40 && simplest_max == 0.0 && grouped_mean >= 0.8,
          fmt("%zu terms, %zu planted edges (%zu leaf), Simplest max M1 %.3g, GroupBy(author) mean M1 %.3f",
              data.vocab.size(), edges.size(), leaf_edges, simplest_max, grouped_mean)};
}

// 5. Multi-context model vs Simplest-only vs Hearst 1/0 on the synthetic benchmark.
Outcome multi_granularity_benefit() {
  const int seeds = 10;
  double full100 = 0, simple100 = 0, hearst100 = 0, full1000 = 0, simple1000 = 0, hearst1000 = 0;
  log::ScopedSink quiet([](const std::string&) {});
  for (int i = 0; i < seeds; ++i) {
    const auto seed = static_cast<std::uint64_t>(i);
    SynthConfig sc;
    sc.depth = 3;
    sc.branching = 4;
    sc.p_anc = 0.3;
    sc.documents = 130;
    sc.docs_per_author = 4;
    sc.hearst_fraction = 0.2;
    sc.seed = 1000 + seed;
    auto data = generate_synthetic_hin(sc);
    auto s = extract_seed_pairs(data.corpus, data.vocab, PatternSet::all());

    EmbeddingConfig ec;
    ec.dim = 32;
    ec.walks_per_node = 10;
    ec.walk_length = 40;
    auto emb = train_embedding(data.graph, ec, seed);
    auto simplest = build_simplest(data.graph, data.vocab, kSynthTargetType);
    std::vector<ContextIndex> all{simplest,
                                  build_group_by(data.graph, data.vocab, kSynthTargetType, "author"),
                                  build_group_by(data.graph, data.vocab, kSynthTargetType, "venue"),
                                  build_group_by(data.graph, data.vocab, kSynthTargetType, "year"),
                                  build_cluster(simplest, emb, 10, seed),
                                  build_cluster(simplest, emb, 40, seed)};
    std::vector<ContextIndex> one{simplest};

    auto cands = candidate_pairs(CandidateMode::kLabels, data.vocab, &data.labels, {});
    auto pairs = feature_pairs(s, cands, CorruptSlot::kHyponym);
    auto pool = negative_pool(s, cands);
    TrainConfig tc;
    tc.seed = seed;
    tc.epochs = 200;
    tc.node_hidden = 64;
    std::vector<std::size_t> ks{100, 1000};
    auto run = [&](const std::vector<ContextIndex>& ctxs) {
      auto f = compute_pairwise_features(pairs, ctxs, kAllMeasures);
      ModelInputs in(data.vocab, emb, f);
      auto trained = train(s, in, tc, pool);
      return evaluate(rank_pairs(trained.params, cands, in, seed), data.labels, ks, seed);
    };
    auto rf = run(all);
    auto rs = run(one);
    RankedPairList h;
    for (const auto& p : cands) h.push_back({p, s.contains(p.first, p.second) ? 1.0 : 0.0});
    auto rh = evaluate(h, data.labels, ks, seed);
    full100 += rf.precision[0].second;
    simple100 += rs.precision[0].second;
    hearst100 += rh.precision[0].second;
    full1000 += rf.precision[1].second;
    simple1000 += rs.precision[1].second;
    hearst1000 += rh.precision[1].second;
  }
  full100 /= seeds, simple100 /= seeds, hearst100 /= seeds;
  full1000 /= seeds, simple1000 /= seeds, hearst1000 /= seeds;
  bool ok = full100 - simple100 >= 0.10 && full1000 > hearst1000 && simple1000 > hearst1000;
  return {ok, fmt("mean P@100 full %.3f vs Simplest-only %.3f vs Hearst %.3f; P@1000 %.3f / %.3f / %.3f",
                  full100, simple100, hearst100, full1000, simple1000, hearst1000)};
}

// 6. Hearst extraction on a fixed 30-sentence fixture.
Outcome hearst_exactness() {
  const std::vector<std::string> surfaces = {
      "machine learning", "learning", "algorithm", "classifier", "decision tree", "svm", "neural network",
      "data mining", "clustering", "database", "graph", "social network", "animal", "cat", "dog", "fruit",
      "apple", "pear", "language", "python", "java", "method", "regression", "country", "france", "spain"};
  std::string nodes = "d1\tdoc\n";
  for (std::size_t i = 0; i < surfaces.size(); ++i) nodes += "t" + std::to_string(100 + i) + "\tterm\t" + surfaces[i] + "\n";
  auto graph = parse_graph(nodes, "", R"({"node_types": ["term", "doc"], "edge_types": []})");
  auto vocab = target_vocabulary(graph, "term");

  const std::vector<std::string> sentences = {
      "classifiers such as decision trees and svm .",
      "algorithms such as clustering , regression and neural networks .",
      "such languages as python and java .",
      "python , java or other languages .",
      "cats and other animals .",
      "methods including regression .",
      "fruits , especially apples and pears .",
      "countries such as france , spain and atlantis .",
      "animals such as unicorns .",                      // hyponym outside the vocabulary
      "unicorns such as cats .",                         // hypernym outside the vocabulary
      "such as cats .",                                  // no hypernym
      "animals such as .",                               // empty list
      "dogs , cats .",                                   // no pattern
      "machine such as dogs .",                          // prefix of a multi-word term only
      "machine learning methods such as clustering .",   // longest suffix is "methods"
      "data mining including clustering and graph mining .",  // "graph mining" is not a term
      "animals such as the cats .",                      // determiner breaks the slot
      "dogs or other animals .",
      "apples , pears and other fruits .",
      "such animals as cats , dogs .",
      "algorithms such as algorithms .",                 // self-pair dropped
      "social networks including graphs .",
      "databases , especially graph databases .",        // "graph database" is not a term
      "fruits such as apples ; animals including dogs .",
      "Classifiers Such As SVM .",
      "animals like cats .",                             // not a pattern
      "countries such as spain .",
      "neural networks and other algorithms .",
      "languages including java ( a language ) .",
      "regression or other methods .",
  };
  Corpus corpus;
  Document doc;
  doc.owner = "d1";
  for (const auto& s : sentences) doc.sentences.push_back(tokenize(s));
  corpus.documents.push_back(doc);
  auto seeds = extract_seed_pairs(corpus, vocab, PatternSet::all());

  const std::map<std::pair<std::string, std::string>, std::uint64_t> expected = {
      {{"classifier", "decision tree"}, 1}, {{"classifier", "svm"}, 2},
      {{"algorithm", "clustering"}, 1},     {{"algorithm", "regression"}, 1},
      {{"algorithm", "neural network"}, 2}, {{"language", "python"}, 2},
      {{"language", "java"}, 3},            {{"animal", "cat"}, 2},
      {{"animal", "dog"}, 3},               {{"method", "regression"}, 2},
      {{"method", "clustering"}, 1},        {{"fruit", "apple"}, 3},
      {{"fruit", "pear"}, 2},               {{"country", "france"}, 1},
      {{"country", "spain"}, 2},            {{"data mining", "clustering"}, 1},
      {{"social network", "graph"}, 1},
  };
  std::map<std::pair<std::string, std::string>, std::uint64_t> got;
  for (const auto& p : seeds.pairs()) got[{vocab[p.hypernym].surface, vocab[p.hyponym].surface}] = p.count;
  std::string diff;
  for (const auto& [k, v] : expected) {
    auto it = got.find(k);
    if (it == got.end() || it->second != v) diff += " missing/miscounted " + k.first + "->" + k.second;
  }
  for (const auto& [k, v] : got) {
    if (!expected.count(k)) diff += " unexpected " + k.first + "->" + k.second;
  }
  return {diff.empty() && sentences.size() == 30,
          fmt("%zu sentences, %zu expected pairs, %zu extracted", sentences.size(), expected.size(), got.size()) + diff};
}

// 7. Taxonomy acyclicity, defaults and reproducible removal logs.
Outcome taxonomy_validity() {
  Rng rng(7);
  std::size_t failures = 0, total_removed = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t terms = 5 + uniform_index(rng, 30);
    RankedPairList ranked;
    std::set<TermPair> used;
    auto add = [&](TermId a, TermId b) {
      if (a != b && used.insert({a, b}).second) ranked.push_back({{a, b}, uniform_unit(rng)});
    };
    // Random edges plus a few planted cycles of length 2..5.
    for (std::size_t e = 0; e < terms * 2; ++e) {
      add(static_cast<TermId>(uniform_index(rng, terms)), static_cast<TermId>(uniform_index(rng, terms)));
    }
    const std::size_t cycles = 1 + uniform_index(rng, 4);
    for (std::size_t c = 0; c < cycles; ++c) {
      const std::size_t len = 2 + uniform_index(rng, 4);
      std::vector<TermId> nodes;
      for (std::size_t i = 0; i < len; ++i) nodes.push_back(static_cast<TermId>(uniform_index(rng, terms)));
      for (std::size_t i = 0; i < len; ++i) add(nodes[i], nodes[(i + 1) % len]);
    }
    ranked = order_by_score(ranked, static_cast<std::uint64_t>(trial));
    TaxonomyConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    auto dag = build_taxonomy(ranked, cfg);
    auto again = build_taxonomy(ranked, cfg);
    std::vector<TermId> nodes;
    for (TermId t = 0; t < terms; ++t) nodes.push_back(t);
    bool ok = is_acyclic(nodes, dag.edges) && dag.removed_edges == again.removed_edges && dag.edges == again.edges &&
              dag.edges.size() + dag.removed_edges.size() == dag.pruned_edges;
    failures += ok ? 0 : 1;
    total_removed += dag.removed_edges.size();
  }

  // Defaults: 600 terms and 9000 edges are pruned to 500 terms and 5000 edges.
  TaxonomyConfig defaults;
  RankedPairList big;
  std::set<TermPair> used;
  while (big.size() < 9000) {
    TermId a = static_cast<TermId>(uniform_index(rng, 600)), b = static_cast<TermId>(uniform_index(rng, 600));
    if (a != b && used.insert({a, b}).second) big.push_back({{a, b}, uniform_unit(rng)});
  }
  log::ScopedSink quiet([](const std::string&) {});
  auto dag = build_taxonomy(order_by_score(big, 1), defaults);
  bool defaults_ok = defaults.top_terms == 500 && defaults.top_edges == 5000 && dag.nodes.size() <= 500 &&
                     dag.pruned_edges == 5000;
  return {failures == 0 && defaults_ok,
          fmt("200 lists, %zu failures, %zu edges removed in total; default pruning kept %zu terms, %zu edges",
              failures, total_removed, dag.nodes.size(), dag.pruned_edges)};
}

// 8. Two `run` invocations of the CLI with the same config.
Outcome end_to_end_determinism() {
  const fs::path root = fs::temp_directory_path() / "hypermine_acceptance_e2e";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = HYPERMINE_CLI_PATH;
  auto sh = [&](const std::string& args) {
    std::string cmd = "\"" + cli + "\" " + args + " > \"" + (root / "log.txt").string() + "\" 2>&1";
    return std::system(cmd.c_str());
  };
  int rc = sh("--seed 5 synth --out \"" + (root / "data").string() + "\" --depth 2 --branching 4 --documents 200 --p-anc 0.3");
  write_file(root / "config.json", R"({
  "graph": "data", "corpus": "data/corpus.jsonl", "labels": "data/labels.tsv", "output": "out",
  "contexts": ["simplest", "groupby:author", "groupby:venue", "groupby:year", "cluster:5", "cluster:15"],
  "embedding": {"dim": 16, "walks_per_node": 5, "walk_length": 20},
  "train": {"epochs": 20, "node_hidden": 16},
  "evaluation": {"ks": [10, 100]},
  "candidates": "all",
  "seed": 11
})");
  const std::vector<std::string> files = {"ranked.tsv", "metrics.json", "taxonomy.dot", "taxonomy.json",
                                          "removed_edges.tsv"};
  std::map<std::string, std::string> first;
  rc = rc ? rc : sh("--config \"" + (root / "config.json").string() + "\" run");
  for (const auto& f : files) first[f] = fs::exists(root / "out" / f) ? sha256_file(root / "out" / f) : "";
  fs::remove_all(root / "out");
  rc = rc ? rc : sh("--config \"" + (root / "config.json").string() + "\" run");
  std::size_t identical = 0;
  for (const auto& f : files) {
    if (!first[f].empty() && fs::exists(root / "out" / f) && sha256_file(root / "out" / f) == first[f]) ++identical;
  }
  std::string log = fs::exists(root / "log.txt") ? read_file(root / "log.txt") : "";
  fs::remove_all(root);
  return {rc == 0 && identical == files.size(),
          fmt("exit status %d, %zu/%zu output files byte-identical across runs", rc, identical, files.size()) +
              (rc ? " :: " + log : "")};
}

// 9. Six contexts and four measures give 24 columns in layout order.
Outcome feature_grid_shape() {
  SynthConfig sc;
  sc.depth = 2;
  sc.documents = 200;
  sc.p_anc = 0.3;
  sc.seed = 9;
  auto data = generate_synthetic_hin(sc);
  EmbeddingConfig ec;
  ec.dim = 8;
  ec.walks_per_node = 3;
  ec.walk_length = 10;
  auto emb = train_embedding(data.graph, ec, 1);
  const std::vector<std::string> specs = {"simplest",      "groupby:author", "groupby:venue",
                                          "groupby:year",  "cluster:4",      "cluster:8"};
  auto simplest = build_simplest(data.graph, data.vocab, kSynthTargetType);
  std::vector<ContextIndex> ctxs;
  for (const auto& s : specs) {
    ctxs.push_back(build_context(ContextSpec::parse(s), data.graph, data.vocab, kSynthTargetType, &simplest, &emb, 3));
  }
  std::vector<TermPair> pairs;
  for (const auto& lp : data.labels.pairs()) pairs.push_back(lp.pair);
  auto f = compute_pairwise_features(pairs, ctxs, kAllMeasures);
  bool ok = f.dim() == 24;
  auto names = f.column_names();
  for (std::size_t c = 0; c < specs.size() && ok; ++c) {
    for (std::size_t m = 0; m < 4; ++m) ok = ok && names[c * 4 + m] == specs[c] + "/M" + std::to_string(m + 1);
  }
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto row = f.row(i);
    if (row.size() != 24) ++mismatched;
    for (std::size_t c = 0; c < ctxs.size(); ++c) {
      if (!ctxs[c].covers(f.pairs()[i].first) || !ctxs[c].covers(f.pairs()[i].second)) continue;
      auto s = dih_measures(ctxs[c], f.pairs()[i].first, f.pairs()[i].second);
      if (row[c * 4] != s.m1 || row[c * 4 + 1] != s.m2 || row[c * 4 + 2] != s.m3 || row[c * 4 + 3] != s.m4) {
        ++mismatched;
      }
    }
  }
  return {ok && mismatched == 0,
          fmt("N=%zu, first column %s, last column %s, %zu pairs, %zu misplaced blocks", f.dim(), names.front().c_str(),
              names.back().c_str(), f.size(), mismatched)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"DIH oracle equivalence", dih_oracle},
      {"Gradient fidelity", gradient_fidelity},
      {"Metric correctness", metric_correctness},
      {"Granularity repair", granularity_repair},
      {"Multi-granularity benefit", multi_granularity_benefit},
      {"Hearst extraction exactness", hearst_exactness},
      {"Taxonomy validity", taxonomy_validity},
      {"End-to-end determinism", end_to_end_determinism},
      {"Feature-grid shape", feature_grid_shape},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %zu. %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += out.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
