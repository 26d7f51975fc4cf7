#include <gtest/gtest.h>

#include <cmath>

#include "hypermine/model.hpp"
#include "test_oracles.hpp"

using namespace hypermine;

namespace {

ModelShape shape(std::size_t d, std::size_t h, std::size_t n) { return ModelShape{d, h, n}; }

std::vector<TrainingExample> random_examples(Rng& rng, std::size_t terms, std::size_t count, std::size_t negs) {
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    TermId a = static_cast<TermId>(uniform_index(rng, terms));
    TermId b = static_cast<TermId>((a + 1 + uniform_index(rng, terms - 1)) % terms);
    TrainingExample ex{{a, b}, {}};
    for (std::size_t j = 0; j < negs; ++j) {
      TermId c = static_cast<TermId>((a + 1 + uniform_index(rng, terms - 1)) % terms);
      ex.negatives.emplace_back(a, c);
    }
    out.push_back(ex);
  }
  return out;
}

}  // namespace

TEST(Score, ZeroSigmaAndHGiveZero) {
  Rng rng(1);
  auto p = ModelParams::initialize(shape(3, 5, 4), 7);
  for (auto& v : p.sigma()) v = 0.0;
  for (auto& v : p.h()) v = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> f1(3), f2(3), g(4);
    for (auto* vec : {&f1, &f2, &g}) {
      for (auto& v : *vec) v = uniform_unit(rng) * 10 - 5;
    }
    EXPECT_EQ(score(p, f1, f2, g), 0.0);
  }
}

TEST(Score, IdentityPhiClosedForm) {
  ModelParams p(shape(3, 3, 2));
  for (std::size_t i = 0; i < 3; ++i) p.node_weight()[i * 3 + i] = 1.0;
  p.sigma()[0] = 1.0;
  p.sigma()[1] = 2.0;
  p.sigma()[2] = 3.0;
  std::vector<double> f1{0.5, -1.0, 2.0}, f2{1.5, 0.25, -0.75}, g{0.3, 0.4};
  double expected = 1.0 * std::tanh(0.5) * std::tanh(1.5) + 2.0 * std::tanh(-1.0) * std::tanh(0.25) +
                    3.0 * std::tanh(2.0) * std::tanh(-0.75);
  EXPECT_NEAR(score(p, f1, f2, g), expected, 1e-15);
}

TEST(Score, SymmetryComesOnlyFromTheNodeTerm) {
  Rng rng(2);
  auto p = ModelParams::initialize(shape(4, 6, 8), 3);
  std::vector<double> f1(4), f2(4), g12(8), g21(8);
  for (auto* vec : {&f1, &f2, &g12, &g21}) {
    for (auto& v : *vec) v = uniform_unit(rng) * 2 - 1;
  }
  EXPECT_DOUBLE_EQ(score(p, f1, f2, g12), score(p, f2, f1, g12));
  for (auto& v : p.h()) v = uniform_unit(rng) + 0.5;
  EXPECT_NE(score(p, f1, f2, g12), score(p, f2, f1, g21));
  EXPECT_NEAR(score(p, f1, f2, g12), oracle::score(p, f1, f2, g12), 1e-12);
}

TEST(Score, ShapeMismatchThrows) {
  auto p = ModelParams::initialize(shape(3, 2, 4), 0);
  std::vector<double> f(3), bad(2), g(4);
  EXPECT_THROW(score(p, f, bad, g), ValidationError);
  EXPECT_THROW(score(p, f, f, bad), ValidationError);
}

TEST(Score, TrainModeDropoutIsSeededAndInferIsNot) {
  auto p = ModelParams::initialize(shape(4, 16, 6), 1);
  for (auto& v : p.h()) v = 1.0;
  std::vector<double> f1{1, 2, 3, 4}, f2{-1, 0.5, 0, 2}, g{1, 0, 1, 0, 1, 0};
  DropoutRates rates{0.5, 0.5};
  Rng a(9), b(9);
  double sa = score(p, f1, f2, g, Mode::kTrain, rates, a);
  double sb = score(p, f1, f2, g, Mode::kTrain, rates, b);
  EXPECT_EQ(sa, sb);
  Rng c(9);
  EXPECT_EQ(score(p, f1, f2, g, Mode::kInfer, rates, c), score(p, f1, f2, g));
}

TEST(Loss, HingeExamples) {
  EXPECT_EQ(hinge(5.0, 1.0), 0.0);
  EXPECT_NEAR(hinge(0.2, 0.5), 1.3, 1e-15);
  // One positive, ten negatives, all scores equal: Sigma = 0, h = 0.
  Rng rng(3);
  auto fx = oracle::random_model_fixture(rng, 12, 2, 4);
  ModelInputs inputs(fx.node_dim, fx.node_rows, fx.pairwise);
  ModelParams p(shape(2, 3, 4));
  TrainingExample ex{{0, 1}, {}};
  for (TermId t = 2; t < 12; ++t) ex.negatives.emplace_back(0, t);
  std::vector<TrainingExample> examples{ex};
  EXPECT_DOUBLE_EQ(contrastive_loss(p, examples, inputs), 10.0);
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto fx = oracle::random_model_fixture(rng, 6, 4, 8);
    ModelInputs inputs(fx.node_dim, fx.node_rows, fx.pairwise);
    auto p = ModelParams::initialize(shape(4, 5, 8), static_cast<std::uint64_t>(trial));
    oracle::randomize(p, rng, 0.8);
    auto examples = random_examples(rng, 6, 4, 3);
    auto res = gradient_check(p, examples, inputs, 1e-5);
    EXPECT_LT(res.max_relative_error, 1e-4) << "worst index " << res.worst_index;
    EXPECT_EQ(res.checked, p.values().size());
  }
}

TEST(Gradient, FlatRegionIsExactlyZero) {
  Rng rng(5);
  auto fx = oracle::random_model_fixture(rng, 5, 3, 4);
  ModelInputs inputs(fx.node_dim, fx.node_rows, fx.pairwise);
  auto p = ModelParams::initialize(shape(3, 4, 4), 2);
  // Positives get g = +1 everywhere, negatives g = -1, with a large h on a
  // psi that is monotone in g: every hinge is satisfied.
  PairwiseFeatures pw({"c0", "c1", "c2", "c3"}, {Measure::kWeedsPrec});
  std::vector<double> plus(4, 1.0), minus(4, -1.0);
  pw.add({0, 1}, plus);
  pw.add({0, 2}, minus);
  pw.add({0, 3}, minus);
  ModelInputs in2(fx.node_dim, fx.node_rows, pw);
  for (auto& v : p.sigma()) v = 0.0;
  for (auto& v : p.pair_w1()) v = 0.0;
  for (auto& v : p.pair_b1()) v = 0.0;
  for (auto& v : p.pair_w2()) v = 0.0;
  for (auto& v : p.pair_b2()) v = 0.0;
  for (std::size_t i = 0; i < 4; ++i) p.pair_w1()[i * 4 + i] = 3.0;
  for (std::size_t i = 0; i < 2; ++i) p.pair_w2()[i * 4 + i] = 3.0;
  for (auto& v : p.h()) v = 5.0;
  std::vector<TrainingExample> examples{{{0, 1}, {{0, 2}, {0, 3}}}};
  auto lg = loss_and_gradient(p, examples, in2);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.active_hinges, 0u);
  for (double g : lg.gradient.values()) EXPECT_EQ(g, 0.0);
  (void)inputs;
}

TEST(Gradient, HGradientClosedForm) {
  Rng rng(6);
  auto fx = oracle::random_model_fixture(rng, 4, 3, 6);
  ModelInputs inputs(fx.node_dim, fx.node_rows, fx.pairwise);
  auto p = ModelParams::initialize(shape(3, 4, 6), 8);
  for (auto& v : p.h()) v = 0.0;
  for (auto& v : p.sigma()) v = 0.0;  // all scores 0: the single hinge is active
  std::vector<TrainingExample> examples{{{0, 1}, {{0, 2}}}};
  auto lg = loss_and_gradient(p, examples, inputs);
  ASSERT_EQ(lg.active_hinges, 1u);
  auto psi_pos = oracle::psi(p, inputs.pair({0, 1}));
  auto psi_neg = oracle::psi(p, inputs.pair({0, 2}));
  for (std::size_t i = 0; i < psi_pos.size(); ++i) {
    EXPECT_NEAR(lg.gradient.h()[i], -psi_pos[i] + psi_neg[i], 1e-14);
  }
}

namespace {

// Separable toy: node features zero, positives g = e1, everything else -e1.
struct Toy {
  SeedPairSet seeds;
  PairwiseFeatures pairwise{{"c0", "c1", "c2", "c3"}, {Measure::kWeedsPrec}};
  std::vector<double> node_rows;
};

Toy separable_toy() {
  Toy toy;
  const TermId terms = 8;
  for (TermId a = 0; a < 3; ++a) toy.seeds.add(a, a + 3);
  toy.seeds.add(0, 7);
  for (TermId a = 0; a < terms; ++a) {
    for (TermId b = 0; b < terms; ++b) {
      if (a == b) continue;
      double sign = toy.seeds.contains(a, b) ? 1.0 : -1.0;
      std::vector<double> g{sign, 0.0, 0.0, 0.0};
      toy.pairwise.add({a, b}, g);
    }
  }
  toy.node_rows.assign(terms * 2, 0.0);
  return toy;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.1;
  cfg.node_hidden = 4;
  cfg.node_dropout = 0.0;
  cfg.pair_dropout = 0.0;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST(Train, SeparableToyConverges) {
  auto toy = separable_toy();
  ModelInputs inputs(2, toy.node_rows, toy.pairwise);
  auto result = train(toy.seeds, inputs, toy_config());
  ASSERT_EQ(result.loss_trace.size(), 200u);
  EXPECT_LT(result.loss_trace.back(), 0.01);
  // Infer-mode loss over every admissible negative.
  NegativeSampler sampler(toy.seeds, {}, CorruptSlot::kHyponym);
  std::vector<TrainingExample> all;
  for (const auto& sp : toy.seeds.pairs()) {
    TrainingExample ex{{sp.hypernym, sp.hyponym}, {}};
    for (const auto& n : sampler.admissible_pairs()) {
      if (n.first == sp.hypernym) ex.negatives.push_back(n);
    }
    all.push_back(ex);
  }
  EXPECT_LT(contrastive_loss(result.params, all, inputs), 0.01);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  auto toy = separable_toy();
  ModelInputs inputs(2, toy.node_rows, toy.pairwise);
  auto cfg = toy_config();
  cfg.epochs = 0;
  auto result = train(toy.seeds, inputs, cfg);
  EXPECT_TRUE(result.params == ModelParams::initialize(ModelShape{2, 4, 4}, cfg.seed));
  EXPECT_TRUE(result.loss_trace.empty());
}

TEST(Train, Deterministic) {
  auto toy = separable_toy();
  ModelInputs inputs(2, toy.node_rows, toy.pairwise);
  auto cfg = toy_config();
  cfg.epochs = 20;
  cfg.node_dropout = 0.5;
  cfg.pair_dropout = 0.1;
  auto a = train(toy.seeds, inputs, cfg);
  auto b = train(toy.seeds, inputs, cfg);
  EXPECT_EQ(serialize_checkpoint(a.params, "x", cfg), serialize_checkpoint(b.params, "x", cfg));
  cfg.seed = 12;
  auto c = train(toy.seeds, inputs, cfg);
  EXPECT_FALSE(a.params == c.params);
}

TEST(Train, CoverageGapListsMissing) {
  SeedPairSet seeds;
  seeds.add(0, 1);
  seeds.add(2, 1);
  PairwiseFeatures pw({"c"}, {Measure::kWeedsPrec, Measure::kInvCL});
  std::vector<double> row{0.0, 0.0};
  pw.add({0, 1}, row);
  ModelInputs inputs(1, std::vector<double>(3, 0.0), pw);
  try {
    train(seeds, inputs, toy_config());
    FAIL();
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("feature coverage gap"), std::string::npos);
    EXPECT_NE(msg.find("(2,1)"), std::string::npos) << msg;
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  cfg.negative_ratio = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.node_dropout = 1.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  EXPECT_EQ(cfg.negative_ratio, 10u);
  EXPECT_EQ(cfg.node_hidden, 256u);
  EXPECT_DOUBLE_EQ(cfg.node_dropout, 0.7);
  EXPECT_DOUBLE_EQ(cfg.pair_dropout, 0.1);
}

TEST(NegativeSampler, NeverEmitsSeedPairs) {
  Rng rng(7);
  SeedPairSet seeds;
  for (int i = 0; i < 40; ++i) {
    TermId a = static_cast<TermId>(uniform_index(rng, 15));
    TermId b = static_cast<TermId>(uniform_index(rng, 15));
    if (a != b) seeds.add(a, b);
  }
  std::vector<TermId> pool;
  for (TermId t = 0; t < 20; ++t) pool.push_back(t);
  for (auto slot : {CorruptSlot::kHyponym, CorruptSlot::kHypernym}) {
    NegativeSampler sampler(seeds, pool, slot);
    for (const auto& sp : seeds.pairs()) {
      for (const auto& n : sampler.sample(sp, 50, rng)) {
        EXPECT_FALSE(seeds.contains(n.first, n.second));
        EXPECT_NE(n.first, n.second);
        if (slot == CorruptSlot::kHyponym) EXPECT_EQ(n.first, sp.hypernym);
        else EXPECT_EQ(n.second, sp.hyponym);
      }
    }
  }
}

TEST(Ranking, OrderAndSeededTies) {
  std::vector<RankedPair> scored{{{0, 1}, 0.5}, {{0, 2}, 2.0}, {{1, 2}, 0.5}, {{2, 0}, 0.5}, {{2, 1}, -1.0}};
  auto a = order_by_score(scored, 3);
  auto b = order_by_score(scored, 3);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.front().pair, (TermPair{0, 2}));
  EXPECT_EQ(a.back().pair, (TermPair{2, 1}));
  // Different seeds eventually produce different tie orders.
  bool differs = false;
  for (std::uint64_t s = 4; s < 40 && !differs; ++s) differs = !(order_by_score(scored, s) == a);
  EXPECT_TRUE(differs);
}

TEST(Ranking, RankPairsMatchesScoreAndThreads) {
  Rng rng(8);
  auto fx = oracle::random_model_fixture(rng, 7, 3, 4);
  ModelInputs inputs(fx.node_dim, fx.node_rows, fx.pairwise);
  auto p = ModelParams::initialize(shape(3, 5, 4), 1);
  oracle::randomize(p, rng, 1.0);
  const auto& cands = fx.pairwise.pairs();
  auto one = rank_pairs(p, cands, inputs, 5, 1);
  auto many = rank_pairs(p, cands, inputs, 5, 3);
  EXPECT_EQ(one, many);
  for (std::size_t i = 0; i < one.size(); ++i) {
    const auto& [a, b] = one[i].pair;
    EXPECT_NEAR(one[i].score, oracle::score(p, inputs.node(a), inputs.node(b), inputs.pair(one[i].pair)), 1e-12);
    if (i > 0) EXPECT_GE(one[i - 1].score, one[i].score);
  }
}

TEST(Checkpoint, RoundTrip) {
  auto p = ModelParams::initialize(shape(3, 4, 6), 77);
  TrainConfig cfg;
  auto text = serialize_checkpoint(p, "abcd", cfg);
  auto back = parse_checkpoint(text);
  EXPECT_TRUE(back.params == p);
  EXPECT_EQ(back.layout_fingerprint, "abcd");
  EXPECT_THROW(parse_checkpoint("{}"), Error);
  EXPECT_THROW(parse_checkpoint("not json"), Error);
}

TEST(ModelInputs, CoverageGapFromVocabulary) {
  std::vector<Term> terms{{0, "a", "k0", 0}, {1, "b", "k1", 1}};
  Vocabulary vocab(terms);
  NodeEmbeddings emb(2);
  std::vector<double> v{1.0, 2.0};
  emb.add("k0", v);
  PairwiseFeatures pw({"c"}, {Measure::kWeedsPrec, Measure::kInvCL});
  try {
    ModelInputs inputs(vocab, emb, pw);
    FAIL();
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("feature coverage gap: 1 terms"), std::string::npos) << msg;
  }
}
