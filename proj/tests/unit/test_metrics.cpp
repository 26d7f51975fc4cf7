#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hypermine/metrics.hpp"
#include "test_oracles.hpp"

using namespace hypermine;

namespace {

// Ranked list where the i-th pair gets a strictly decreasing score.
struct Fixture {
  RankedPairList ranked;
  LabeledPairSet labels;

  void push(TermId hyper, TermId hypo, bool positive) {
    double score = 1000.0 - static_cast<double>(ranked.size());
    ranked.push_back({{hyper, hypo}, score});
    labels.add({hyper, hypo}, positive);
  }
};

}  // namespace

TEST(PrecisionAtK, Examples) {
  Fixture f;
  f.push(0, 1, true);
  f.push(0, 2, false);
  f.push(0, 3, true);
  f.push(0, 4, true);
  EXPECT_DOUBLE_EQ(precision_at_k(f.ranked, f.labels, 4), 0.75);
  EXPECT_DOUBLE_EQ(precision_at_k(f.ranked, f.labels, 1), 1.0);

  Fixture neg;
  neg.push(1, 2, false);
  neg.push(1, 3, false);
  neg.push(1, 4, true);
  EXPECT_DOUBLE_EQ(precision_at_k(neg.ranked, neg.labels, 2), 0.0);
}

TEST(PrecisionAtK, Errors) {
  Fixture f;
  f.push(0, 1, true);
  EXPECT_THROW(precision_at_k(f.ranked, f.labels, 0), ValidationError);
  EXPECT_THROW(precision_at_k(f.ranked, f.labels, 2), ValidationError);
  f.ranked.insert(f.ranked.begin(), RankedPair{{5, 6}, 2000.0});
  EXPECT_THROW(precision_at_k(f.ranked, f.labels, 1), ValidationError);
}

TEST(ReciprocalRank, SingleGroup) {
  Fixture f;
  f.push(0, 1, true);
  f.push(0, 2, false);
  f.push(0, 3, true);
  auto m = reciprocal_rank_metrics(f.ranked, f.labels);
  EXPECT_NEAR(m.ma_marr, 0.66667, 1e-5);
  EXPECT_NEAR(m.mi_marr, 0.66667, 1e-5);
  EXPECT_DOUBLE_EQ(m.ma_mlrr, 1.0);
  EXPECT_DOUBLE_EQ(m.mi_mlrr, 1.0);
  EXPECT_EQ(m.groups, 1u);
  EXPECT_EQ(m.positives, 2u);
}

TEST(ReciprocalRank, SixPositivesBound) {
  Fixture f;
  for (TermId t = 1; t <= 6; ++t) f.push(0, t, true);
  auto m = reciprocal_rank_metrics(f.ranked, f.labels);
  EXPECT_NEAR(m.ma_marr, 0.40833, 1e-5);
}

TEST(ReciprocalRank, TwoGroupsMacroVsMicro) {
  std::vector<GroupRank> groups{{0.5, 0.5, 1}, {1.0, 1.0, 3}};
  auto m = aggregate_group_ranks(groups);
  EXPECT_DOUBLE_EQ(m.ma_marr, 0.75);
  EXPECT_DOUBLE_EQ(m.mi_marr, 0.875);
  EXPECT_EQ(m.groups, 2u);
  EXPECT_EQ(m.positives, 4u);
}

TEST(ReciprocalRank, InterleavedGroupsMatchOracle) {
  Fixture f;
  f.push(0, 10, false);
  f.push(1, 11, true);
  f.push(0, 12, true);
  f.push(1, 13, true);
  f.push(2, 14, false);  // group without positives is skipped
  f.push(1, 15, false);
  f.push(1, 16, true);
  auto m = reciprocal_rank_metrics(f.ranked, f.labels);
  // Group 0: positive at within-group rank 2. Group 1: ranks 1, 2, 4.
  EXPECT_DOUBLE_EQ(m.ma_marr, (0.5 + (1.0 + 0.5 + 0.25) / 3.0) / 2.0);
  EXPECT_DOUBLE_EQ(m.mi_marr, (0.5 + 1.0 + 0.5 + 0.25) / 4.0);
  EXPECT_DOUBLE_EQ(m.ma_mlrr, 0.75);
  EXPECT_DOUBLE_EQ(m.mi_mlrr, (0.5 + 3.0) / 4.0);
  EXPECT_EQ(m.groups, 2u);
}

TEST(ReciprocalRank, MissingLabeledPairThrows) {
  Fixture f;
  f.push(0, 1, true);
  f.labels.add({0, 2}, false);
  EXPECT_THROW(reciprocal_rank_metrics(f.ranked, f.labels), ValidationError);
}

namespace {

// Random labeled ranking: a handful of groups, random labels and scores.
Fixture random_fixture(Rng& rng, std::vector<std::pair<std::uint32_t, bool>>& order) {
  Fixture f;
  const std::size_t groups = 1 + uniform_index(rng, 6);
  std::vector<RankedPair> pairs;
  for (TermId g = 0; g < groups; ++g) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    for (TermId j = 0; j < n; ++j) {
      bool positive = uniform_unit(rng) < 0.4;
      TermPair p{g, 100 + j};
      f.labels.add(p, positive);
      pairs.push_back({p, uniform_unit(rng)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  f.ranked = pairs;
  order.clear();
  for (const auto& r : f.ranked) order.emplace_back(r.pair.first, *f.labels.find(r.pair));
  return f;
}

}  // namespace

TEST(ReciprocalRank, RandomFixturesMatchOracleAndBounds) {
  Rng rng(99);
  std::vector<std::pair<std::uint32_t, bool>> order;
  for (int trial = 0; trial < 500; ++trial) {
    auto f = random_fixture(rng, order);
    auto m = reciprocal_rank_metrics(f.ranked, f.labels);
    auto o = oracle::brute_force_rr(order);
    EXPECT_NEAR(m.ma_marr, o.ma_arr, 1e-12);
    EXPECT_NEAR(m.mi_marr, o.mi_arr, 1e-12);
    EXPECT_NEAR(m.ma_mlrr, o.ma_lrr, 1e-12);
    EXPECT_NEAR(m.mi_mlrr, o.mi_lrr, 1e-12);
    EXPECT_GE(m.ma_mlrr, m.ma_marr);
    EXPECT_GE(m.mi_mlrr, m.mi_marr);
    for (double v : {m.ma_marr, m.mi_marr, m.ma_mlrr, m.mi_mlrr}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Evaluate, InvariantUnderMonotoneTransform) {
  Rng rng(5);
  std::vector<std::pair<std::uint32_t, bool>> order;
  for (int trial = 0; trial < 50; ++trial) {
    auto f = random_fixture(rng, order);
    RankedPairList squashed = f.ranked;
    for (auto& r : squashed) r.score = std::exp(3.0 * r.score) - 7.0;
    std::vector<std::size_t> ks{1, 3};
    auto a = evaluate(f.ranked, f.labels, ks, 11);
    auto b = evaluate(squashed, f.labels, ks, 11);
    EXPECT_EQ(serialize_report(a), serialize_report(b));
  }
}

TEST(Evaluate, RandomPermutationConcentratesNearPositiveRate) {
  LabeledPairSet labels;
  RankedPairList ranked;
  for (TermId i = 0; i < 2000; ++i) {
    TermPair p{i % 40, 1000 + i};
    labels.add(p, i % 2 == 0);
    ranked.push_back({p, 0.0});
  }
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto order = order_by_score(ranked, seed);
    double p = precision_at_k(order, labels, 100);
    total += p;
  }
  EXPECT_NEAR(total / 1000.0, 0.5, 0.05);
}

TEST(Evaluate, UnscoredPairsGetZeroAndReportIsDeterministic) {
  Fixture f;
  f.push(0, 1, true);
  f.push(0, 2, false);
  f.labels.add({0, 3}, true);  // not in the ranking
  std::vector<std::size_t> ks{2, 3, 10};
  auto r1 = evaluate(f.ranked, f.labels, ks, 7);
  auto r2 = evaluate(f.ranked, f.labels, ks, 7);
  EXPECT_EQ(serialize_report(r1), serialize_report(r2));
  EXPECT_EQ(r1.unscored_pairs, 1u);
  EXPECT_EQ(r1.labeled_pairs, 3u);
  ASSERT_EQ(r1.precision.size(), 2u);  // k = 10 skipped
  EXPECT_DOUBLE_EQ(r1.precision[1].second, 2.0 / 3.0);
}

TEST(Labels, RoundTripAndErrors) {
  std::vector<Term> terms{{0, "data mining", "k0", 0}, {1, "clustering", "k1", 1}, {2, "svm", "k2", 2}};
  Vocabulary vocab(terms);
  auto labels = parse_labels("Data  Mining\tclustering\t1\ndata mining\tsvm\t0\n", vocab);
  EXPECT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels.num_positive(), 1u);
  EXPECT_EQ(labels.find({0, 1}), std::optional<bool>(true));
  auto again = parse_labels(serialize_labels(labels, vocab), vocab);
  EXPECT_EQ(again.pairs(), labels.pairs());
  EXPECT_THROW(parse_labels("data mining\tclustering\t2\n", vocab), Error);
  EXPECT_THROW(parse_labels("data mining\tclustering\n", vocab), Error);
  EXPECT_THROW(parse_labels("data mining\tclustering\t1\ndata mining\tclustering\t0\n", vocab), Error);
  EXPECT_THROW(labels.add({2, 2}, true), ValidationError);
}
