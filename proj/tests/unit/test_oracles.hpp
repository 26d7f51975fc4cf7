#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. They follow the textbook definitions literally and share no code
// with the library beyond its data types.

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hypermine/context.hpp"
#include "hypermine/model.hpp"
#include "hypermine/util.hpp"

namespace oracle {

struct ContextFixture {
  hypermine::ContextIndex ctx;
  std::vector<std::vector<int>> relevance;  // relevance[t][u] in {0, 1}
  std::size_t num_terms = 0;
};

inline ContextFixture random_context(hypermine::Rng& rng, std::size_t max_units, std::size_t max_terms) {
  using namespace hypermine;
  const std::size_t units = 1 + uniform_index(rng, max_units);
  const std::size_t terms = 2 + uniform_index(rng, max_terms - 1);
  const double density = uniform_unit(rng);
  ContextFixture fx;
  fx.num_terms = terms;
  fx.relevance.assign(terms, std::vector<int>(units, 0));
  std::vector<std::vector<UnitId>> postings(terms);
  for (std::size_t t = 0; t < terms; ++t) {
    for (std::size_t u = 0; u < units; ++u) {
      if (uniform_unit(rng) < density) {
        fx.relevance[t][u] = 1;
        postings[t].push_back(static_cast<UnitId>(u));
      }
    }
  }
  std::vector<std::string> names;
  for (std::size_t u = 0; u < units; ++u) names.push_back("u" + std::to_string(u));
  fx.ctx = ContextIndex("random", names, postings);
  return fx;
}

// WeedsPrec / ClarkeDE written as sums over explicit unit enumeration.
inline std::array<double, 4> brute_force_measures(const std::vector<std::vector<int>>& r, std::size_t t1,
                                                  std::size_t t2) {
  const std::size_t units = r[t1].size();
  double num = 0, c1 = 0, c2 = 0, min_sum = 0;
  for (std::size_t c = 0; c < units; ++c) {
    num += r[t2][c] * (r[t1][c] > 0 ? 1 : 0);  // sum over c in C_t1 ∩ C_t2 of r_c(t2)
    c1 += r[t1][c];
    c2 += r[t2][c];
    min_sum += std::min(r[t1][c], r[t2][c]);
  }
  auto div = [](double a, double b) { return b == 0 ? 0.0 : a / b; };
  double weeds = div(num, c2);
  double clarke_fwd = div(min_sum, c2);
  double clarke_bwd = div(min_sum, c1);
  double invcl = std::sqrt(clarke_fwd * (1.0 - clarke_bwd));
  double overlap = div(min_sum, static_cast<double>(units));
  return {weeds, invcl, clarke_fwd - clarke_bwd, overlap};
}

// Reciprocal-rank metrics straight from the definitions: for each group of
// labeled pairs sharing a hypernym, the rank of a positive is its 1-based
// position among that group's pairs in the ranked order.
struct RrMetrics {
  double ma_arr = 0, mi_arr = 0, ma_lrr = 0, mi_lrr = 0;
};

inline RrMetrics brute_force_rr(const std::vector<std::pair<std::uint32_t, bool>>& ranked_groups) {
  std::map<std::uint32_t, std::vector<bool>> groups;  // labels in rank order
  for (const auto& [g, positive] : ranked_groups) groups[g].push_back(positive);
  RrMetrics m;
  double n_groups = 0, n_pos = 0;
  for (const auto& [g, labels] : groups) {
    std::vector<double> rrs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i]) rrs.push_back(1.0 / static_cast<double>(i + 1));
    }
    if (rrs.empty()) continue;
    double sum = 0, mx = 0;
    for (double x : rrs) {
      sum += x;
      mx = std::max(mx, x);
    }
    double arr = sum / static_cast<double>(rrs.size());
    m.ma_arr += arr;
    m.ma_lrr += mx;
    m.mi_arr += arr * static_cast<double>(rrs.size());
    m.mi_lrr += mx * static_cast<double>(rrs.size());
    n_groups += 1;
    n_pos += static_cast<double>(rrs.size());
  }
  if (n_groups > 0) {
    m.ma_arr /= n_groups;
    m.ma_lrr /= n_groups;
    m.mi_arr /= n_pos;
    m.mi_lrr /= n_pos;
  }
  return m;
}

// Pairwise transformer written out with plain loops (no dropout).
inline std::vector<double> psi(const hypermine::ModelParams& p, std::span<const double> g) {
  const std::size_t n = p.shape().pair_dim, m = p.shape().pair_hidden();
  std::vector<double> hidden(n), out(m);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = p.pair_b1()[i];
    for (std::size_t j = 0; j < n; ++j) acc += p.pair_w1()[i * n + j] * g[j];
    hidden[i] = std::tanh(acc);
  }
  for (std::size_t i = 0; i < m; ++i) {
    double acc = p.pair_b2()[i];
    for (std::size_t j = 0; j < n; ++j) acc += p.pair_w2()[i * n + j] * hidden[j];
    out[i] = std::tanh(acc);
  }
  return out;
}

inline std::vector<double> phi(const hypermine::ModelParams& p, std::span<const double> f) {
  const std::size_t d = p.shape().node_dim, h = p.shape().node_hidden;
  std::vector<double> out(h);
  for (std::size_t i = 0; i < h; ++i) {
    double acc = p.node_bias()[i];
    for (std::size_t j = 0; j < d; ++j) acc += p.node_weight()[i * d + j] * f[j];
    out[i] = std::tanh(acc);
  }
  return out;
}

inline double score(const hypermine::ModelParams& p, std::span<const double> f1, std::span<const double> f2,
                    std::span<const double> g) {
  auto a = phi(p, f1), b = phi(p, f2), c = psi(p, g);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * p.sigma()[i] * b[i];
  for (std::size_t i = 0; i < c.size(); ++i) s += p.h()[i] * c[i];
  return s;
}

// Random model inputs over `terms` terms: node features in [-1, 1] and a
// pairwise row for every ordered pair.
struct ModelFixture {
  hypermine::PairwiseFeatures pairwise;
  std::vector<double> node_rows;
  std::size_t node_dim = 0;
};

inline ModelFixture random_model_fixture(hypermine::Rng& rng, std::size_t terms, std::size_t d, std::size_t n) {
  using namespace hypermine;
  ModelFixture fx;
  fx.node_dim = d;
  std::vector<std::string> ctx;
  for (std::size_t c = 0; c < n; ++c) ctx.push_back("c" + std::to_string(c));
  fx.pairwise = PairwiseFeatures(ctx, {Measure::kWeedsPrec});
  std::vector<double> row(n);
  for (TermId a = 0; a < terms; ++a) {
    for (TermId b = 0; b < terms; ++b) {
      if (a == b) continue;
      for (auto& v : row) v = uniform_unit(rng) * 2.0 - 1.0;
      fx.pairwise.add({a, b}, row);
    }
  }
  fx.node_rows.resize(terms * d);
  for (auto& v : fx.node_rows) v = uniform_unit(rng) * 2.0 - 1.0;
  return fx;
}

// Randomizes every parameter in [-scale, scale].
inline void randomize(hypermine::ModelParams& p, hypermine::Rng& rng, double scale) {
  for (auto& v : p.values()) v = (hypermine::uniform_unit(rng) * 2.0 - 1.0) * scale;
}

}  // namespace oracle
