#include "hypermine/metrics.hpp"

#include <algorithm>
#include <json.hpp>
#include <map>

#include "hypermine/log.hpp"

namespace hypermine {

void LabeledPairSet::add(TermPair pair, bool positive) {
  if (pair.first == pair.second) throw ValidationError("self-pair in labels");
  if (!index_.emplace(pair, pairs_.size()).second) {
    throw ValidationError("duplicate labeled pair (" + std::to_string(pair.first) + ", " +
                          std::to_string(pair.second) + ")");
  }
  pairs_.push_back({pair, positive});
  if (positive) ++positives_;
}

std::optional<bool> LabeledPairSet::find(TermPair pair) const {
  auto it = index_.find(pair);
  if (it == index_.end()) return std::nullopt;
  return pairs_[it->second].positive;
}

std::string serialize_labels(const LabeledPairSet& labels, const Vocabulary& vocab) {
  std::string out;
  for (const auto& lp : labels.pairs()) {
    out += vocab[lp.pair.first].surface + '\t' + vocab[lp.pair.second].surface + '\t' +
           (lp.positive ? "1" : "0") + '\n';
  }
  return out;
}

LabeledPairSet parse_labels(std::string_view tsv, const Vocabulary& vocab, const std::string& where) {
  LabeledPairSet labels;
  std::size_t line_no = 0;
  for (auto line : split(tsv, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::string loc = where + ":" + std::to_string(line_no);
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError(loc + ": expected hypernym, hyponym, label");
    if (fields[2] != "1" && fields[2] != "0") throw ParseError(loc + ": label must be 1 or 0");
    auto t1 = vocab.find_surface(normalize_term(fields[0]));
    auto t2 = vocab.find_surface(normalize_term(fields[1]));
    if (!t1) throw ValidationError(loc + ": unknown term " + fields[0]);
    if (!t2) throw ValidationError(loc + ": unknown term " + fields[1]);
    try {
      labels.add({*t1, *t2}, fields[2] == "1");
    } catch (const ValidationError& ex) {
      throw ValidationError(loc + ": " + ex.what());
    }
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const LabeledPairSet& labels, const Vocabulary& vocab) {
  write_file(path, serialize_labels(labels, vocab));
}

LabeledPairSet read_labels(const std::filesystem::path& path, const Vocabulary& vocab) {
  return parse_labels(read_file(path), vocab, path.filename().string());
}

double precision_at_k(const RankedPairList& ranked, const LabeledPairSet& labels, std::size_t k) {
  if (k == 0) throw ValidationError("precision_at_k: k must be positive");
  if (k > ranked.size()) {
    throw ValidationError("precision_at_k: k=" + std::to_string(k) + " exceeds the " +
                          std::to_string(ranked.size()) + " ranked pairs");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    auto label = labels.find(ranked[i].pair);
    if (!label) {
      throw ValidationError("precision_at_k: unlabeled pair at rank " + std::to_string(i + 1));
    }
    if (*label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

RankMetrics reciprocal_rank_metrics(const RankedPairList& ranked, const LabeledPairSet& labels) {
  struct Group {
    std::size_t seen = 0;  // labeled pairs of this group met so far
    std::size_t positives = 0;
    double rr_sum = 0.0;
    double rr_max = 0.0;
  };
  std::map<TermId, Group> groups;
  std::size_t found = 0;
  for (const auto& r : ranked) {
    auto label = labels.find(r.pair);
    if (!label) continue;
    ++found;
    Group& g = groups[r.pair.first];
    ++g.seen;
    if (*label) {
      double rr = 1.0 / static_cast<double>(g.seen);
      ++g.positives;
      g.rr_sum += rr;
      g.rr_max = std::max(g.rr_max, rr);
    }
  }
  if (found != labels.size()) {
    throw ValidationError("reciprocal_rank_metrics: " + std::to_string(labels.size() - found) +
                          " labeled pairs are missing from the ranking");
  }

  std::vector<GroupRank> per_group;
  std::size_t skipped = 0;
  for (const auto& [hypernym, g] : groups) {
    if (g.positives == 0) {
      ++skipped;
      continue;
    }
    per_group.push_back({g.rr_sum / static_cast<double>(g.positives), g.rr_max, g.positives});
  }
  if (skipped > 0) log::warn(std::to_string(skipped) + " hypernym groups without positives were skipped");
  return aggregate_group_ranks(per_group);
}

RankMetrics aggregate_group_ranks(std::span<const GroupRank> groups) {
  RankMetrics m;
  for (const auto& g : groups) {
    if (g.positives == 0) throw ValidationError("aggregate_group_ranks: group without positives");
    const double w = static_cast<double>(g.positives);
    m.ma_marr += g.arr;
    m.ma_mlrr += g.lrr;
    m.mi_marr += w * g.arr;
    m.mi_mlrr += w * g.lrr;
    ++m.groups;
    m.positives += g.positives;
  }
  if (m.groups > 0) {
    m.ma_marr /= static_cast<double>(m.groups);
    m.ma_mlrr /= static_cast<double>(m.groups);
    m.mi_marr /= static_cast<double>(m.positives);
    m.mi_mlrr /= static_cast<double>(m.positives);
  }
  return m;
}

RankedPairList evaluation_order(const RankedPairList& ranked, const LabeledPairSet& labels,
                                std::uint64_t tie_seed) {
  std::vector<RankedPair> out;
  std::unordered_map<TermPair, bool, TermPairHash> seen;
  for (const auto& r : ranked) {
    if (labels.contains(r.pair) && seen.emplace(r.pair, true).second) out.push_back(r);
  }
  for (const auto& lp : labels.pairs()) {
    if (!seen.count(lp.pair)) out.push_back({lp.pair, 0.0});
  }
  return order_by_score(std::move(out), tie_seed);
}

EvaluationReport evaluate(const RankedPairList& ranked, const LabeledPairSet& labels,
                          std::span<const std::size_t> ks, std::uint64_t tie_seed) {
  EvaluationReport report;
  auto order = evaluation_order(ranked, labels, tie_seed);
  report.labeled_pairs = labels.size();
  std::size_t scored = 0;
  for (const auto& r : ranked) scored += labels.contains(r.pair) ? 1 : 0;
  report.unscored_pairs = labels.size() - std::min(scored, labels.size());
  for (std::size_t k : ks) {
    if (k == 0 || k > order.size()) {
      log::warn("skipping P@" + std::to_string(k) + ": only " + std::to_string(order.size()) + " labeled pairs");
      continue;
    }
    report.precision.emplace_back(k, precision_at_k(order, labels, k));
  }
  report.ranks = reciprocal_rank_metrics(order, labels);
  return report;
}

std::string serialize_report(const EvaluationReport& report) {
  nlohmann::ordered_json doc;
  for (const auto& [k, p] : report.precision) doc["P@" + std::to_string(k)] = p;
  doc["MaMARR"] = report.ranks.ma_marr;
  doc["MiMARR"] = report.ranks.mi_marr;
  doc["MaMLRR"] = report.ranks.ma_mlrr;
  doc["MiMLRR"] = report.ranks.mi_mlrr;
  doc["groups"] = report.ranks.groups;
  doc["positives"] = report.ranks.positives;
  doc["labeled_pairs"] = report.labeled_pairs;
  doc["unscored_pairs"] = report.unscored_pairs;
  return doc.dump(2) + "\n";
}

}  // namespace hypermine
