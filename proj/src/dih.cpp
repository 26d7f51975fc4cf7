#include "hypermine/dih.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "hypermine/util.hpp"

namespace hypermine {

std::string measure_name(Measure m) { return "M" + std::to_string(static_cast<int>(m) + 1); }

Measure parse_measure(std::string_view name) {
  if (name == "M1" || name == "weedsprec") return Measure::kWeedsPrec;
  if (name == "M2" || name == "invcl") return Measure::kInvCL;
  if (name == "M3") return Measure::kClarkeDiff;
  if (name == "M4") return Measure::kOverlap;
  throw ValidationError("unknown measure " + std::string(name));
}

double DihScores::get(Measure m) const {
  switch (m) {
    case Measure::kWeedsPrec: return m1;
    case Measure::kInvCL: return m2;
    case Measure::kClarkeDiff: return m3;
    case Measure::kOverlap: return m4;
  }
  return 0.0;
}

std::size_t intersection_size(std::span<const UnitId> a, std::span<const UnitId> b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

DihScores dih_measures(const ContextIndex& ctx, TermId t1, TermId t2) {
  auto c1 = ctx.relevant(t1);
  auto c2 = ctx.relevant(t2);
  const double a = static_cast<double>(intersection_size(c1, c2));
  const double forward = ratio(a, static_cast<double>(c2.size()));   // ClarkeDE(t1 -> t2)
  const double backward = ratio(a, static_cast<double>(c1.size()));  // ClarkeDE(t2 -> t1)
  DihScores s;
  s.m1 = forward;
  s.m2 = std::sqrt(std::max(0.0, forward * (1.0 - backward)));
  s.m3 = forward - backward;
  s.m4 = ratio(a, static_cast<double>(ctx.total_units()));
  return s;
}

PairwiseFeatures::PairwiseFeatures(std::vector<std::string> context_ids, std::vector<Measure> measures)
    : context_ids_(std::move(context_ids)), measures_(std::move(measures)) {
  if (context_ids_.empty()) throw ValidationError("pairwise features need at least one context");
  if (measures_.empty()) throw ValidationError("pairwise features need at least one measure");
}

std::vector<std::string> PairwiseFeatures::column_names() const {
  std::vector<std::string> names;
  for (const auto& c : context_ids_) {
    for (auto m : measures_) names.push_back(c + "/" + measure_name(m));
  }
  return names;
}

std::string PairwiseFeatures::layout_fingerprint() const {
  std::string joined;
  for (const auto& name : column_names()) {
    joined += name;
    joined += '\t';
  }
  return sha256_hex(joined).substr(0, 16);
}

void PairwiseFeatures::add(TermPair pair, std::span<const double> values) {
  if (values.size() != dim()) throw ValidationError("pairwise feature row has the wrong length");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("pairwise feature row has a non-finite value");
  }
  if (!index_.emplace(pair, pairs_.size()).second) {
    throw ValidationError("duplicate pair in pairwise features");
  }
  pairs_.push_back(pair);
  data_.insert(data_.end(), values.begin(), values.end());
}

std::span<const double> PairwiseFeatures::at(TermPair pair) const {
  auto it = index_.find(pair);
  if (it == index_.end()) {
    throw ValidationError("no pairwise features for pair (" + std::to_string(pair.first) + ", " +
                          std::to_string(pair.second) + ")");
  }
  return row(it->second);
}

PairwiseFeatures compute_pairwise_features(std::span<const TermPair> pairs,
                                           std::span<const ContextIndex> contexts,
                                           std::span<const Measure> measures,
                                           std::size_t threads) {
  if (contexts.empty()) throw ValidationError("compute_pairwise_features: empty context list");
  std::vector<std::string> ids;
  for (const auto& c : contexts) ids.push_back(c.id());
  PairwiseFeatures out(std::move(ids), std::vector<Measure>(measures.begin(), measures.end()));

  const std::size_t dim = out.dim();
  std::vector<double> values(pairs.size() * dim, 0.0);
  std::vector<std::size_t> missing(pairs.size(), 0);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto [t1, t2] = pairs[i];
      for (std::size_t c = 0; c < contexts.size(); ++c) {
        double* block = values.data() + i * dim + c * measures.size();
        if (!contexts[c].covers(t1) || !contexts[c].covers(t2)) {
          ++missing[i];
          continue;  // block stays zero
        }
        auto scores = dih_measures(contexts[c], t1, t2);
        for (std::size_t m = 0; m < measures.size(); ++m) block[m] = scores.get(measures[m]);
      }
    }
  };

  threads = std::max<std::size_t>(1, std::min(threads, pairs.size()));
  if (threads <= 1) {
    work(0, pairs.size());
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (pairs.size() + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
      std::size_t begin = w * chunk;
      std::size_t end = std::min(pairs.size(), begin + chunk);
      if (begin >= end) break;
      workers.emplace_back(work, begin, end);
    }
    for (auto& t : workers) t.join();
  }

  std::size_t total_missing = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].first == pairs[i].second) throw ValidationError("self-pair in feature request");
    out.add(pairs[i], std::span<const double>(values.data() + i * dim, dim));
    total_missing += missing[i];
  }
  out.add_missing_blocks(total_missing);
  return out;
}

std::vector<TermPair> cooccurring_pairs(std::span<const ContextIndex> contexts, std::size_t num_terms) {
  std::set<TermPair> pairs;
  for (const auto& ctx : contexts) {
    std::vector<std::vector<TermId>> terms_of(ctx.total_units());
    for (TermId t = 0; t < std::min(num_terms, ctx.num_terms()); ++t) {
      for (UnitId u : ctx.relevant(t)) terms_of[u].push_back(t);
    }
    for (const auto& terms : terms_of) {
      for (TermId a : terms) {
        for (TermId b : terms) {
          if (a != b) pairs.emplace(a, b);
        }
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

std::string serialize_features(const PairwiseFeatures& features, const Vocabulary& vocab) {
  std::string out = "t1\tt2";
  for (const auto& name : features.column_names()) {
    out += '\t';
    out += name;
  }
  out += '\n';
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& [t1, t2] = features.pairs()[i];
    out += vocab[t1].surface;
    out += '\t';
    out += vocab[t2].surface;
    for (double v : features.row(i)) {
      out += '\t';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

PairwiseFeatures parse_features(std::string_view text, const Vocabulary& vocab, const std::string& where) {
  auto lines = split(text, '\n');
  if (lines.empty()) throw ParseError(where + ": missing header");
  auto header = split(lines[0], '\t');
  if (header.size() < 3 || header[0] != "t1" || header[1] != "t2") {
    throw ParseError(where + ":1: expected header t1, t2, columns...");
  }
  std::vector<std::string> contexts;
  std::vector<Measure> measures;
  for (std::size_t i = 2; i < header.size(); ++i) {
    auto slash = header[i].rfind('/');
    if (slash == std::string::npos) throw ParseError(where + ":1: bad column " + header[i]);
    std::string ctx = header[i].substr(0, slash);
    Measure m = parse_measure(header[i].substr(slash + 1));
    if (contexts.empty() || contexts.back() != ctx) contexts.push_back(ctx);
    if (contexts.size() == 1) measures.push_back(m);
  }
  PairwiseFeatures out(contexts, measures);
  if (out.column_names() != std::vector<std::string>(header.begin() + 2, header.end())) {
    throw ParseError(where + ":1: columns do not form a contexts x measures grid");
  }
  std::vector<double> values;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string loc = where + ":" + std::to_string(i + 1);
    auto fields = split(lines[i], '\t');
    if (fields.size() != header.size()) throw ParseError(loc + ": wrong number of columns");
    auto t1 = vocab.find_surface(fields[0]);
    auto t2 = vocab.find_surface(fields[1]);
    if (!t1 || !t2) throw ValidationError(loc + ": term not in vocabulary");
    values.clear();
    for (std::size_t k = 2; k < fields.size(); ++k) values.push_back(parse_double(fields[k], loc));
    out.add({*t1, *t2}, values);
  }
  return out;
}

void write_features(const std::filesystem::path& path, const PairwiseFeatures& features,
                    const Vocabulary& vocab) {
  write_file(path, serialize_features(features, vocab));
}

PairwiseFeatures read_features(const std::filesystem::path& path, const Vocabulary& vocab) {
  return parse_features(read_file(path), vocab, path.filename().string());
}

}  // namespace hypermine
