#include "hypermine/hearst.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "hypermine/log.hpp"
#include "hypermine/util.hpp"

namespace hypermine {

PatternSet PatternSet::all() { return PatternSet(0x3F); }

PatternSet PatternSet::parse(std::string_view spec) {
  if (spec == "default" || spec == "all") return all();
  PatternSet set = none();
  for (const auto& name : split(spec, ',')) {
    if (name == "such_as") set = set.with(HearstPattern::kSuchAs);
    else if (name == "such_y_as") set = set.with(HearstPattern::kSuchYAs);
    else if (name == "or_other") set = set.with(HearstPattern::kOrOther);
    else if (name == "and_other") set = set.with(HearstPattern::kAndOther);
    else if (name == "including") set = set.with(HearstPattern::kIncluding);
    else if (name == "especially") set = set.with(HearstPattern::kEspecially);
    else throw ValidationError("unknown pattern name: " + name);
  }
  return set;
}

void SeedPairSet::add(TermId hypernym, TermId hyponym, std::uint64_t count) {
  if (hypernym == hyponym) throw ValidationError("self-pair in seed set");
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), std::pair{hypernym, hyponym},
                             [](const SeedPair& p, const std::pair<TermId, TermId>& key) {
                               return std::pair{p.hypernym, p.hyponym} < key;
                             });
  if (it != pairs_.end() && it->hypernym == hypernym && it->hyponym == hyponym) {
    it->count += count;
  } else {
    pairs_.insert(it, SeedPair{hypernym, hyponym, count});
  }
}

bool SeedPairSet::contains(TermId hypernym, TermId hyponym) const {
  return std::binary_search(pairs_.begin(), pairs_.end(), SeedPair{hypernym, hyponym, 0},
                            [](const SeedPair& a, const SeedPair& b) {
                              return std::pair{a.hypernym, a.hyponym} < std::pair{b.hypernym, b.hyponym};
                            });
}

std::vector<TermId> SeedPairSet::terms() const {
  std::vector<TermId> out;
  for (const auto& p : pairs_) {
    out.push_back(p.hypernym);
    out.push_back(p.hyponym);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

bool is_separator(const std::string& tok) { return tok == "," || tok == "and" || tok == "or"; }

bool is_terminator(const std::string& tok) {
  return tok == "." || tok == ";" || tok == ":" || tok == "!" || tok == "?" || tok == "(" ||
         tok == ")" || tok == "\"";
}

bool is_boundary(const std::string& tok) { return is_separator(tok) || is_terminator(tok); }

struct Slot {
  TermId term;
  std::size_t begin;
  std::size_t end;
};

class SentenceMatcher {
 public:
  SentenceMatcher(std::span<const std::string> raw, const Vocabulary& vocab) : vocab_(vocab) {
    tokens_.reserve(raw.size());
    for (const auto& t : raw) tokens_.push_back(normalize_term(t));
  }

  std::vector<SeedPair> run(const PatternSet& patterns) {
    const std::size_t n = tokens_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::string& tok = tokens_[k];
      if (tok == "such" && k + 1 < n && tokens_[k + 1] == "as") {
        if (patterns.contains(HearstPattern::kSuchAs)) match_y_before_list(k, k + 2);
      } else if (tok == "such") {
        if (patterns.contains(HearstPattern::kSuchYAs)) match_such_y_as(k);
      } else if ((tok == "or" || tok == "and") && k + 1 < n && tokens_[k + 1] == "other") {
        auto p = tok == "or" ? HearstPattern::kOrOther : HearstPattern::kAndOther;
        if (patterns.contains(p)) match_list_before_y(k);
      } else if (tok == "including") {
        if (patterns.contains(HearstPattern::kIncluding)) match_y_before_list(k, k + 1);
      } else if (tok == "especially") {
        if (patterns.contains(HearstPattern::kEspecially)) match_y_before_list(k, k + 1);
      }
    }
    return std::move(found_);
  }

 private:
  // Exact match of tokens [begin, end), then with the last token de-pluralized.
  std::optional<TermId> match_span(std::size_t begin, std::size_t end) const {
    if (begin >= end) return std::nullopt;
    std::string joined;
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) joined.push_back(' ');
      joined += tokens_[i];
    }
    if (auto id = vocab_.find_surface(joined)) return id;
    const std::string& last = tokens_[end - 1];
    if (last.size() > 1 && last.back() == 's') {
      if (auto id = vocab_.find_surface(joined.substr(0, joined.size() - 1))) return id;
      if (last.size() > 2 && last[last.size() - 2] == 'e') {
        if (auto id = vocab_.find_surface(joined.substr(0, joined.size() - 2))) return id;
      }
      if (last.size() > 3 && last.ends_with("ies")) {
        if (auto id = vocab_.find_surface(joined.substr(0, joined.size() - 3) + "y")) return id;
      }
    }
    return std::nullopt;
  }

  std::size_t max_len() const { return std::max<std::size_t>(vocab_.max_tokens(), 1); }

  bool boundary_after(std::size_t pos) const {
    return pos == tokens_.size() || is_boundary(tokens_[pos]);
  }
  bool boundary_before(std::size_t pos) const { return pos == 0 || is_boundary(tokens_[pos - 1]); }

  // Longest term starting at `begin` whose span ends on a slot boundary.
  std::optional<Slot> prefix_to_boundary(std::size_t begin) const {
    for (std::size_t len = std::min(max_len(), tokens_.size() - begin); len >= 1; --len) {
      if (!boundary_after(begin + len)) continue;
      if (auto id = match_span(begin, begin + len)) return Slot{*id, begin, begin + len};
    }
    return std::nullopt;
  }

  // Longest term ending at `end`. With `aligned`, the span must also start on
  // a slot boundary.
  std::optional<Slot> suffix(std::size_t end, bool aligned) const {
    for (std::size_t len = std::min(max_len(), end); len >= 1; --len) {
      std::size_t begin = end - len;
      bool crosses = false;
      for (std::size_t i = begin; i < end; ++i) crosses = crosses || is_terminator(tokens_[i]);
      if (crosses) continue;
      if (aligned && !boundary_before(begin)) continue;
      if (auto id = match_span(begin, end)) return Slot{*id, begin, end};
    }
    return std::nullopt;
  }

  // Items of a list that starts at `pos` and runs rightwards to a terminator.
  std::vector<TermId> right_list(std::size_t pos) const {
    std::vector<TermId> items;
    const std::size_t n = tokens_.size();
    while (pos < n && !is_terminator(tokens_[pos])) {
      if (is_separator(tokens_[pos])) {
        ++pos;
        continue;
      }
      if (auto slot = prefix_to_boundary(pos)) {
        items.push_back(slot->term);
        pos = slot->end;
      } else {
        // Slot not consumed by a single term; skip it.
        while (pos < n && !is_boundary(tokens_[pos])) ++pos;
      }
    }
    return items;
  }

  // Items of a list that ends at `end` and runs leftwards.
  std::vector<TermId> left_list(std::size_t end) const {
    std::vector<TermId> items;
    while (end > 0) {
      std::size_t scan = end;
      while (scan > 0 && !is_boundary(tokens_[scan - 1])) --scan;
      bool delimited = scan > 0 && is_separator(tokens_[scan - 1]);
      auto slot = suffix(end, /*aligned=*/true);
      if (!slot && !delimited) slot = suffix(end, /*aligned=*/false);
      std::size_t next;
      if (slot) {
        items.push_back(slot->term);
        next = slot->begin;
      } else if (delimited) {
        next = scan;
      } else {
        break;
      }
      if (next == 0 || !is_separator(tokens_[next - 1])) break;
      while (next > 0 && is_separator(tokens_[next - 1])) --next;
      end = next;
    }
    return items;
  }

  void emit(TermId hypernym, const std::vector<TermId>& hyponyms) {
    for (TermId hypo : hyponyms) {
      if (hypo != hypernym) found_.push_back(SeedPair{hypernym, hypo, 1});
    }
  }

  // "Y such as X...", "Y including X...", "Y especially X..."
  void match_y_before_list(std::size_t keyword, std::size_t list_start) {
    std::size_t y_end = keyword;
    if (y_end > 0 && tokens_[y_end - 1] == ",") --y_end;
    auto y = suffix(y_end, /*aligned=*/false);
    if (!y) return;
    emit(y->term, right_list(list_start));
  }

  // "such Y as X..."
  void match_such_y_as(std::size_t such) {
    const std::size_t n = tokens_.size();
    for (std::size_t len = std::min(max_len(), n - such - 1); len >= 1; --len) {
      std::size_t as = such + 1 + len;
      if (as >= n || tokens_[as] != "as") continue;
      if (auto y = match_span(such + 1, as)) {
        emit(*y, right_list(as + 1));
        return;
      }
    }
  }

  // "X... and other Y", "X... or other Y"
  void match_list_before_y(std::size_t conj) {
    auto y = prefix_to_boundary(conj + 2);
    if (!y) return;
    emit(y->term, left_list(conj));
  }

  const Vocabulary& vocab_;
  std::vector<std::string> tokens_;
  std::vector<SeedPair> found_;
};

}  // namespace

std::vector<SeedPair> extract_from_sentence(std::span<const std::string> tokens,
                                            const Vocabulary& vocab,
                                            const PatternSet& patterns) {
  if (vocab.empty()) return {};
  return SentenceMatcher(tokens, vocab).run(patterns);
}

SeedPairSet extract_seed_pairs(const Corpus& corpus, const Vocabulary& vocab,
                               const PatternSet& patterns) {
  if (vocab.empty()) throw ValidationError("extract_seed_pairs: vocabulary is empty");
  std::map<std::pair<TermId, TermId>, std::uint64_t> counts;
  for (const auto& doc : corpus.documents) {
    for (const auto& sentence : doc.sentences) {
      for (const auto& p : extract_from_sentence(sentence, vocab, patterns)) {
        counts[{p.hypernym, p.hyponym}] += p.count;
      }
    }
  }
  SeedPairSet seeds;
  for (const auto& [key, count] : counts) seeds.add(key.first, key.second, count);
  if (seeds.empty()) log::warn("no pattern matches found; seed set is empty");
  return seeds;
}

std::vector<SeedPairSet> split_folds(const SeedPairSet& seeds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("split_folds: k must be at least 2");
  if (seeds.size() < k) {
    throw ValidationError("split_folds: " + std::to_string(seeds.size()) +
                          " seed pairs cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(seeds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);

  std::vector<SeedPairSet> folds(k);
  const std::size_t base = seeds.size() / k;
  const std::size_t extra = seeds.size() % k;
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) {
      const auto& p = seeds.pairs()[order[cursor++]];
      folds[f].add(p.hypernym, p.hyponym, p.count);
    }
  }
  return folds;
}

std::string serialize_seeds(const SeedPairSet& seeds, const Vocabulary& vocab) {
  std::string out;
  for (const auto& p : seeds.pairs()) {
    out += vocab[p.hypernym].surface + '\t' + vocab[p.hyponym].surface + '\t' +
           std::to_string(p.count) + '\n';
  }
  return out;
}

SeedPairSet parse_seeds(std::string_view tsv, const Vocabulary& vocab, const std::string& where) {
  SeedPairSet seeds;
  std::size_t line_no = 0;
  for (const auto& line : split(tsv, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::string loc = where + ":" + std::to_string(line_no);
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError(loc + ": expected hypernym, hyponym, count");
    auto hyper = vocab.find_surface(normalize_term(fields[0]));
    auto hypo = vocab.find_surface(normalize_term(fields[1]));
    if (!hyper || !hypo) throw ValidationError(loc + ": term not in vocabulary");
    long long count = parse_int(fields[2], loc);
    if (count < 0) throw ValidationError(loc + ": negative count");
    seeds.add(*hyper, *hypo, static_cast<std::uint64_t>(count));
  }
  return seeds;
}

void write_seeds(const std::filesystem::path& path, const SeedPairSet& seeds, const Vocabulary& vocab) {
  write_file(path, serialize_seeds(seeds, vocab));
}

SeedPairSet read_seeds(const std::filesystem::path& path, const Vocabulary& vocab) {
  return parse_seeds(read_file(path), vocab, path.filename().string());
}

}  // namespace hypermine
