#pragma once

// Staged pipeline over plain files with a hash manifest.
//
// Stages: extract-seeds, embed, build-contexts, compute-features, train,
// score, evaluate, build-taxonomy. Each stage records its parameters, seed and
// the SHA-256 of every input and output in <output>/manifest.json. A rerun
// skips a stage when all of these still match; it refuses to continue when a
// recorded output file no longer matches its hash.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hypermine/context.hpp"
#include "hypermine/dih.hpp"
#include "hypermine/embedding.hpp"
#include "hypermine/hearst.hpp"
#include "hypermine/metrics.hpp"
#include "hypermine/model.hpp"
#include "hypermine/taxonomy.hpp"

namespace hypermine {

inline constexpr const char* kVersion = "0.1.0";

enum class CandidateMode {
  kLabels,   // the labeled pairs
  kAll,      // every ordered pair of distinct terms
  kCooccur,  // pairs sharing a unit in some context
};

CandidateMode parse_candidate_mode(std::string_view text);
std::string candidate_mode_name(CandidateMode mode);

struct PipelineConfig {
  std::filesystem::path graph_dir;  // nodes.tsv, edges.tsv, schema.json
  std::filesystem::path corpus;
  std::filesystem::path labels;     // optional; evaluation is skipped without it
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> embedding_import;

  std::string target_type = "keyword";
  std::string patterns = "default";
  std::vector<ContextSpec> contexts;
  std::vector<Measure> measures{kAllMeasures.begin(), kAllMeasures.end()};
  CandidateMode candidates = CandidateMode::kLabels;
  EmbeddingConfig embedding;
  TrainConfig train;
  std::vector<std::size_t> ks{100, 1000};
  TaxonomyConfig taxonomy;

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool deterministic = false;

  void validate() const;
};

/// JSON config. Relative paths resolve against `base_dir`. Unknown keys are
/// rejected.
PipelineConfig parse_pipeline_config(std::string_view json_text, const std::filesystem::path& base_dir,
                                     const std::string& where = "config");
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Per-stage seeds: global seed plus a fixed offset per stage.
struct StageSeeds {
  std::uint64_t embed, contexts, train, score, evaluate, taxonomy;
};
StageSeeds stage_seeds(std::uint64_t global_seed);

/// Stage names in execution order.
const std::vector<std::string>& stage_names();

struct RunOptions {
  bool force = false;                   // recompute every stage
  std::optional<std::string> stop_after;
  std::function<void(const std::string&)> progress;  // one line per stage
};

struct StageReport {
  std::string stage;
  bool skipped = false;  // resumed from files
};

/// Runs the pipeline; throws PipelineError naming the failing stage.
std::vector<StageReport> run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& message)
      : Error("stage " + stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Candidate pairs for scoring.
std::vector<TermPair> candidate_pairs(CandidateMode mode, const Vocabulary& vocab, const LabeledPairSet* labels,
                                      std::span<const ContextIndex> contexts);

/// Every pair whose features training and scoring need: the seeds, every
/// admissible negative and the candidates. Sorted, unique.
std::vector<TermPair> feature_pairs(const SeedPairSet& seeds, std::span<const TermPair> candidates,
                                    CorruptSlot corrupt);

/// Terms negatives are drawn from: seed terms plus candidate terms.
std::vector<TermId> negative_pool(const SeedPairSet& seeds, std::span<const TermPair> candidates);

std::string serialize_pairs(std::span<const TermPair> pairs, const Vocabulary& vocab);
std::vector<TermPair> parse_pairs(std::string_view tsv, const Vocabulary& vocab, const std::string& where = "pairs");

}  // namespace hypermine
