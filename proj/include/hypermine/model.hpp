#pragma once

// Hypernymy inference model.
//
//   s(t1 -> t2) = phi(f_t1)^T diag(sigma) phi(f_t2) + h^T psi(g_t1t2)
//
// phi: dropout -> affine (d -> H) -> tanh, shared by both terms.
// psi: dropout -> affine (N -> N) -> tanh -> dropout -> affine (N -> N/2) -> tanh.
// Trained with the margin-1 contrastive hinge against sampled negatives.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hypermine/dih.hpp"
#include "hypermine/embedding.hpp"
#include "hypermine/hearst.hpp"
#include "hypermine/util.hpp"

namespace hypermine {

inline constexpr std::size_t kDefaultNodeHidden = 256;
inline constexpr std::size_t kDefaultNegativeRatio = 10;
inline constexpr double kDefaultNodeDropout = 0.7;
inline constexpr double kDefaultPairDropout = 0.1;

struct ModelShape {
  std::size_t node_dim = 0;     // d
  std::size_t node_hidden = 0;  // H
  std::size_t pair_dim = 0;     // N

  std::size_t pair_hidden() const noexcept { return pair_dim / 2; }
  bool operator==(const ModelShape&) const = default;
};

/// All parameters in one flat buffer so that optimizers and the finite
/// difference checker can treat them uniformly.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(ModelShape shape);  // all zeros

  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
  /// sigma = 1, h = 0.
  static ModelParams initialize(ModelShape shape, std::uint64_t seed);

  const ModelShape& shape() const noexcept { return shape_; }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  std::span<double> node_weight() { return block(0); }  // H x d, row-major
  std::span<double> node_bias() { return block(1); }    // H
  std::span<double> pair_w1() { return block(2); }      // N x N
  std::span<double> pair_b1() { return block(3); }      // N
  std::span<double> pair_w2() { return block(4); }      // N/2 x N
  std::span<double> pair_b2() { return block(5); }      // N/2
  std::span<double> sigma() { return block(6); }        // H (diagonal)
  std::span<double> h() { return block(7); }            // N/2

  std::span<const double> node_weight() const { return block(0); }
  std::span<const double> node_bias() const { return block(1); }
  std::span<const double> pair_w1() const { return block(2); }
  std::span<const double> pair_b1() const { return block(3); }
  std::span<const double> pair_w2() const { return block(4); }
  std::span<const double> pair_b2() const { return block(5); }
  std::span<const double> sigma() const { return block(6); }
  std::span<const double> h() const { return block(7); }

  static constexpr std::size_t kNumBlocks = 8;
  static const char* block_name(std::size_t b);
  std::span<double> block(std::size_t b);
  std::span<const double> block(std::size_t b) const;

  bool operator==(const ModelParams& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  void layout();

  ModelShape shape_;
  std::vector<double> data_;
  std::vector<std::size_t> offsets_;
};

enum class Mode { kTrain, kInfer };

struct DropoutRates {
  double node = 0.0;
  double pair = 0.0;
};

/// Dense lookup of f_t per term and g per pair.
class ModelInputs {
 public:
  /// Throws ValidationError listing terms without a vector.
  ModelInputs(const Vocabulary& vocab, const NodeEmbeddings& embeddings,
              const PairwiseFeatures& pairwise);
  /// Direct construction: row-major |terms| x d node features.
  ModelInputs(std::size_t node_dim, std::vector<double> node_rows, const PairwiseFeatures& pairwise);

  std::size_t node_dim() const noexcept { return node_dim_; }
  std::size_t pair_dim() const noexcept { return pairwise_->dim(); }
  std::size_t num_terms() const noexcept { return node_dim_ == 0 ? 0 : node_rows_.size() / node_dim_; }
  std::span<const double> node(TermId t) const;
  std::span<const double> pair(TermPair p) const { return pairwise_->at(p); }
  const PairwiseFeatures& pairwise() const noexcept { return *pairwise_; }

 private:
  std::size_t node_dim_ = 0;
  std::vector<double> node_rows_;
  const PairwiseFeatures* pairwise_ = nullptr;
};

/// Infer-mode score (no dropout). Throws on shape mismatch.
double score(const ModelParams& params, std::span<const double> f1, std::span<const double> f2,
             std::span<const double> g12);

/// Train-mode score with inverted dropout drawn from `rng`.
double score(const ModelParams& params, std::span<const double> f1, std::span<const double> f2,
             std::span<const double> g12, Mode mode, const DropoutRates& rates, Rng& rng);

/// One positive pair and its sampled negative pairs.
struct TrainingExample {
  TermPair positive;
  std::vector<TermPair> negatives;
};

/// sum over examples and negatives of max(0, 1 - s(positive) + s(negative)),
/// evaluated in infer mode.
double contrastive_loss(const ModelParams& params, std::span<const TrainingExample> examples,
                        const ModelInputs& inputs);

/// Hinge term for given scores.
inline double hinge(double positive_score, double negative_score) {
  double v = 1.0 - positive_score + negative_score;
  return v > 0.0 ? v : 0.0;
}

struct LossAndGradient {
  double loss = 0.0;
  ModelParams gradient;
  std::size_t active_hinges = 0;
};

/// Loss plus analytic gradient with respect to every parameter. In train
/// mode dropout masks come from `rng`.
LossAndGradient loss_and_gradient(const ModelParams& params, std::span<const TrainingExample> examples,
                                  const ModelInputs& inputs, Mode mode = Mode::kInfer,
                                  const DropoutRates& rates = {}, Rng* rng = nullptr);

/// Which slot a negative replaces.
enum class CorruptSlot { kHyponym, kHypernym };

struct TrainConfig {
  std::size_t negative_ratio = kDefaultNegativeRatio;  // L
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  double node_dropout = kDefaultNodeDropout;
  double pair_dropout = kDefaultPairDropout;
  std::size_t node_hidden = kDefaultNodeHidden;
  CorruptSlot corrupt = CorruptSlot::kHyponym;

  void validate() const;
};

struct TrainResult {
  ModelParams params;
  /// Summed train-mode hinge loss per epoch.
  std::vector<double> loss_trace;
};

/// Negative sampler: for each positive, draws L corruptions uniformly from
/// `pool` such that the corrupted pair is not in S.
class NegativeSampler {
 public:
  NegativeSampler(const SeedPairSet& seeds, std::span<const TermId> pool, CorruptSlot slot);
  /// Empty when the anchor has no admissible corruption.
  std::vector<TermPair> sample(const SeedPair& positive, std::size_t count, Rng& rng) const;
  /// Every pair sample() can ever produce.
  std::vector<TermPair> admissible_pairs() const;

 private:
  const std::vector<TermId>& candidates_for(TermId anchor) const;

  const SeedPairSet& seeds_;
  CorruptSlot slot_;
  std::vector<TermId> pool_;
  std::vector<TermId> anchors_;
  std::vector<std::vector<TermId>> candidates_;
};

/// Minibatch SGD on the contrastive loss; negatives are resampled each epoch.
/// `pool` is the set negatives are drawn from (seed terms when empty).
TrainResult train(const SeedPairSet& seeds, const ModelInputs& inputs, const TrainConfig& config,
                  std::span<const TermId> pool = {});

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares the analytic gradient with central differences of step
/// `epsilon` for every parameter (dropout off). The relative error is
/// |a - n| / max(|a|, |n|, 1e-6); the floor treats gradients below 1e-6 as
/// zero so that round-off in the numeric estimate is not divided by zero.
GradientCheckResult gradient_check(const ModelParams& params, std::span<const TrainingExample> examples,
                                   const ModelInputs& inputs, double epsilon);

struct RankedPair {
  TermPair pair;
  double score = 0.0;
  bool operator==(const RankedPair&) const = default;
};

using RankedPairList = std::vector<RankedPair>;

/// Seeded shuffle followed by a stable descending sort: equal scores end up
/// in a reproducible random order.
RankedPairList order_by_score(std::vector<RankedPair> scored, std::uint64_t tie_seed);

/// Scores candidates in infer mode and orders them with order_by_score.
RankedPairList rank_pairs(const ModelParams& params, std::span<const TermPair> candidates,
                          const ModelInputs& inputs, std::uint64_t tie_seed, std::size_t threads = 1);

std::string serialize_ranked(const RankedPairList& ranked, const Vocabulary& vocab);
RankedPairList parse_ranked(std::string_view tsv, const Vocabulary& vocab, const std::string& where = "ranked");

/// Versioned JSON checkpoint with shapes, the pairwise layout fingerprint and
/// full-precision parameters.
std::string serialize_checkpoint(const ModelParams& params, const std::string& layout_fingerprint,
                                 const TrainConfig& config);
struct Checkpoint {
  ModelParams params;
  std::string layout_fingerprint;
};
Checkpoint parse_checkpoint(std::string_view json_text, const std::string& where = "checkpoint");

}  // namespace hypermine
