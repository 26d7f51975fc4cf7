#include "hypermine/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <thread>

#include "hypermine/log.hpp"

namespace hypermine {

using json = nlohmann::json;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

namespace {

ConstVectorMap as_vector(std::span<const double> s) {
  return ConstVectorMap(s.data(), static_cast<Eigen::Index>(s.size()));
}
VectorMap as_vector(std::span<double> s) { return VectorMap(s.data(), static_cast<Eigen::Index>(s.size())); }

ConstMatrixMap as_matrix(std::span<const double> s, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MatrixMap as_matrix(std::span<double> s, std::size_t rows, std::size_t cols) {
  return MatrixMap(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

ModelParams::ModelParams(ModelShape shape) : shape_(shape) {
  if (shape.node_dim == 0 || shape.node_hidden == 0 || shape.pair_dim < 2) {
    throw ValidationError("model shape needs d >= 1, H >= 1 and N >= 2");
  }
  layout();
}

void ModelParams::layout() {
  const std::size_t d = shape_.node_dim, hn = shape_.node_hidden, n = shape_.pair_dim,
                    n2 = shape_.pair_hidden();
  const std::size_t sizes[kNumBlocks] = {hn * d, hn, n * n, n, n2 * n, n2, hn, n2};
  offsets_.assign(kNumBlocks + 1, 0);
  for (std::size_t b = 0; b < kNumBlocks; ++b) offsets_[b + 1] = offsets_[b] + sizes[b];
  data_.assign(offsets_.back(), 0.0);
}

const char* ModelParams::block_name(std::size_t b) {
  static constexpr const char* kNames[kNumBlocks] = {"node_weight", "node_bias", "pair_w1", "pair_b1",
                                                     "pair_w2",     "pair_b2",   "sigma",   "h"};
  return kNames[b];
}

std::span<double> ModelParams::block(std::size_t b) {
  return std::span<double>(data_.data() + offsets_.at(b), offsets_.at(b + 1) - offsets_.at(b));
}

std::span<const double> ModelParams::block(std::size_t b) const {
  return std::span<const double>(data_.data() + offsets_.at(b), offsets_.at(b + 1) - offsets_.at(b));
}

ModelParams ModelParams::initialize(ModelShape shape, std::uint64_t seed) {
  ModelParams p(shape);
  Rng rng(seed);
  auto fill = [&](std::span<double> block, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : block) v = (2.0 * uniform_unit(rng) - 1.0) * bound;
  };
  fill(p.node_weight(), shape.node_dim);
  fill(p.node_bias(), shape.node_dim);
  fill(p.pair_w1(), shape.pair_dim);
  fill(p.pair_b1(), shape.pair_dim);
  fill(p.pair_w2(), shape.pair_dim);
  fill(p.pair_b2(), shape.pair_dim);
  std::fill(p.sigma().begin(), p.sigma().end(), 1.0);
  std::fill(p.h().begin(), p.h().end(), 0.0);
  return p;
}

// ---------------------------------------------------------------------------
// Inputs

ModelInputs::ModelInputs(const Vocabulary& vocab, const NodeEmbeddings& embeddings,
                         const PairwiseFeatures& pairwise)
    : node_dim_(embeddings.dim()), pairwise_(&pairwise) {
  std::vector<std::string> missing;
  node_rows_.reserve(vocab.size() * node_dim_);
  for (const auto& term : vocab.terms()) {
    if (!embeddings.contains(term.node_id)) {
      missing.push_back(term.surface);
      node_rows_.insert(node_rows_.end(), node_dim_, 0.0);
      continue;
    }
    auto row = embeddings.at(term.node_id);
    node_rows_.insert(node_rows_.end(), row.begin(), row.end());
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
    throw ValidationError("feature coverage gap: " + std::to_string(missing.size()) +
                          " terms have no node vector (" + list + ")");
  }
}

ModelInputs::ModelInputs(std::size_t node_dim, std::vector<double> node_rows,
                         const PairwiseFeatures& pairwise)
    : node_dim_(node_dim), node_rows_(std::move(node_rows)), pairwise_(&pairwise) {
  if (node_dim_ == 0 || node_rows_.size() % node_dim_ != 0) {
    throw ValidationError("node feature rows do not match the node dimension");
  }
}

std::span<const double> ModelInputs::node(TermId t) const {
  if (static_cast<std::size_t>(t) >= num_terms()) {
    throw ValidationError("no node features for term " + std::to_string(t));
  }
  return std::span<const double>(node_rows_.data() + static_cast<std::size_t>(t) * node_dim_, node_dim_);
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

void check_shapes(const ModelParams& params, std::size_t f1, std::size_t f2, std::size_t g) {
  const auto& s = params.shape();
  if (f1 != s.node_dim || f2 != s.node_dim || g != s.pair_dim) {
    throw ValidationError("input shape mismatch: model expects d=" + std::to_string(s.node_dim) +
                          ", N=" + std::to_string(s.pair_dim));
  }
}

// Inverted dropout: kept units are scaled by 1/(1-p) so inference needs no rescale.
void dropout_mask(std::vector<double>& mask, std::size_t n, double rate, Mode mode, Rng* rng) {
  mask.assign(n, 1.0);
  if (mode != Mode::kTrain || rate <= 0.0) return;
  const double keep = 1.0 - rate;
  for (auto& m : mask) m = uniform_unit(*rng) < keep ? 1.0 / keep : 0.0;
}

struct NodeActivation {
  std::vector<double> x;    // dropped input
  std::vector<double> phi;  // tanh output
};

struct PairActivation {
  std::vector<double> x1;     // dropped g
  std::vector<double> z1;     // first hidden layer
  std::vector<double> mask2;  // dropout scale between layers
  std::vector<double> x2;     // dropped z1
  std::vector<double> z2;     // psi(g)
};

void node_forward(const ModelParams& p, std::span<const double> f, Mode mode, double rate, Rng* rng,
                  NodeActivation& act) {
  const auto& s = p.shape();
  std::vector<double> mask;
  dropout_mask(mask, s.node_dim, rate, mode, rng);
  act.x.resize(s.node_dim);
  for (std::size_t i = 0; i < s.node_dim; ++i) act.x[i] = f[i] * mask[i];
  act.phi.resize(s.node_hidden);
  auto W = as_matrix(p.node_weight(), s.node_hidden, s.node_dim);
  VectorMap phi(act.phi.data(), static_cast<Eigen::Index>(s.node_hidden));
  phi.noalias() = W * ConstVectorMap(act.x.data(), static_cast<Eigen::Index>(s.node_dim));
  phi += as_vector(p.node_bias());
  phi = phi.array().tanh();
}

void pair_forward(const ModelParams& p, std::span<const double> g, Mode mode, double rate, Rng* rng,
                  PairActivation& act) {
  const auto& s = p.shape();
  const auto n = static_cast<Eigen::Index>(s.pair_dim);
  const auto n2 = static_cast<Eigen::Index>(s.pair_hidden());
  std::vector<double> mask1;
  dropout_mask(mask1, s.pair_dim, rate, mode, rng);
  act.x1.resize(s.pair_dim);
  for (std::size_t i = 0; i < s.pair_dim; ++i) act.x1[i] = g[i] * mask1[i];

  act.z1.resize(s.pair_dim);
  VectorMap z1(act.z1.data(), n);
  z1.noalias() = as_matrix(p.pair_w1(), s.pair_dim, s.pair_dim) * ConstVectorMap(act.x1.data(), n);
  z1 += as_vector(p.pair_b1());
  z1 = z1.array().tanh();

  dropout_mask(act.mask2, s.pair_dim, rate, mode, rng);
  act.x2.resize(s.pair_dim);
  for (std::size_t i = 0; i < s.pair_dim; ++i) act.x2[i] = act.z1[i] * act.mask2[i];

  act.z2.resize(s.pair_hidden());
  VectorMap z2(act.z2.data(), n2);
  z2.noalias() = as_matrix(p.pair_w2(), s.pair_hidden(), s.pair_dim) * ConstVectorMap(act.x2.data(), n);
  z2 += as_vector(p.pair_b2());
  z2 = z2.array().tanh();
}

double combine(const ModelParams& p, const std::vector<double>& phi1, const std::vector<double>& phi2,
               const std::vector<double>& z2) {
  const auto sigma = p.sigma();
  const auto h = p.h();
  double s = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) s += sigma[i] * phi1[i] * phi2[i];
  for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * z2[i];
  return s;
}

void node_backward(const ModelParams& p, const NodeActivation& act, const std::vector<double>& dphi,
                   ModelParams& grad) {
  const auto& s = p.shape();
  Eigen::VectorXd da(static_cast<Eigen::Index>(s.node_hidden));
  for (std::size_t i = 0; i < s.node_hidden; ++i) {
    da[static_cast<Eigen::Index>(i)] = dphi[i] * (1.0 - act.phi[i] * act.phi[i]);
  }
  as_matrix(grad.node_weight(), s.node_hidden, s.node_dim).noalias() +=
      da * ConstVectorMap(act.x.data(), static_cast<Eigen::Index>(s.node_dim)).transpose();
  as_vector(grad.node_bias()) += da;
}

void pair_backward(const ModelParams& p, const PairActivation& act, double coef, ModelParams& grad) {
  const auto& s = p.shape();
  const auto n = static_cast<Eigen::Index>(s.pair_dim);
  const auto n2 = static_cast<Eigen::Index>(s.pair_hidden());
  ConstVectorMap z2(act.z2.data(), n2);
  as_vector(grad.h()) += coef * z2;

  Eigen::VectorXd da2 = coef * as_vector(p.h()).array() * (1.0 - z2.array().square());
  as_matrix(grad.pair_w2(), s.pair_hidden(), s.pair_dim).noalias() +=
      da2 * ConstVectorMap(act.x2.data(), n).transpose();
  as_vector(grad.pair_b2()) += da2;

  Eigen::VectorXd dx2 = as_matrix(p.pair_w2(), s.pair_hidden(), s.pair_dim).transpose() * da2;
  ConstVectorMap z1(act.z1.data(), n);
  ConstVectorMap mask2(act.mask2.data(), n);
  Eigen::VectorXd da1 = dx2.array() * mask2.array() * (1.0 - z1.array().square());
  as_matrix(grad.pair_w1(), s.pair_dim, s.pair_dim).noalias() +=
      da1 * ConstVectorMap(act.x1.data(), n).transpose();
  as_vector(grad.pair_b1()) += da1;
}

struct ScoredPair {
  std::size_t slot1 = 0;  // index into the example's node activations
  std::size_t slot2 = 0;
  PairActivation act;
  double score = 0.0;
  double coef = 0.0;
};

// Processes one example: forward every pair, accumulate hinge loss and (if
// grad != nullptr) the gradient.
double process_example(const ModelParams& p, const TrainingExample& ex, const ModelInputs& inputs,
                       Mode mode, const DropoutRates& rates, Rng* rng, ModelParams* grad,
                       std::size_t* active) {
  std::vector<TermId> terms;
  auto slot_of = [&](TermId t) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (terms[i] == t) return i;
    }
    terms.push_back(t);
    return terms.size() - 1;
  };
  std::vector<ScoredPair> scored(1 + ex.negatives.size());
  scored[0].slot1 = slot_of(ex.positive.first);
  scored[0].slot2 = slot_of(ex.positive.second);
  for (std::size_t j = 0; j < ex.negatives.size(); ++j) {
    scored[j + 1].slot1 = slot_of(ex.negatives[j].first);
    scored[j + 1].slot2 = slot_of(ex.negatives[j].second);
  }

  std::vector<NodeActivation> nodes(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    node_forward(p, inputs.node(terms[i]), mode, rates.node, rng, nodes[i]);
  }
  for (std::size_t j = 0; j < scored.size(); ++j) {
    const TermPair& pair = j == 0 ? ex.positive : ex.negatives[j - 1];
    pair_forward(p, inputs.pair(pair), mode, rates.pair, rng, scored[j].act);
    scored[j].score = combine(p, nodes[scored[j].slot1].phi, nodes[scored[j].slot2].phi, scored[j].act.z2);
  }

  double loss = 0.0;
  for (std::size_t j = 1; j < scored.size(); ++j) {
    double term = 1.0 - scored[0].score + scored[j].score;
    if (term > 0.0) {
      loss += term;
      scored[0].coef -= 1.0;
      scored[j].coef += 1.0;
      if (active) ++*active;
    }
  }
  if (grad == nullptr || scored[0].coef == 0.0) return loss;

  const std::size_t hn = p.shape().node_hidden;
  const auto sigma = p.sigma();
  auto dsigma = grad->sigma();
  std::vector<std::vector<double>> dphi(terms.size(), std::vector<double>(hn, 0.0));
  for (const auto& sp : scored) {
    if (sp.coef == 0.0) continue;
    const auto& phi1 = nodes[sp.slot1].phi;
    const auto& phi2 = nodes[sp.slot2].phi;
    for (std::size_t i = 0; i < hn; ++i) {
      dsigma[i] += sp.coef * phi1[i] * phi2[i];
      dphi[sp.slot1][i] += sp.coef * sigma[i] * phi2[i];
      dphi[sp.slot2][i] += sp.coef * sigma[i] * phi1[i];
    }
    pair_backward(p, sp.act, sp.coef, *grad);
  }
  for (std::size_t i = 0; i < terms.size(); ++i) node_backward(p, nodes[i], dphi[i], *grad);
  return loss;
}

}  // namespace

double score(const ModelParams& params, std::span<const double> f1, std::span<const double> f2,
             std::span<const double> g12) {
  check_shapes(params, f1.size(), f2.size(), g12.size());
  NodeActivation a1, a2;
  PairActivation pa;
  node_forward(params, f1, Mode::kInfer, 0.0, nullptr, a1);
  node_forward(params, f2, Mode::kInfer, 0.0, nullptr, a2);
  pair_forward(params, g12, Mode::kInfer, 0.0, nullptr, pa);
  return combine(params, a1.phi, a2.phi, pa.z2);
}

double score(const ModelParams& params, std::span<const double> f1, std::span<const double> f2,
             std::span<const double> g12, Mode mode, const DropoutRates& rates, Rng& rng) {
  check_shapes(params, f1.size(), f2.size(), g12.size());
  NodeActivation a1, a2;
  PairActivation pa;
  node_forward(params, f1, mode, rates.node, &rng, a1);
  node_forward(params, f2, mode, rates.node, &rng, a2);
  pair_forward(params, g12, mode, rates.pair, &rng, pa);
  return combine(params, a1.phi, a2.phi, pa.z2);
}

double contrastive_loss(const ModelParams& params, std::span<const TrainingExample> examples,
                        const ModelInputs& inputs) {
  double loss = 0.0;
  for (const auto& ex : examples) {
    loss += process_example(params, ex, inputs, Mode::kInfer, {}, nullptr, nullptr, nullptr);
  }
  return loss;
}

LossAndGradient loss_and_gradient(const ModelParams& params, std::span<const TrainingExample> examples,
                                  const ModelInputs& inputs, Mode mode, const DropoutRates& rates,
                                  Rng* rng) {
  if (mode == Mode::kTrain && rng == nullptr && (rates.node > 0.0 || rates.pair > 0.0)) {
    throw Error("train-mode dropout needs an rng");
  }
  if (inputs.node_dim() != params.shape().node_dim || inputs.pair_dim() != params.shape().pair_dim) {
    throw ValidationError("model inputs do not match the model shape");
  }
  LossAndGradient out{0.0, ModelParams(params.shape()), 0};
  for (const auto& ex : examples) {
    out.loss += process_example(params, ex, inputs, mode, rates, rng, &out.gradient, &out.active_hinges);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (negative_ratio < 1) throw ValidationError("negative ratio L must be at least 1");
  if (batch_size < 1) throw ValidationError("batch size must be positive");
  if (!(node_dropout >= 0.0 && node_dropout < 1.0) || !(pair_dropout >= 0.0 && pair_dropout < 1.0)) {
    throw ValidationError("dropout rates must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (node_hidden < 1) throw ValidationError("node hidden size must be positive");
}

NegativeSampler::NegativeSampler(const SeedPairSet& seeds, std::span<const TermId> pool, CorruptSlot slot)
    : seeds_(seeds), slot_(slot), pool_(pool.begin(), pool.end()) {
  if (pool_.empty()) pool_ = seeds.terms();
  std::sort(pool_.begin(), pool_.end());
  pool_.erase(std::unique(pool_.begin(), pool_.end()), pool_.end());
  for (const auto& p : seeds.pairs()) anchors_.push_back(slot_ == CorruptSlot::kHyponym ? p.hypernym : p.hyponym);
  std::sort(anchors_.begin(), anchors_.end());
  anchors_.erase(std::unique(anchors_.begin(), anchors_.end()), anchors_.end());
  candidates_.resize(anchors_.size());
  for (std::size_t a = 0; a < anchors_.size(); ++a) {
    TermId anchor = anchors_[a];
    for (TermId t : pool_) {
      if (t == anchor) continue;
      bool in_seeds = slot_ == CorruptSlot::kHyponym ? seeds.contains(anchor, t) : seeds.contains(t, anchor);
      if (!in_seeds) candidates_[a].push_back(t);
    }
  }
}

const std::vector<TermId>& NegativeSampler::candidates_for(TermId anchor) const {
  auto it = std::lower_bound(anchors_.begin(), anchors_.end(), anchor);
  if (it == anchors_.end() || *it != anchor) throw Error("negative sampler: unknown anchor");
  return candidates_[static_cast<std::size_t>(it - anchors_.begin())];
}

std::vector<TermPair> NegativeSampler::sample(const SeedPair& positive, std::size_t count, Rng& rng) const {
  TermId anchor = slot_ == CorruptSlot::kHyponym ? positive.hypernym : positive.hyponym;
  const auto& cands = candidates_for(anchor);
  std::vector<TermPair> out;
  if (cands.empty()) return out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TermId t = cands[uniform_index(rng, cands.size())];
    out.push_back(slot_ == CorruptSlot::kHyponym ? TermPair{anchor, t} : TermPair{t, anchor});
  }
  return out;
}

std::vector<TermPair> NegativeSampler::admissible_pairs() const {
  std::vector<TermPair> out;
  for (std::size_t a = 0; a < anchors_.size(); ++a) {
    for (TermId t : candidates_[a]) {
      out.push_back(slot_ == CorruptSlot::kHyponym ? TermPair{anchors_[a], t} : TermPair{t, anchors_[a]});
    }
  }
  return out;
}

TrainResult train(const SeedPairSet& seeds, const ModelInputs& inputs, const TrainConfig& config,
                  std::span<const TermId> pool) {
  config.validate();
  if (seeds.empty()) throw ValidationError("cannot train on an empty seed set");

  NegativeSampler sampler(seeds, pool, config.corrupt);
  std::vector<std::string> missing;
  auto check_pair = [&](TermPair p) {
    if (!inputs.pairwise().contains(p) && missing.size() < 10) {
      missing.push_back("(" + std::to_string(p.first) + "," + std::to_string(p.second) + ")");
    }
  };
  for (const auto& p : seeds.pairs()) check_pair({p.hypernym, p.hyponym});
  for (const auto& p : sampler.admissible_pairs()) check_pair(p);
  for (TermId t : seeds.terms()) {
    if (t >= inputs.num_terms()) missing.push_back("term " + std::to_string(t));
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
    throw ValidationError("feature coverage gap: missing features for " + list);
  }

  ModelShape shape{inputs.node_dim(), config.node_hidden, inputs.pair_dim()};
  TrainResult result{ModelParams::initialize(shape, config.seed), {}};
  Rng rng(config.seed ^ 0xD1B54A32D192ED03ull);
  const DropoutRates rates{config.node_dropout, config.pair_dropout};

  std::vector<std::size_t> order(seeds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<TrainingExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& pos = seeds.pairs()[order[i]];
        batch.push_back({TermPair{pos.hypernym, pos.hyponym}, sampler.sample(pos, config.negative_ratio, rng)});
      }
      auto lg = loss_and_gradient(result.params, batch, inputs, Mode::kTrain, rates, &rng);
      epoch_loss += lg.loss;
      const double step = config.learning_rate / static_cast<double>(batch.size());
      auto values = result.params.values();
      auto grad = lg.gradient.values();
      for (std::size_t k = 0; k < values.size(); ++k) values[k] -= step * grad[k];
    }
    result.loss_trace.push_back(epoch_loss);
  }
  for (double v : result.params.values()) {
    if (!std::isfinite(v)) throw Error("training diverged: non-finite parameter");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Gradient check

GradientCheckResult gradient_check(const ModelParams& params, std::span<const TrainingExample> examples,
                                   const ModelInputs& inputs, double epsilon) {
  auto analytic = loss_and_gradient(params, examples, inputs, Mode::kInfer);
  ModelParams probe = params;
  GradientCheckResult result;
  auto values = probe.values();
  auto grad = analytic.gradient.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double original = values[i];
    values[i] = original + epsilon;
    double up = contrastive_loss(probe, examples, inputs);
    values[i] = original - epsilon;
    double down = contrastive_loss(probe, examples, inputs);
    values[i] = original;
    double numeric = (up - down) / (2.0 * epsilon);
    double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-6});
    double rel = std::abs(grad[i] - numeric) / denom;
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = i;
    }
    ++result.checked;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Ranking

RankedPairList order_by_score(std::vector<RankedPair> scored, std::uint64_t tie_seed) {
  Rng rng(tie_seed);
  shuffle(scored, rng);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const RankedPair& a, const RankedPair& b) { return a.score > b.score; });
  return scored;
}

RankedPairList rank_pairs(const ModelParams& params, std::span<const TermPair> candidates,
                          const ModelInputs& inputs, std::uint64_t tie_seed, std::size_t threads) {
  const auto& s = params.shape();
  if (inputs.node_dim() != s.node_dim || inputs.pair_dim() != s.pair_dim) {
    throw ValidationError("model inputs do not match the model shape");
  }
  // phi(f_t) once per distinct term.
  std::vector<TermId> terms;
  for (const auto& p : candidates) {
    terms.push_back(p.first);
    terms.push_back(p.second);
  }
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  std::vector<NodeActivation> phis(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    node_forward(params, inputs.node(terms[i]), Mode::kInfer, 0.0, nullptr, phis[i]);
  }
  auto phi_of = [&](TermId t) -> const std::vector<double>& {
    return phis[static_cast<std::size_t>(std::lower_bound(terms.begin(), terms.end(), t) - terms.begin())].phi;
  };

  std::vector<RankedPair> scored(candidates.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    PairActivation act;
    for (std::size_t i = begin; i < end; ++i) {
      pair_forward(params, inputs.pair(candidates[i]), Mode::kInfer, 0.0, nullptr, act);
      scored[i] = RankedPair{candidates[i],
                             combine(params, phi_of(candidates[i].first), phi_of(candidates[i].second), act.z2)};
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, candidates.size()));
  if (threads == 1) {
    work(0, candidates.size());
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (candidates.size() + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
      std::size_t begin = w * chunk, end = std::min(candidates.size(), begin + chunk);
      if (begin < end) workers.emplace_back(work, begin, end);
    }
    for (auto& t : workers) t.join();
  }
  return order_by_score(std::move(scored), tie_seed);
}

std::string serialize_ranked(const RankedPairList& ranked, const Vocabulary& vocab) {
  std::string out;
  for (const auto& r : ranked) {
    out += vocab[r.pair.first].surface + '\t' + vocab[r.pair.second].surface + '\t' + format_double(r.score) + '\n';
  }
  return out;
}

RankedPairList parse_ranked(std::string_view tsv, const Vocabulary& vocab, const std::string& where) {
  RankedPairList out;
  std::size_t line_no = 0;
  for (const auto& line : split(tsv, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    std::string loc = where + ":" + std::to_string(line_no);
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError(loc + ": expected hypernym, hyponym, score");
    auto t1 = vocab.find_surface(normalize_term(fields[0]));
    auto t2 = vocab.find_surface(normalize_term(fields[1]));
    if (!t1 || !t2) throw ValidationError(loc + ": term not in vocabulary");
    out.push_back(RankedPair{{*t1, *t2}, parse_double(fields[2], loc)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string serialize_checkpoint(const ModelParams& params, const std::string& layout_fingerprint,
                                 const TrainConfig& config) {
  json doc;
  doc["format"] = "hypermine-model";
  doc["version"] = 1;
  doc["shape"] = {{"d", params.shape().node_dim},
                  {"h_node", params.shape().node_hidden},
                  {"n", params.shape().pair_dim}};
  doc["layout_fingerprint"] = layout_fingerprint;
  doc["train_config"] = {{"negative_ratio", config.negative_ratio},
                         {"epochs", config.epochs},
                         {"batch_size", config.batch_size},
                         {"learning_rate", config.learning_rate},
                         {"seed", config.seed},
                         {"node_dropout", config.node_dropout},
                         {"pair_dropout", config.pair_dropout},
                         {"corrupt", config.corrupt == CorruptSlot::kHyponym ? "hyponym" : "hypernym"}};
  json blocks = json::object();
  for (std::size_t b = 0; b < ModelParams::kNumBlocks; ++b) {
    auto block = params.block(b);
    blocks[ModelParams::block_name(b)] = std::vector<double>(block.begin(), block.end());
  }
  doc["params"] = std::move(blocks);
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view json_text, const std::string& where) {
  try {
    json doc = json::parse(json_text);
    if (doc.at("format").get<std::string>() != "hypermine-model") throw ParseError(where + ": not a model checkpoint");
    if (doc.at("version").get<int>() != 1) throw ParseError(where + ": unsupported checkpoint version");
    ModelShape shape{doc.at("shape").at("d").get<std::size_t>(), doc.at("shape").at("h_node").get<std::size_t>(),
                     doc.at("shape").at("n").get<std::size_t>()};
    Checkpoint cp{ModelParams(shape), doc.at("layout_fingerprint").get<std::string>()};
    for (std::size_t b = 0; b < ModelParams::kNumBlocks; ++b) {
      auto values = doc.at("params").at(ModelParams::block_name(b)).get<std::vector<double>>();
      auto block = cp.params.block(b);
      if (values.size() != block.size()) {
        throw ParseError(where + ": parameter block " + ModelParams::block_name(b) + " has the wrong size");
      }
      for (double v : values) {
        if (!std::isfinite(v)) throw ParseError(where + ": non-finite parameter");
      }
      std::copy(values.begin(), values.end(), block.begin());
    }
    return cp;
  } catch (const json::exception& ex) {
    throw ParseError(where + ": " + ex.what());
  }
}

}  // namespace hypermine
