#include "embedlayout/neural.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "embedlayout/metrics.hpp"
#include "embedlayout/rng.hpp"
#include "io_util.hpp"

namespace embedlayout {

namespace {

double normal(Rng& rng) {
  // Box-Muller; u1 in (0, 1].
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void validate(const MlpConfig& cfg) {
  if (cfg.input_dim == 0 || cfg.hidden_width == 0) {
    throw std::invalid_argument("MlpConfig: input_dim and hidden_width must be positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw std::invalid_argument("MlpConfig: dropout must lie in [0, 1)");
  }
  if (!(cfg.norm_momentum >= 0.0 && cfg.norm_momentum <= 1.0)) {
    throw std::invalid_argument("MlpConfig: norm_momentum must lie in [0, 1]");
  }
  if (!(cfg.norm_epsilon > 0.0)) throw std::invalid_argument("MlpConfig: norm_epsilon must be positive");
}

}  // namespace

MlpModel::MlpModel(const MlpConfig& cfg) : cfg_(cfg) {
  validate(cfg);
  const std::size_t h = cfg.hidden_width;
  const std::size_t total = h * cfg.input_dim + h + cfg.depth * (h * h + 3 * h) + 2 * h + 2;
  params_.assign(total, 0.0);
  stats_.assign(2 * h * cfg.depth, 0.0);
  for (std::size_t k = 0; k < cfg.depth; ++k) running_var(k).setOnes();
}

MlpModel MlpModel::zeros(const MlpConfig& cfg) { return MlpModel(cfg); }

MlpModel::MlpModel(const MlpConfig& cfg, std::uint64_t seed) : MlpModel(cfg) {
  Rng rng(seed);
  const double in_std = std::sqrt(2.0 / static_cast<double>(cfg.input_dim));
  const double hidden_std = std::sqrt(2.0 / static_cast<double>(cfg.hidden_width));
  const double out_std = std::sqrt(1.0 / static_cast<double>(cfg.hidden_width));
  for (double& w : input_weight().reshaped()) w = in_std * normal(rng);
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    for (double& w : block_weight(k).reshaped()) w = hidden_std * normal(rng);
    block_scale(k).setOnes();
  }
  for (double& w : output_weight().reshaped()) w = out_std * normal(rng);
}

std::size_t MlpModel::block_offset(std::size_t k) const {
  if (k >= cfg_.depth) throw std::out_of_range("block index out of range");
  const std::size_t h = cfg_.hidden_width;
  return h * cfg_.input_dim + h + k * (h * h + 3 * h);
}

#define EMBEDLAYOUT_ACCESSORS(Qual, MatT, VecT, store)                                         \
  MatT MlpModel::input_weight() Qual {                                                        \
    return MatT(store.data(), cfg_.hidden_width, cfg_.input_dim);                              \
  }                                                                                           \
  VecT MlpModel::input_bias() Qual {                                                          \
    return VecT(store.data() + cfg_.hidden_width * cfg_.input_dim, cfg_.hidden_width);         \
  }                                                                                           \
  MatT MlpModel::block_weight(std::size_t k) Qual {                                           \
    return MatT(store.data() + block_offset(k), cfg_.hidden_width, cfg_.hidden_width);         \
  }                                                                                           \
  VecT MlpModel::block_bias(std::size_t k) Qual {                                             \
    const std::size_t h = cfg_.hidden_width;                                                  \
    return VecT(store.data() + block_offset(k) + h * h, h);                                    \
  }                                                                                           \
  VecT MlpModel::block_scale(std::size_t k) Qual {                                            \
    const std::size_t h = cfg_.hidden_width;                                                  \
    return VecT(store.data() + block_offset(k) + h * h + h, h);                                \
  }                                                                                           \
  VecT MlpModel::block_shift(std::size_t k) Qual {                                            \
    const std::size_t h = cfg_.hidden_width;                                                  \
    return VecT(store.data() + block_offset(k) + h * h + 2 * h, h);                            \
  }                                                                                           \
  MatT MlpModel::output_weight() Qual {                                                       \
    return MatT(store.data() + store.size() - 2 * cfg_.hidden_width - 2, 2, cfg_.hidden_width); \
  }                                                                                           \
  VecT MlpModel::output_bias() Qual { return VecT(store.data() + store.size() - 2, 2); }

EMBEDLAYOUT_ACCESSORS(const, MlpModel::ConstMatrix, MlpModel::ConstVector, params_)
EMBEDLAYOUT_ACCESSORS(, MlpModel::Matrix, MlpModel::Vector, params_)
#undef EMBEDLAYOUT_ACCESSORS

MlpModel::ConstVector MlpModel::running_mean(std::size_t k) const {
  if (k >= cfg_.depth) throw std::out_of_range("block index out of range");
  return ConstVector(stats_.data() + 2 * k * cfg_.hidden_width, cfg_.hidden_width);
}
MlpModel::ConstVector MlpModel::running_var(std::size_t k) const {
  if (k >= cfg_.depth) throw std::out_of_range("block index out of range");
  return ConstVector(stats_.data() + (2 * k + 1) * cfg_.hidden_width, cfg_.hidden_width);
}
MlpModel::Vector MlpModel::running_mean(std::size_t k) {
  if (k >= cfg_.depth) throw std::out_of_range("block index out of range");
  return Vector(stats_.data() + 2 * k * cfg_.hidden_width, cfg_.hidden_width);
}
MlpModel::Vector MlpModel::running_var(std::size_t k) {
  if (k >= cfg_.depth) throw std::out_of_range("block index out of range");
  return Vector(stats_.data() + (2 * k + 1) * cfg_.hidden_width, cfg_.hidden_width);
}

bool MlpModel::all_finite() const noexcept {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(params_.begin(), params_.end(), finite) &&
         std::all_of(stats_.begin(), stats_.end(), finite);
}

namespace {

// Inference path. With running statistics fixed, batch norm is a per-row
// affine map, so each block collapses to relu(a * (W h) + c) with a and c
// folded once per block. Same arithmetic as the cached path up to rounding.
Eigen::MatrixXd forward_eval(const MlpModel& model, const Eigen::MatrixXd& features) {
  const auto& cfg = model.config();
  Eigen::MatrixXd h(cfg.hidden_width, features.cols());
  h.noalias() = model.input_weight() * features;
  h.colwise() += model.input_bias();
  Eigen::MatrixXd z(h.rows(), h.cols());
  Eigen::ArrayXd a(h.rows()), c(h.rows());
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    if (cfg.batch_norm) {
      const Eigen::ArrayXd inv_std = (model.running_var(k).array() + cfg.norm_epsilon).rsqrt();
      a = model.block_scale(k).array() * inv_std;
      c = model.block_shift(k).array() +
          a * (model.block_bias(k).array() - model.running_mean(k).array());
    } else {
      a = model.block_scale(k).array();
      c = model.block_shift(k).array() + a * model.block_bias(k).array();
    }
    z.noalias() = model.block_weight(k) * h;
    h.array() += ((z.array().colwise() * a).colwise() + c).cwiseMax(0.0);
  }
  Eigen::MatrixXd out(2, h.cols());
  out.noalias() = model.output_weight() * h;
  out.colwise() += model.output_bias();
  return out;
}

}  // namespace

Eigen::MatrixXd mlp_forward(const MlpModel& model, const Eigen::MatrixXd& features,
                            ForwardMode mode, std::uint64_t dropout_seed, ForwardCache* cache) {
  const auto& cfg = model.config();
  if (static_cast<std::size_t>(features.rows()) != cfg.input_dim) {
    throw std::invalid_argument("mlp_forward: feature dimension " + std::to_string(features.rows()) +
                                " does not match model input " + std::to_string(cfg.input_dim));
  }
  const bool train = mode == ForwardMode::train;
  const Eigen::Index n = features.cols();
  if (!train && cache == nullptr) return forward_eval(model, features);
  const double keep = 1.0 - cfg.dropout;
  Rng rng(dropout_seed);

  if (cache) {
    *cache = ForwardCache{};
    cache->input = features;
  }
  Eigen::MatrixXd h = model.input_weight() * features;
  h.colwise() += model.input_bias();
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    Eigen::MatrixXd z = model.block_weight(k) * h;
    z.colwise() += model.block_bias(k);
    Eigen::VectorXd mean, var;
    if (!cfg.batch_norm) {
      mean = Eigen::VectorXd::Zero(z.rows());
      var = Eigen::VectorXd::Ones(z.rows());
    } else if (train) {
      mean = z.rowwise().mean();
      var = (z.colwise() - mean).array().square().rowwise().mean();
    } else {
      mean = model.running_mean(k);
      var = model.running_var(k);
    }
    const Eigen::VectorXd inv_std = cfg.batch_norm
                                        ? Eigen::VectorXd((var.array() + cfg.norm_epsilon).rsqrt())
                                        : Eigen::VectorXd::Ones(z.rows());
    Eigen::MatrixXd zhat = (z.colwise() - mean).array().colwise() * inv_std.array();
    Eigen::MatrixXd pre = (zhat.array().colwise() * model.block_scale(k).array()).colwise() +
                          model.block_shift(k).array();
    Eigen::MatrixXd act = pre.cwiseMax(0.0);
    Eigen::MatrixXd mask;
    if (train && cfg.dropout > 0.0) {
      mask.resize(act.rows(), n);
      for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < act.rows(); ++r) mask(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
      }
      act.array() *= mask.array();
    }
    if (cache) {
      cache->block_inputs.push_back(h);
      cache->normalized.push_back(std::move(zhat));
      cache->pre_activation.push_back(std::move(pre));
      cache->masks.push_back(std::move(mask));
      cache->batch_mean.push_back(std::move(mean));
      cache->batch_var.push_back(std::move(var));
      cache->inv_std.push_back(inv_std);
    }
    h += act;
  }
  Eigen::MatrixXd out = model.output_weight() * h;
  out.colwise() += model.output_bias();
  if (cache) {
    cache->block_inputs.push_back(std::move(h));
    cache->valid = train;
  }
  return out;
}

Layout layout_from_columns(const Eigen::MatrixXd& positions) {
  Layout x(static_cast<std::size_t>(positions.cols()));
  for (Eigen::Index i = 0; i < positions.cols(); ++i) {
    x[static_cast<std::size_t>(i)] = {positions(0, i), positions(1, i)};
  }
  return x;
}

Layout mlp_forward(const MlpModel& model, const EmbeddingMatrix& embeddings, ForwardMode mode,
                   std::uint64_t dropout_seed) {
  if (embeddings.dim != model.config().input_dim) {
    throw std::invalid_argument("mlp_forward: embedding dimension does not match model input");
  }
  return layout_from_columns(mlp_forward(model, node_features(embeddings), mode, dropout_seed));
}

std::vector<double> mlp_backward(const MlpModel& model, const ForwardCache& cache,
                                 const Eigen::MatrixXd& upstream) {
  if (!cache.valid) throw std::logic_error("mlp_backward: no cached train-mode forward pass");
  const auto& cfg = model.config();
  const Eigen::Index n = cache.input.cols();
  if (upstream.rows() != 2 || upstream.cols() != n) {
    throw std::invalid_argument("mlp_backward: upstream gradient must be 2 x N");
  }
  // Gradients land in a scratch model so the accessor layout is reused.
  MlpModel grads = MlpModel::zeros(cfg);

  grads.output_weight() = upstream * cache.block_inputs.back().transpose();
  grads.output_bias() = upstream.rowwise().sum();
  Eigen::MatrixXd dh = model.output_weight().transpose() * upstream;
  const double nd = static_cast<double>(n);

  for (std::size_t k = cfg.depth; k-- > 0;) {
    Eigen::MatrixXd dact = dh;
    if (cache.masks[k].size() != 0) dact.array() *= cache.masks[k].array();
    Eigen::MatrixXd dpre = (cache.pre_activation[k].array() > 0.0).select(dact, 0.0);
    const auto& zhat = cache.normalized[k];
    grads.block_scale(k) = (dpre.array() * zhat.array()).rowwise().sum();
    grads.block_shift(k) = dpre.rowwise().sum();
    Eigen::MatrixXd dzhat = dpre.array().colwise() * model.block_scale(k).array();
    Eigen::MatrixXd dz;
    if (cfg.batch_norm) {
      const Eigen::VectorXd sum_dzhat = dzhat.rowwise().sum();
      const Eigen::VectorXd sum_dzhat_zhat = (dzhat.array() * zhat.array()).rowwise().sum();
      dz = ((nd * dzhat).colwise() - sum_dzhat).array() -
           zhat.array().colwise() * sum_dzhat_zhat.array();
      dz.array().colwise() *= cache.inv_std[k].array() / nd;
    } else {
      dz = std::move(dzhat);
    }
    grads.block_weight(k) = dz * cache.block_inputs[k].transpose();
    grads.block_bias(k) = dz.rowwise().sum();
    dh += model.block_weight(k).transpose() * dz;
  }
  grads.input_weight() = dh * cache.input.transpose();
  grads.input_bias() = dh.rowwise().sum();
  auto flat = grads.parameters();
  return {flat.begin(), flat.end()};
}

void update_running_stats(MlpModel& model, const ForwardCache& cache) {
  if (!cache.valid) throw std::logic_error("update_running_stats: no cached train-mode forward pass");
  const auto& cfg = model.config();
  if (!cfg.batch_norm) return;
  const double n = static_cast<double>(cache.input.cols());
  const double correction = n > 1 ? n / (n - 1.0) : 1.0;
  const double m = cfg.norm_momentum;
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    model.running_mean(k) = m * model.running_mean(k) + (1.0 - m) * cache.batch_mean[k];
    model.running_var(k) = m * model.running_var(k) + (1.0 - m) * correction * cache.batch_var[k];
  }
}

AdamOptimizer::AdamOptimizer(std::size_t size, double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size, 0.0), v_(size, 0.0) {
  if (!(lr > 0.0)) throw std::invalid_argument("Adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam: betas must lie in [0, 1)");
  }
}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("Adam: parameter/gradient size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

Eigen::MatrixXd node_features(const EmbeddingMatrix& e) {
  Eigen::MatrixXd features(e.dim, e.n);
  for (std::size_t i = 0; i < e.n; ++i) {
    const auto row = e.center_row(i);
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw ZeroVectorError(i);
    for (std::size_t k = 0; k < e.dim; ++k) features(k, i) = row[k] / norm;
  }
  const Eigen::VectorXd mean = features.rowwise().mean();
  features.colwise() -= mean;
  const Eigen::MatrixXd cov = features * features.transpose() / static_cast<double>(e.n);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues come out ascending; put the dominant axis first.
  const Eigen::MatrixXd axes = eig.eigenvectors().rowwise().reverse();
  Eigen::MatrixXd coords = axes.transpose() * features;
  for (Eigen::Index k = 0; k < coords.rows(); ++k) {
    const double skew = coords.row(k).array().cube().sum();
    Eigen::Index arg = 0;
    coords.row(k).cwiseAbs().maxCoeff(&arg);
    const bool flip = std::abs(skew) > 1e-12 ? skew < 0.0 : coords(k, arg) < 0.0;
    if (flip) coords.row(k) *= -1.0;
  }
  return coords;
}

Eigen::MatrixXd sns_position_gradient(const Eigen::MatrixXd& positions, const PairSet& pairs) {
  const Layout x = layout_from_columns(positions);
  const double a = alpha_min(x, pairs);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(2, positions.cols());
  for (const auto& t : pairs.pairs) {
    const double dx = x[t.i].x - x[t.j].x;
    const double dy = x[t.i].y - x[t.j].y;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len == 0.0) continue;
    const double c = 2.0 * t.weight * (a * len - t.target) * a / len;
    grad(0, t.i) += c * dx;
    grad(1, t.i) += c * dy;
    grad(0, t.j) -= c * dx;
    grad(1, t.j) -= c * dy;
  }
  return grad;
}

PreparedGraph prepare_graph(Graph g, const WalkConfig& walks, const SkipGramConfig& skipgram,
                            std::uint64_t seed) {
  PreparedGraph out;
  const auto corpus = generate_walks(g, walks, derive_seed(seed, {1}));
  const auto emb = train_skipgram(corpus, g.node_count(), skipgram, derive_seed(seed, {2}));
  out.features = node_features(emb);
  out.pairs = admissible_pairs(bfs_all_pairs(g));
  out.graph = std::move(g);
  return out;
}

double mean_validation_sns(const MlpModel& model, std::span<const PreparedGraph> graphs) {
  if (graphs.empty()) throw std::invalid_argument("mean_validation_sns: no graphs");
  double total = 0.0;
  for (const auto& pg : graphs) {
    const auto pos = mlp_forward(model, pg.features, ForwardMode::eval);
    total += sns(layout_from_columns(pos), pg.pairs);
  }
  return total / static_cast<double>(graphs.size());
}

double train_step(MlpModel& model, AdamOptimizer& adam, std::span<const PreparedGraph* const> batch,
                  std::uint64_t dropout_seed) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  Eigen::Index total_nodes = 0;
  for (const auto* pg : batch) total_nodes += pg->features.cols();
  Eigen::MatrixXd features(model.config().input_dim, total_nodes);
  Eigen::Index col = 0;
  for (const auto* pg : batch) {
    features.middleCols(col, pg->features.cols()) = pg->features;
    col += pg->features.cols();
  }
  ForwardCache cache;
  const Eigen::MatrixXd out = mlp_forward(model, features, ForwardMode::train, dropout_seed, &cache);
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(2, total_nodes);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  col = 0;
  for (const auto* pg : batch) {
    const auto cols = pg->features.cols();
    const Eigen::MatrixXd pos = out.middleCols(col, cols);
    loss += sns(layout_from_columns(pos), pg->pairs) * inv_batch;
    upstream.middleCols(col, cols) = sns_position_gradient(pos, pg->pairs) * inv_batch;
    col += cols;
  }
  if (!std::isfinite(loss)) throw std::runtime_error("train_step: non-finite loss");
  const auto grads = mlp_backward(model, cache, upstream);
  adam.step(model.parameters(), grads);
  update_running_stats(model, cache);
  return loss;
}

TrainResult train_model(const GraphFamily& family, const TrainConfig& cfg, std::uint64_t seed) {
  if (family.node_sizes.empty() || family.edge_probabilities.empty()) {
    throw std::invalid_argument("train_model: empty graph family");
  }
  // Fails fast on bad optimizer settings before any graph is embedded.
  AdamOptimizer(1, cfg.learning_rate, cfg.beta1, cfg.beta2);
  if (cfg.steps == 0 || cfg.eval_every == 0 || cfg.steps < cfg.eval_every) {
    throw std::invalid_argument("train_model: need steps >= eval_every >= 1");
  }
  if (cfg.graphs_per_step == 0 || cfg.train_graphs == 0 || cfg.validation_graphs == 0) {
    throw std::invalid_argument("train_model: graph counts must be positive");
  }
  if (cfg.model.input_dim != cfg.skipgram.dim) {
    throw std::invalid_argument("train_model: model input_dim must equal the embedding dimension");
  }

  auto make_pool = [&](std::size_t count, std::uint64_t stream) {
    std::vector<PreparedGraph> pool;
    pool.reserve(count);
    Rng pick(derive_seed(seed, {stream}));
    for (std::size_t g = 0; g < count; ++g) {
      const auto n = family.node_sizes[pick.below(family.node_sizes.size())];
      const auto p = family.edge_probabilities[pick.below(family.edge_probabilities.size())];
      const auto graph_seed = derive_seed(seed, {stream, g});
      pool.push_back(prepare_graph(generate_er(n, p, graph_seed), cfg.walks, cfg.skipgram,
                                   derive_seed(graph_seed, {7})));
    }
    return pool;
  };
  const auto train_pool = make_pool(cfg.train_graphs, 100);
  const auto val_pool = make_pool(cfg.validation_graphs, 200);

  TrainResult result{MlpModel(cfg.model, derive_seed(seed, {300})), {}, 0, 0};
  MlpModel model = result.model;
  AdamOptimizer adam(model.parameter_count(), cfg.learning_rate, cfg.beta1, cfg.beta2);
  Rng sampler(derive_seed(seed, {400}));
  std::vector<const PreparedGraph*> batch(cfg.graphs_per_step);
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (auto& slot : batch) slot = &train_pool[sampler.below(train_pool.size())];
    const double loss = train_step(model, adam, batch, derive_seed(seed, {500, step}));
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_model: non-finite loss at step " + std::to_string(step));
    }
    result.steps_run = step;
    if (step % cfg.eval_every == 0) {
      const double val = mean_validation_sns(model, val_pool);
      result.trace.push_back({step, val});
      if (val < best) {
        best = val;
        result.model = model;
        result.best_step = step;
        stale = 0;
      } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
        break;
      }
    }
  }
  return result;
}

std::string format_validation_trace(std::span<const ValidationPoint> trace) {
  std::string out = "step,mean_val_sns\n";
  for (const auto& p : trace) {
    out += std::to_string(p.step) + "," + detail::format_double(p.mean_sns) + "\n";
  }
  return out;
}

Prediction predict_with_timing(const MlpModel& model, const Graph& g, const WalkConfig& walks,
                               const SkipGramConfig& skipgram, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };
  const auto t0 = clock::now();
  const auto corpus = generate_walks(g, walks, derive_seed(seed, {1}));
  const auto emb = train_skipgram(corpus, g.node_count(), skipgram, derive_seed(seed, {2}));
  const Eigen::MatrixXd features = node_features(emb);
  const auto t1 = clock::now();
  const Eigen::MatrixXd pos = mlp_forward(model, features, ForwardMode::eval);
  const auto t2 = clock::now();
  Prediction out{layout_from_columns(pos), {}};
  const auto t3 = clock::now();
  out.timing.embed_time = seconds(t1 - t0);
  out.timing.forward_time = seconds(t2 - t1);
  out.timing.total_time = seconds(t3 - t0);
  return out;
}

namespace {

constexpr char kMagic[8] = {'E', 'M', 'B', 'L', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t start) : bytes_(bytes), pos_(start) {}
  std::uint64_t u64(int width = 8) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) {
      throw std::runtime_error("model checkpoint truncated");
    }
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * b);
    }
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_;
};

// Parameter and statistics segments in declaration order.
template <typename Model, typename Fn>
void for_each_segment(Model& model, Fn&& fn) {
  const auto& cfg = model.config();
  const std::size_t h = cfg.hidden_width;
  auto params = model.parameters();
  auto stats = model.running_stats();
  std::size_t p = 0;
  auto take = [&](std::size_t count) {
    fn(params.subspan(p, count));
    p += count;
  };
  take(h * cfg.input_dim + h);
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    take(h * h + 3 * h);
    fn(stats.subspan(2 * k * h, 2 * h));
  }
  take(2 * h + 2);
}

}  // namespace

std::string serialize_model(const MlpModel& model) {
  const auto& cfg = model.config();
  std::string out(kMagic, sizeof kMagic);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((kVersion >> (8 * b)) & 0xff));
  put_u64(out, cfg.input_dim);
  put_u64(out, cfg.hidden_width);
  put_u64(out, cfg.depth);
  out.push_back(cfg.batch_norm ? 1 : 0);
  put_f64(out, cfg.dropout);
  put_f64(out, cfg.norm_momentum);
  put_f64(out, cfg.norm_epsilon);
  for_each_segment(model, [&](std::span<const double> seg) {
    for (double v : seg) put_f64(out, v);
  });
  return out;
}

MlpModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("not a model checkpoint");
  }
  Reader in(bytes, sizeof kMagic);
  const auto version = in.u64(4);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  MlpConfig cfg;
  cfg.input_dim = in.u64();
  cfg.hidden_width = in.u64();
  cfg.depth = in.u64();
  cfg.batch_norm = in.u64(1) != 0;
  cfg.dropout = in.f64();
  cfg.norm_momentum = in.f64();
  cfg.norm_epsilon = in.f64();
  if (cfg.input_dim > (1u << 20) || cfg.hidden_width > (1u << 16) || cfg.depth > (1u << 16)) {
    throw std::runtime_error("checkpoint dimensions out of range");
  }
  MlpModel model = MlpModel::zeros(cfg);
  for_each_segment(model, [&](std::span<double> seg) {
    for (double& v : seg) v = in.f64();
  });
  if (!in.done()) throw std::runtime_error("trailing bytes after checkpoint");
  return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_model(model));
}

MlpModel load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file(path));
}

}  // namespace embedlayout
