#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedlayout/embed.hpp"
#include "embedlayout/graph.hpp"
#include "embedlayout/layout.hpp"
#include "embedlayout/walks.hpp"

namespace embedlayout {

struct MlpConfig {
  std::size_t input_dim = 8;
  std::size_t hidden_width = 64;
  std::size_t depth = 8;  ///< residual blocks
  double dropout = 0.3;
  double norm_momentum = 0.9;  ///< running = momentum * running + (1 - momentum) * batch
  double norm_epsilon = 1e-5;
  bool batch_norm = true;  ///< false turns every normalization into the identity

  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

enum class ForwardMode { train, eval };

/// Per-node residual MLP:
///   h0 = W_in x + b_in
///   h_{k+1} = h_k + dropout(relu(bn_k(W_k h_k + b_k)))
///   y = W_out h_depth + b_out
/// Trainable parameters live in one flat vector (so the optimizer and the
/// checkpoint writer can walk them uniformly); running normalization
/// statistics live in a second one.
class MlpModel {
 public:
  using Matrix = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrix = Eigen::Map<const Eigen::MatrixXd>;
  using Vector = Eigen::Map<Eigen::VectorXd>;
  using ConstVector = Eigen::Map<const Eigen::VectorXd>;

  /// He-initialized affine weights, zero biases, unit scale, zero shift.
  MlpModel(const MlpConfig& cfg, std::uint64_t seed);
  /// Every parameter zero; running statistics at mean 0, variance 1.
  static MlpModel zeros(const MlpConfig& cfg);

  const MlpConfig& config() const noexcept { return cfg_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> running_stats() noexcept { return stats_; }
  std::span<const double> running_stats() const noexcept { return stats_; }

  ConstMatrix input_weight() const;
  ConstVector input_bias() const;
  ConstMatrix block_weight(std::size_t k) const;
  ConstVector block_bias(std::size_t k) const;
  ConstVector block_scale(std::size_t k) const;
  ConstVector block_shift(std::size_t k) const;
  ConstVector running_mean(std::size_t k) const;
  ConstVector running_var(std::size_t k) const;
  ConstMatrix output_weight() const;
  ConstVector output_bias() const;

  Matrix input_weight();
  Vector input_bias();
  Matrix block_weight(std::size_t k);
  Vector block_bias(std::size_t k);
  Vector block_scale(std::size_t k);
  Vector block_shift(std::size_t k);
  Vector running_mean(std::size_t k);
  Vector running_var(std::size_t k);
  Matrix output_weight();
  Vector output_bias();

  bool all_finite() const noexcept;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  explicit MlpModel(const MlpConfig& cfg);
  std::size_t block_offset(std::size_t k) const;

  MlpConfig cfg_;
  // Eigen's vectorized kernels pick their code path from the address
  // alignment, so a fixed alignment keeps results bit-reproducible.
  using Storage = std::vector<double, Eigen::aligned_allocator<double>>;
  Storage params_;
  Storage stats_;
};

/// Values kept by a train-mode forward pass for mlp_backward and for the
/// running-statistics update.
struct ForwardCache {
  Eigen::MatrixXd input;                      ///< D x N
  std::vector<Eigen::MatrixXd> block_inputs;  ///< H x N, one per block, plus the final hidden state
  std::vector<Eigen::MatrixXd> normalized;    ///< zhat per block
  std::vector<Eigen::MatrixXd> pre_activation;
  std::vector<Eigen::MatrixXd> masks;         ///< 0 or 1/(1 - dropout)
  std::vector<Eigen::VectorXd> batch_mean;
  std::vector<Eigen::VectorXd> batch_var;
  std::vector<Eigen::VectorXd> inv_std;
  bool valid = false;
};

/// Forward pass over node feature columns (D x N) -> positions (2 x N).
/// Train mode normalizes with batch statistics and draws dropout masks from
/// `dropout_seed`; eval mode uses running statistics and no dropout. The
/// model is not modified.
Eigen::MatrixXd mlp_forward(const MlpModel& model, const Eigen::MatrixXd& features,
                            ForwardMode mode, std::uint64_t dropout_seed = 0,
                            ForwardCache* cache = nullptr);

/// Same, on node_features(embeddings).
Layout mlp_forward(const MlpModel& model, const EmbeddingMatrix& embeddings, ForwardMode mode,
                   std::uint64_t dropout_seed = 0);

/// Reverse-mode gradient of sum(upstream .* output) w.r.t. every trainable
/// parameter, in the layout of MlpModel::parameters(). Requires the cache of
/// a train-mode forward pass.
std::vector<double> mlp_backward(const MlpModel& model, const ForwardCache& cache,
                                 const Eigen::MatrixXd& upstream);

/// Folds the batch statistics of a train-mode pass into the running ones.
void update_running_stats(MlpModel& model, const ForwardCache& cache);

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  void step(std::span<double> params, std::span<const double> grads);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

/// Node features fed to the network, one column per node: center vectors
/// scaled to unit length, centred on the graph mean and expressed in the
/// graph's principal axes (largest variance first, each axis signed so its
/// third moment is nonnegative). This removes the arbitrary rotation that
/// skip-gram leaves on every graph.
Eigen::MatrixXd node_features(const EmbeddingMatrix& e);

/// Gradient of the scale-normalized stress of `positions` (2 x N) w.r.t. the
/// positions, with alpha_min held fixed. Because alpha_min minimizes the
/// stress over the scale, this is also the total derivative.
Eigen::MatrixXd sns_position_gradient(const Eigen::MatrixXd& positions, const PairSet& pairs);

Layout layout_from_columns(const Eigen::MatrixXd& positions);

struct GraphFamily {
  std::vector<std::size_t> node_sizes{18, 19, 21, 22};
  std::vector<double> edge_probabilities{0.5};
};

struct TrainConfig {
  MlpConfig model;
  WalkConfig walks;
  SkipGramConfig skipgram;
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t steps = 10000;
  std::size_t graphs_per_step = 128;
  std::size_t eval_every = 1000;
  std::size_t patience = 3;  ///< evaluations without improvement before stopping; 0 disables
  std::size_t train_graphs = 512;
  std::size_t validation_graphs = 64;
};

struct ValidationPoint {
  std::size_t step = 0;
  double mean_sns = 0.0;
};

struct TrainResult {
  MlpModel model;  ///< best checkpoint by validation SNS
  std::vector<ValidationPoint> trace;
  std::size_t steps_run = 0;
  std::size_t best_step = 0;
};

/// A graph prepared for the network: features and shortest-path pairs.
struct PreparedGraph {
  Graph graph{1, {}};
  Eigen::MatrixXd features;
  PairSet pairs;
};

PreparedGraph prepare_graph(Graph g, const WalkConfig& walks, const SkipGramConfig& skipgram,
                            std::uint64_t seed);

/// Mean SNS of eval-mode predictions.
double mean_validation_sns(const MlpModel& model, std::span<const PreparedGraph> graphs);

/// One Adam step on the mean train-mode SNS of `batch`. Returns that loss.
double train_step(MlpModel& model, AdamOptimizer& adam, std::span<const PreparedGraph* const> batch,
                  std::uint64_t dropout_seed);

TrainResult train_model(const GraphFamily& family, const TrainConfig& cfg, std::uint64_t seed);

std::string format_validation_trace(std::span<const ValidationPoint> trace);

struct TimingBreakdown {
  double embed_time = 0.0;    ///< walks + skip-gram + feature extraction, seconds
  double forward_time = 0.0;  ///< network evaluation, seconds
  double total_time = 0.0;    ///< end to end, seconds
};

struct Prediction {
  Layout layout;
  TimingBreakdown timing;
};

/// Embeds `g` with the given walk and skip-gram settings and runs the model
/// in eval mode.
Prediction predict_with_timing(const MlpModel& model, const Graph& g, const WalkConfig& walks,
                               const SkipGramConfig& skipgram, std::uint64_t seed);

// Binary checkpoint: "EMBLMLP\0", u32 version, u64 input_dim, u64 width,
// u64 depth, u8 batch_norm, f64 dropout, f64 momentum, f64 epsilon, then
// every block of parameters and running statistics in declaration order as
// little-endian f64.
std::string serialize_model(const MlpModel& model);
MlpModel deserialize_model(const std::string& bytes);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace embedlayout
