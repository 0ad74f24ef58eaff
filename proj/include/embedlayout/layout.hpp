#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedlayout/embed.hpp"
#include "embedlayout/graph.hpp"
#include "embedlayout/walks.hpp"

namespace embedlayout {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Node positions in the plane, indexed by node id.
struct Layout {
  std::vector<Point> points;

  Layout() = default;
  explicit Layout(std::size_t n) : points(n) {}
  explicit Layout(std::vector<Point> pts) : points(std::move(pts)) {}

  std::size_t size() const noexcept { return points.size(); }
  Point& operator[](std::size_t i) { return points[i]; }
  const Point& operator[](std::size_t i) const { return points[i]; }
  bool all_finite() const noexcept;

  friend bool operator==(const Layout&, const Layout&) = default;
};

using Gradient = std::vector<Point>;

double distance(const Point& a, const Point& b) noexcept;

/// I.i.d. uniform positions in [0, 1]^2.
Layout random_layout(std::size_t n, std::uint64_t seed);

/// Targets closer than this are excluded from every stress sum.
inline constexpr double kMinTargetDistance = 1e-6;

/// One term weight * (|X_i - X_j| - target)^2 of a stress-like sum.
struct TargetPair {
  NodeId i = 0;
  NodeId j = 0;
  double target = 0.0;
  double weight = 0.0;
};

/// The admissible pairs of a target matrix, i < j, with w = target^-2.
/// Unreachable pairs and targets below kMinTargetDistance are dropped.
struct PairSet {
  std::size_t n = 0;
  std::vector<TargetPair> pairs;
};

PairSet admissible_pairs(const DistanceMatrix& d);
PairSet admissible_pairs(const DissimilarityMatrix& d);

/// sum w (|X_i - X_j| - target)^2 over the given terms.
double pair_stress(const Layout& x, std::span<const TargetPair> terms);
/// Adds the gradient of pair_stress into `grad`. A coincident pair
/// contributes nothing.
void accumulate_pair_gradient(const Layout& x, std::span<const TargetPair> terms, Gradient& grad,
                              double scale = 1.0);

/// Weighted stress with w_ij = d_ij^-2. Throws std::invalid_argument when the
/// target size differs from the layout size.
double stress_loss(const Layout& x, const PairSet& target);
double stress_loss(const Layout& x, const DistanceMatrix& target);
double stress_loss(const Layout& x, const DissimilarityMatrix& target);
Gradient stress_gradient(const Layout& x, const PairSet& target);
Gradient stress_gradient(const Layout& x, const DistanceMatrix& target);
Gradient stress_gradient(const Layout& x, const DissimilarityMatrix& target);

/// sum over edges of ((|X_i - X_j| - ell) / ell)^2.
double ideal_edge_length_loss(const Layout& x, const Graph& g, double ideal_length);
Gradient ideal_edge_length_gradient(const Layout& x, const Graph& g, double ideal_length);

enum class CriterionKind { cosine_stress, sp_stress, ideal_edge_length };

/// One additive term alpha_c * L_c of the layout objective. Every shipped
/// criterion is a weighted sum over pair terms, which is what the optimizer
/// samples from.
struct Criterion {
  CriterionKind kind = CriterionKind::sp_stress;
  double weight = 1.0;
  PairSet terms;

  static Criterion cosine_stress(const DissimilarityMatrix& d, double weight = 1.0);
  static Criterion sp_stress(const DistanceMatrix& d, double weight = 1.0);
  static Criterion ideal_edge_length(const Graph& g, double ideal_length, double weight = 1.0);

  /// Unweighted L_c.
  double loss(const Layout& x) const;
};

/// sum_c alpha_c L_c(x).
double composite_loss(std::span<const Criterion> criteria, const Layout& x);
Gradient composite_gradient(std::span<const Criterion> criteria, const Layout& x);

/// How optimize_layout turns a sampled batch into a position update.
enum class UpdateRule {
  /// Visit the batch terms in random order and take a gradient step on each
  /// one alone, capped so no term overshoots its target distance. The step
  /// anneals exponentially over the run (see final_step).
  pairwise,
  /// One step along the summed batch gradient, with each node's step divided
  /// by the curvature 2 * w of the sampled terms that touch it.
  gradient,
};

struct OptimizerConfig {
  UpdateRule rule = UpdateRule::pairwise;
  std::size_t iterations = 200;
  /// pairwise: fraction of its residual the most heavily weighted term
  /// corrects on the last iteration. The first iteration corrects every term
  /// fully.
  double final_step = 0.1;
  /// gradient: eta_t = learning_rate / (1 + t / decay_iterations). Unset
  /// means iterations / 4; infinity gives a fixed step.
  double learning_rate = 0.5;
  std::optional<double> decay_iterations;
  std::size_t batch_size = 1024;
  std::uint64_t seed = 0;
};

struct OptimizeResult {
  Layout layout;
  /// Full composite loss before the first step and after every epoch, where
  /// an epoch is enough batches to cover the largest criterion once.
  std::vector<double> loss_trace;
};

/// Stochastic gradient descent on the composite loss. Each iteration draws
/// min(batch_size, |terms|) terms without replacement from every criterion
/// and applies cfg.rule to them. With zero iterations the initial layout is
/// returned unchanged.
OptimizeResult optimize_layout(std::span<const Criterion> criteria, std::size_t n,
                               const OptimizerConfig& cfg,
                               const std::optional<Layout>& init = std::nullopt);

struct Word2VecLayoutConfig {
  WalkConfig walks;
  SkipGramConfig skipgram;
  OptimizerConfig optimizer;
};

struct Word2VecLayoutResult {
  Layout layout;
  DissimilarityMatrix dissimilarity{0};
  std::vector<double> loss_trace;
};

/// walks -> skip-gram -> cosine dissimilarity -> cosine-stress SGD. The
/// optimizer seed in `cfg` is ignored; every stage derives its own stream
/// from `seed`.
Word2VecLayoutResult word2vec_layout(const Graph& g, const Word2VecLayoutConfig& cfg,
                                     std::uint64_t seed);

/// Shortest-path stress SGD baseline.
OptimizeResult sp_sgd_layout(const Graph& g, const OptimizerConfig& cfg, std::uint64_t seed);

// Text format: "n" header, then one "x y" row per node.
std::string format_layout(const Layout& x);
Layout parse_layout(const std::string& text);
void save_layout(const Layout& x, const std::filesystem::path& path);
Layout load_layout(const std::filesystem::path& path);
// JSON: {"n": int, "positions": [[x, y], ...]}.
std::string layout_to_json(const Layout& x);
Layout layout_from_json(const std::string& text);

}  // namespace embedlayout
