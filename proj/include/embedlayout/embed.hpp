#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "embedlayout/walks.hpp"

namespace embedlayout {

/// Skip-gram parameters. Row i of `center` is the input-side vector of
/// node i, row i of `context` its output-side vector. Row-major n x d.
struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> center;
  std::vector<double> context;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t n, std::size_t dim)
      : n(n), dim(dim), center(n * dim, 0.0), context(n * dim, 0.0) {}

  std::span<double> center_row(std::size_t i) { return {center.data() + i * dim, dim}; }
  std::span<const double> center_row(std::size_t i) const { return {center.data() + i * dim, dim}; }
  std::span<double> context_row(std::size_t i) { return {context.data() + i * dim, dim}; }
  std::span<const double> context_row(std::size_t i) const { return {context.data() + i * dim, dim}; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

struct SkipGramConfig {
  std::size_t dim = 8;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  double final_learning_rate = 1e-4;  ///< linear decay target over the whole run
};

/// Trains skip-gram with negative sampling over the corpus. Every (center,
/// context) pair inside the window gets one update with `negatives` draws
/// from the unigram^0.75 distribution; a draw equal to the positive context
/// is skipped. Single-threaded and deterministic in (corpus, cfg, seed).
EmbeddingMatrix train_skipgram(const WalkCorpus& corpus, std::size_t node_count,
                               const SkipGramConfig& cfg, std::uint64_t seed);

/// Sampled objective for one training pair:
///   log s(c_u . v_w) + sum_k log s(-c_k . v_w)
double sgns_objective(const EmbeddingMatrix& e, NodeId center, NodeId context,
                      std::span<const NodeId> negatives);

/// One gradient-ascent step of sgns_objective with step size lr. All partial
/// derivatives are taken at the pre-step parameters, so repeated nodes among
/// the targets accumulate their contributions.
void sgns_step(EmbeddingMatrix& e, NodeId center, NodeId context,
               std::span<const NodeId> negatives, double lr);

/// Full-softmax P(u | w) with context vectors on the output side. Reference
/// evaluator for tiny graphs; O(n d) per call.
double softmax_probability(const EmbeddingMatrix& e, NodeId context, NodeId center);

/// Sum of log P(u | w) over every in-window pair of the corpus.
double softmax_log_likelihood(const EmbeddingMatrix& e, const WalkCorpus& corpus,
                              std::size_t window);

/// Symmetric n x n matrix of 1 - cos(v_i, v_j) over center vectors, clamped
/// to [0, 2] with an exact zero diagonal.
class DissimilarityMatrix {
 public:
  explicit DissimilarityMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}
  std::size_t size() const noexcept { return n_; }
  double at(std::size_t i, std::size_t j) const { return values_.at(i * n_ + j); }
  void set(std::size_t i, std::size_t j, double v) {
    values_.at(i * n_ + j) = v;
    values_.at(j * n_ + i) = v;
  }

  friend bool operator==(const DissimilarityMatrix&, const DissimilarityMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<double> values_;
};

/// Thrown when a center vector has zero norm.
class ZeroVectorError : public std::runtime_error {
 public:
  explicit ZeroVectorError(NodeId node)
      : std::runtime_error("embedding row " + std::to_string(node) + " has zero norm"),
        node_(node) {}
  NodeId node() const noexcept { return node_; }

 private:
  NodeId node_;
};

DissimilarityMatrix cosine_dissimilarity(const EmbeddingMatrix& e);

// Text format: "n d" header followed by n rows of d reals. save_embedding
// writes center vectors to `path` and context vectors to `path` + ".ctx".
std::string format_matrix_rows(std::size_t n, std::size_t dim, std::span<const double> data);
void save_embedding(const EmbeddingMatrix& e, const std::filesystem::path& path);
EmbeddingMatrix load_embedding(const std::filesystem::path& path);

}  // namespace embedlayout
