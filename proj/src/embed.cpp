#include "embedlayout/embed.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "embedlayout/rng.hpp"
#include "io_util.hpp"

namespace embedlayout {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double ex = std::exp(x);
  return ex / (1.0 + ex);
}

double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void check_node(const EmbeddingMatrix& e, NodeId v) {
  if (v >= e.n) throw std::out_of_range("node " + std::to_string(v) + " outside embedding");
}

// `scratch` needs 2 * dim + targets doubles.
void sgns_step_impl(EmbeddingMatrix& e, NodeId center, NodeId context,
                    std::span<const NodeId> negatives, double lr, std::vector<double>& scratch) {
  const std::size_t d = e.dim;
  const std::size_t targets = 1 + negatives.size();
  scratch.resize(2 * d + targets);
  double* v_old = scratch.data();
  double* v_grad = v_old + d;
  double* scale = v_grad + d;
  auto v = e.center_row(center);
  std::copy(v.begin(), v.end(), v_old);
  std::fill(v_grad, v_grad + d, 0.0);

  auto target_at = [&](std::size_t t) { return t == 0 ? context : negatives[t - 1]; };
  for (std::size_t t = 0; t < targets; ++t) {
    const auto c = e.context_row(target_at(t));
    const double label = t == 0 ? 1.0 : 0.0;
    scale[t] = lr * (label - sigmoid(dot(c, v)));
    for (std::size_t k = 0; k < d; ++k) v_grad[k] += scale[t] * c[k];
  }
  for (std::size_t t = 0; t < targets; ++t) {
    auto c = e.context_row(target_at(t));
    for (std::size_t k = 0; k < d; ++k) c[k] += scale[t] * v_old[k];
  }
  for (std::size_t k = 0; k < d; ++k) v[k] += v_grad[k];
}

}  // namespace

double sgns_objective(const EmbeddingMatrix& e, NodeId center, NodeId context,
                      std::span<const NodeId> negatives) {
  check_node(e, center);
  check_node(e, context);
  const auto v = e.center_row(center);
  double obj = log_sigmoid(dot(e.context_row(context), v));
  for (NodeId k : negatives) {
    check_node(e, k);
    obj += log_sigmoid(-dot(e.context_row(k), v));
  }
  return obj;
}

void sgns_step(EmbeddingMatrix& e, NodeId center, NodeId context,
               std::span<const NodeId> negatives, double lr) {
  check_node(e, center);
  check_node(e, context);
  for (NodeId k : negatives) check_node(e, k);
  std::vector<double> scratch;
  sgns_step_impl(e, center, context, negatives, lr, scratch);
}

EmbeddingMatrix train_skipgram(const WalkCorpus& corpus, std::size_t node_count,
                               const SkipGramConfig& cfg, std::uint64_t seed) {
  if (corpus.walks.empty() || corpus.token_count() == 0) {
    throw std::invalid_argument("train_skipgram: empty corpus");
  }
  if (node_count == 0) throw std::invalid_argument("train_skipgram: node count must be positive");
  if (cfg.dim < 1 || cfg.window < 1 || cfg.negatives < 1 || cfg.epochs < 1) {
    throw std::invalid_argument("train_skipgram: dim, window, negatives and epochs must be >= 1");
  }
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("train_skipgram: learning rate must be positive");

  std::vector<double> counts(node_count, 0.0);
  for (const auto& walk : corpus.walks) {
    for (NodeId v : walk) {
      if (v >= node_count) throw std::out_of_range("corpus references node outside the graph");
      counts[v] += 1.0;
    }
  }
  std::vector<double> cdf(node_count);
  double acc = 0.0;
  for (std::size_t i = 0; i < node_count; ++i) {
    acc += std::pow(counts[i], 0.75);
    cdf[i] = acc;
  }
  const double total_weight = acc;

  EmbeddingMatrix e(node_count, cfg.dim);
  Rng init_rng(derive_seed(seed, {0}));
  const double half = 0.5 / static_cast<double>(cfg.dim);
  for (double& x : e.center) x = init_rng.uniform(-half, half);

  Rng rng(derive_seed(seed, {1}));
  auto draw_negative = [&] {
    const double u = rng.uniform() * total_weight;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<NodeId>(it - cdf.begin());
  };

  const double total_positions =
      static_cast<double>(cfg.epochs) * static_cast<double>(corpus.token_count());
  double processed = 0.0;
  std::vector<NodeId> negatives;
  negatives.reserve(cfg.negatives);
  std::vector<double> scratch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& walk : corpus.walks) {
      for (std::size_t pos = 0; pos < walk.size(); ++pos, processed += 1.0) {
        const double progress = processed / total_positions;
        const double lr = cfg.learning_rate + (cfg.final_learning_rate - cfg.learning_rate) * progress;
        const std::size_t lo = pos >= cfg.window ? pos - cfg.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, pos + cfg.window);
        for (std::size_t ctx = lo; ctx <= hi; ++ctx) {
          if (ctx == pos) continue;
          negatives.clear();
          for (std::size_t k = 0; k < cfg.negatives; ++k) {
            const NodeId neg = draw_negative();
            if (neg != walk[ctx]) negatives.push_back(neg);
          }
          sgns_step_impl(e, walk[pos], walk[ctx], negatives, lr, scratch);
        }
      }
    }
  }
  return e;
}

double softmax_probability(const EmbeddingMatrix& e, NodeId context, NodeId center) {
  check_node(e, context);
  check_node(e, center);
  const auto v = e.center_row(center);
  std::vector<double> scores(e.n);
  for (std::size_t k = 0; k < e.n; ++k) scores[k] = dot(e.context_row(k), v);
  const double peak = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s - peak);
  return std::exp(scores[context] - peak) / denom;
}

double softmax_log_likelihood(const EmbeddingMatrix& e, const WalkCorpus& corpus,
                              std::size_t window) {
  double total = 0.0;
  for (const auto& walk : corpus.walks) {
    for (std::size_t pos = 0; pos < walk.size(); ++pos) {
      const std::size_t lo = pos >= window ? pos - window : 0;
      const std::size_t hi = std::min(walk.size() - 1, pos + window);
      for (std::size_t ctx = lo; ctx <= hi; ++ctx) {
        if (ctx != pos) total += std::log(softmax_probability(e, walk[ctx], walk[pos]));
      }
    }
  }
  return total;
}

DissimilarityMatrix cosine_dissimilarity(const EmbeddingMatrix& e) {
  std::vector<double> norms(e.n);
  for (std::size_t i = 0; i < e.n; ++i) {
    const auto row = e.center_row(i);
    norms[i] = std::sqrt(dot(row, row));
    if (!(norms[i] > 0.0)) throw ZeroVectorError(i);
  }
  DissimilarityMatrix out(e.n);
  for (std::size_t i = 0; i < e.n; ++i) {
    for (std::size_t j = i + 1; j < e.n; ++j) {
      const double cos = dot(e.center_row(i), e.center_row(j)) / (norms[i] * norms[j]);
      out.set(i, j, std::clamp(1.0 - cos, 0.0, 2.0));
    }
  }
  return out;
}

std::string format_matrix_rows(std::size_t n, std::size_t dim, std::span<const double> data) {
  std::string out = std::to_string(n) + " " + std::to_string(dim) + "\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      if (k) out += ' ';
      out += detail::format_double(data[i * dim + k]);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<double> parse_matrix_rows(const std::string& text, std::size_t& n, std::size_t& dim) {
  std::istringstream in(text);
  if (!(in >> n >> dim) || n == 0 || dim == 0) {
    throw std::runtime_error("embedding file: malformed \"n d\" header");
  }
  std::vector<double> data(n * dim);
  for (double& x : data) {
    if (!(in >> x) || !std::isfinite(x)) throw std::runtime_error("embedding file: bad or missing value");
  }
  return data;
}

}  // namespace

void save_embedding(const EmbeddingMatrix& e, const std::filesystem::path& path) {
  detail::write_file(path, format_matrix_rows(e.n, e.dim, e.center));
  auto ctx_path = path;
  ctx_path += ".ctx";
  detail::write_file(ctx_path, format_matrix_rows(e.n, e.dim, e.context));
}

EmbeddingMatrix load_embedding(const std::filesystem::path& path) {
  EmbeddingMatrix e;
  e.center = parse_matrix_rows(detail::read_file(path), e.n, e.dim);
  auto ctx_path = path;
  ctx_path += ".ctx";
  if (std::filesystem::exists(ctx_path)) {
    std::size_t n2 = 0, d2 = 0;
    e.context = parse_matrix_rows(detail::read_file(ctx_path), n2, d2);
    if (n2 != e.n || d2 != e.dim) throw std::runtime_error("context vectors do not match center vectors");
  } else {
    e.context.assign(e.n * e.dim, 0.0);
  }
  return e;
}

}  // namespace embedlayout
