#include "embedlayout/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "embedlayout/rng.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace embedlayout {

bool Layout::all_finite() const noexcept {
  return std::all_of(points.begin(), points.end(),
                     [](const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); });
}

double distance(const Point& a, const Point& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

Layout random_layout(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Layout x(n);
  for (auto& p : x.points) {
    p.x = rng.uniform();
    p.y = rng.uniform();
  }
  return x;
}

namespace {

void add_pair(PairSet& set, NodeId i, NodeId j, double d) {
  if (d < kMinTargetDistance) return;
  set.pairs.push_back({i, j, d, 1.0 / (d * d)});
}

void check_size(const Layout& x, std::size_t n) {
  if (x.size() != n) {
    throw std::invalid_argument("layout has " + std::to_string(x.size()) +
                                " nodes but target has " + std::to_string(n));
  }
}

}  // namespace

PairSet admissible_pairs(const DistanceMatrix& d) {
  PairSet set{d.size(), {}};
  for (NodeId i = 0; i < d.size(); ++i) {
    for (NodeId j = i + 1; j < d.size(); ++j) {
      if (const auto& v = d.at(i, j)) add_pair(set, i, j, *v);
    }
  }
  return set;
}

PairSet admissible_pairs(const DissimilarityMatrix& d) {
  PairSet set{d.size(), {}};
  for (NodeId i = 0; i < d.size(); ++i) {
    for (NodeId j = i + 1; j < d.size(); ++j) add_pair(set, i, j, d.at(i, j));
  }
  return set;
}

double pair_stress(const Layout& x, std::span<const TargetPair> terms) {
  double total = 0.0;
  for (const auto& t : terms) {
    const double r = distance(x[t.i], x[t.j]) - t.target;
    total += t.weight * r * r;
  }
  return total;
}

void accumulate_pair_gradient(const Layout& x, std::span<const TargetPair> terms, Gradient& grad,
                              double scale) {
  for (const auto& t : terms) {
    const double dx = x[t.i].x - x[t.j].x;
    const double dy = x[t.i].y - x[t.j].y;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len == 0.0) continue;
    const double c = scale * 2.0 * t.weight * (len - t.target) / len;
    grad[t.i].x += c * dx;
    grad[t.i].y += c * dy;
    grad[t.j].x -= c * dx;
    grad[t.j].y -= c * dy;
  }
}

double stress_loss(const Layout& x, const PairSet& target) {
  check_size(x, target.n);
  return pair_stress(x, target.pairs);
}
double stress_loss(const Layout& x, const DistanceMatrix& target) {
  check_size(x, target.size());
  return stress_loss(x, admissible_pairs(target));
}
double stress_loss(const Layout& x, const DissimilarityMatrix& target) {
  check_size(x, target.size());
  return stress_loss(x, admissible_pairs(target));
}

Gradient stress_gradient(const Layout& x, const PairSet& target) {
  check_size(x, target.n);
  Gradient grad(x.size());
  accumulate_pair_gradient(x, target.pairs, grad);
  return grad;
}
Gradient stress_gradient(const Layout& x, const DistanceMatrix& target) {
  check_size(x, target.size());
  return stress_gradient(x, admissible_pairs(target));
}
Gradient stress_gradient(const Layout& x, const DissimilarityMatrix& target) {
  check_size(x, target.size());
  return stress_gradient(x, admissible_pairs(target));
}

namespace {

PairSet edge_terms(const Graph& g, double ideal_length) {
  if (!(ideal_length > 0.0) || !std::isfinite(ideal_length)) {
    throw std::invalid_argument("ideal edge length must be positive and finite");
  }
  PairSet set{g.node_count(), {}};
  const double w = 1.0 / (ideal_length * ideal_length);
  for (const auto& [a, b] : g.edges()) set.pairs.push_back({a, b, ideal_length, w});
  return set;
}

}  // namespace

double ideal_edge_length_loss(const Layout& x, const Graph& g, double ideal_length) {
  return stress_loss(x, edge_terms(g, ideal_length));
}

Gradient ideal_edge_length_gradient(const Layout& x, const Graph& g, double ideal_length) {
  return stress_gradient(x, edge_terms(g, ideal_length));
}

Criterion Criterion::cosine_stress(const DissimilarityMatrix& d, double weight) {
  if (!(weight >= 0.0)) throw std::invalid_argument("criterion weight must be nonnegative");
  return {CriterionKind::cosine_stress, weight, admissible_pairs(d)};
}

Criterion Criterion::sp_stress(const DistanceMatrix& d, double weight) {
  if (!(weight >= 0.0)) throw std::invalid_argument("criterion weight must be nonnegative");
  return {CriterionKind::sp_stress, weight, admissible_pairs(d)};
}

Criterion Criterion::ideal_edge_length(const Graph& g, double ideal_length, double weight) {
  if (!(weight >= 0.0)) throw std::invalid_argument("criterion weight must be nonnegative");
  return {CriterionKind::ideal_edge_length, weight, edge_terms(g, ideal_length)};
}

double Criterion::loss(const Layout& x) const { return stress_loss(x, terms); }

double composite_loss(std::span<const Criterion> criteria, const Layout& x) {
  double total = 0.0;
  for (const auto& c : criteria) total += c.weight * c.loss(x);
  return total;
}

Gradient composite_gradient(std::span<const Criterion> criteria, const Layout& x) {
  Gradient grad(x.size());
  for (const auto& c : criteria) {
    check_size(x, c.terms.n);
    accumulate_pair_gradient(x, c.terms.pairs, grad, c.weight);
  }
  return grad;
}

namespace {

struct Sampled {
  TargetPair term;
  double factor;  // criterion weight, times count / b for the gradient rule
};

// Exponential annealing from eta_max = 1 / min(aw) to final_step / max(aw):
// early iterations let every term correct its full residual, the last one
// lets the stiffest term correct a `final_step` fraction of it.
struct Annealing {
  double eta_max = 1.0;
  double lambda = 0.0;

  Annealing(std::span<const Criterion> criteria, const OptimizerConfig& cfg) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& c : criteria) {
      if (c.weight == 0.0) continue;
      for (const auto& p : c.terms.pairs) {
        lo = std::min(lo, c.weight * p.weight);
        hi = std::max(hi, c.weight * p.weight);
      }
    }
    if (hi == 0.0) return;
    eta_max = 1.0 / lo;
    const double eta_min = cfg.final_step / hi;
    if (cfg.iterations > 1 && eta_max > eta_min) {
      lambda = std::log(eta_max / eta_min) / static_cast<double>(cfg.iterations - 1);
    }
  }
  double at(std::size_t t) const { return eta_max * std::exp(-lambda * static_cast<double>(t)); }
};

void check_finite(const Point& p, std::size_t node, std::size_t t) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw std::runtime_error("optimize_layout: non-finite position for node " + std::to_string(node) +
                             " at iteration " + std::to_string(t));
  }
}

}  // namespace

OptimizeResult optimize_layout(std::span<const Criterion> criteria, std::size_t n,
                               const OptimizerConfig& cfg, const std::optional<Layout>& init) {
  if (criteria.empty()) throw std::invalid_argument("optimize_layout: no criteria");
  if (n == 0) throw std::invalid_argument("optimize_layout: empty layout");
  if (cfg.batch_size == 0) throw std::invalid_argument("optimize_layout: batch size must be positive");
  for (const auto& c : criteria) {
    if (c.terms.n != n) throw std::invalid_argument("optimize_layout: criterion size does not match n");
    if (!(c.weight >= 0.0)) throw std::invalid_argument("optimize_layout: negative criterion weight");
  }
  const bool pairwise = cfg.rule == UpdateRule::pairwise;
  if (pairwise && !(cfg.final_step > 0.0 && cfg.final_step <= 1.0)) {
    throw std::invalid_argument("optimize_layout: final step must be in (0, 1]");
  }
  if (!pairwise && !(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("optimize_layout: learning rate must be positive");
  }
  const double decay = cfg.decay_iterations.value_or(static_cast<double>(cfg.iterations) / 4.0);
  if (!pairwise && !(decay > 0.0)) throw std::invalid_argument("optimize_layout: decay must be positive");

  Rng rng(derive_seed(cfg.seed, {0x6c61796f7574ULL}));
  Layout x = init ? *init : random_layout(n, derive_seed(cfg.seed, {0x696e6974ULL}));
  check_size(x, n);
  if (!x.all_finite()) throw std::invalid_argument("optimize_layout: initial layout is not finite");

  // Per-criterion index permutations; a partial Fisher-Yates shuffle of the
  // first b entries yields a uniform sample without replacement.
  std::vector<std::vector<std::size_t>> order(criteria.size());
  std::size_t epoch_len = 1;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const std::size_t count = criteria[c].terms.pairs.size();
    order[c].resize(count);
    std::iota(order[c].begin(), order[c].end(), std::size_t{0});
    if (count > 0) {
      const std::size_t b = std::min(cfg.batch_size, count);
      epoch_len = std::max(epoch_len, (count + b - 1) / b);
    }
  }
  const Annealing annealing(criteria, cfg);

  OptimizeResult result;
  result.loss_trace.push_back(composite_loss(criteria, x));
  Gradient grad(n);
  std::vector<double> curvature(n);
  std::vector<Sampled> batch;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    batch.clear();
    for (std::size_t c = 0; c < criteria.size(); ++c) {
      const auto& pairs = criteria[c].terms.pairs;
      const std::size_t count = pairs.size();
      if (count == 0 || criteria[c].weight == 0.0) continue;
      const std::size_t b = std::min(cfg.batch_size, count);
      const double factor =
          pairwise ? criteria[c].weight
                   : criteria[c].weight * static_cast<double>(count) / static_cast<double>(b);
      auto& idx = order[c];
      for (std::size_t k = 0; k < b; ++k) {
        if (b < count) std::swap(idx[k], idx[k + rng.below(count - k)]);
        batch.push_back({pairs[idx[k]], factor});
      }
    }

    if (pairwise) {
      for (std::size_t k = batch.size(); k > 1; --k) std::swap(batch[k - 1], batch[rng.below(k)]);
      const double eta = annealing.at(t);
      for (const auto& [p, factor] : batch) {
        const double dx = x[p.i].x - x[p.j].x;
        const double dy = x[p.i].y - x[p.j].y;
        const double len = std::sqrt(dx * dx + dy * dy);
        if (len == 0.0) continue;
        // A gradient step on this one term, sized so that mu = 1 moves both
        // endpoints exactly onto the target distance.
        const double mu = std::min(1.0, eta * factor * p.weight);
        const double r = mu * (len - p.target) / (2.0 * len);
        x[p.i].x -= r * dx;
        x[p.i].y -= r * dy;
        x[p.j].x += r * dx;
        x[p.j].y += r * dy;
      }
      for (std::size_t i = 0; i < n; ++i) check_finite(x[i], i, t);
    } else {
      std::fill(grad.begin(), grad.end(), Point{});
      std::fill(curvature.begin(), curvature.end(), 0.0);
      for (const auto& [p, factor] : batch) {
        accumulate_pair_gradient(x, std::span<const TargetPair>(&p, 1), grad, factor);
        curvature[p.i] += 2.0 * factor * p.weight;
        curvature[p.j] += 2.0 * factor * p.weight;
      }
      const double eta = cfg.learning_rate / (1.0 + static_cast<double>(t) / decay);
      for (std::size_t i = 0; i < n; ++i) {
        if (curvature[i] <= 0.0) continue;
        x[i].x -= eta * grad[i].x / curvature[i];
        x[i].y -= eta * grad[i].y / curvature[i];
        check_finite(x[i], i, t);
      }
    }
    if ((t + 1) % epoch_len == 0 || t + 1 == cfg.iterations) {
      result.loss_trace.push_back(composite_loss(criteria, x));
    }
  }
  result.layout = std::move(x);
  return result;
}

Word2VecLayoutResult word2vec_layout(const Graph& g, const Word2VecLayoutConfig& cfg,
                                     std::uint64_t seed) {
  const auto corpus = generate_walks(g, cfg.walks, derive_seed(seed, {1}));
  const auto emb = train_skipgram(corpus, g.node_count(), cfg.skipgram, derive_seed(seed, {2}));
  Word2VecLayoutResult out;
  out.dissimilarity = cosine_dissimilarity(emb);
  const Criterion criteria[] = {Criterion::cosine_stress(out.dissimilarity)};
  OptimizerConfig opt = cfg.optimizer;
  opt.seed = derive_seed(seed, {3});
  auto run = optimize_layout(criteria, g.node_count(), opt);
  out.layout = std::move(run.layout);
  out.loss_trace = std::move(run.loss_trace);
  return out;
}

OptimizeResult sp_sgd_layout(const Graph& g, const OptimizerConfig& cfg, std::uint64_t seed) {
  const Criterion criteria[] = {Criterion::sp_stress(bfs_all_pairs(g))};
  OptimizerConfig opt = cfg;
  opt.seed = seed;
  return optimize_layout(criteria, g.node_count(), opt);
}

std::string format_layout(const Layout& x) {
  std::string out = std::to_string(x.size()) + "\n";
  for (const auto& p : x.points) {
    out += detail::format_double(p.x) + " " + detail::format_double(p.y) + "\n";
  }
  return out;
}

Layout parse_layout(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  if (!(in >> n) || n == 0) throw std::runtime_error("layout file: malformed \"n\" header");
  Layout x(n);
  for (auto& p : x.points) {
    if (!(in >> p.x >> p.y)) throw std::runtime_error("layout file: expected " + std::to_string(n) + " rows");
  }
  if (!x.all_finite()) throw std::runtime_error("layout file: non-finite coordinate");
  return x;
}

void save_layout(const Layout& x, const std::filesystem::path& path) {
  detail::write_file(path, format_layout(x));
}

Layout load_layout(const std::filesystem::path& path) {
  return parse_layout(detail::read_file(path));
}

std::string layout_to_json(const Layout& x) {
  nlohmann::json j;
  j["n"] = x.size();
  j["positions"] = nlohmann::json::array();
  for (const auto& p : x.points) j["positions"].push_back({p.x, p.y});
  return j.dump() + "\n";
}

Layout layout_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto n = j.at("n").get<std::size_t>();
  const auto& pos = j.at("positions");
  if (pos.size() != n) throw std::runtime_error("layout JSON: position count does not match n");
  Layout x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = {pos[i].at(0).get<double>(), pos[i].at(1).get<double>()};
  return x;
}

}  // namespace embedlayout
