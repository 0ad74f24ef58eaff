#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "embedlayout/layout.hpp"
#include "embedlayout/metrics.hpp"
#include "embedlayout/neural.hpp"
#include "embedlayout/render.hpp"

namespace embedlayout {

enum class Method { word2vec, sp_sgd, random, neural };

std::string method_name(Method m);
/// Throws std::invalid_argument for an unknown name.
Method parse_method(const std::string& name);

struct BenchSpec {
  std::vector<std::size_t> node_sizes{20, 30};
  std::vector<double> edge_probabilities{0.2, 0.4, 0.6, 0.8};
  std::size_t instances = 50;
  std::vector<Method> methods{Method::word2vec, Method::sp_sgd, Method::random};
  std::uint64_t seed = 0;

  Word2VecLayoutConfig word2vec;    ///< also supplies the neural method's embedding settings
  OptimizerConfig sp_sgd;           ///< seed field ignored
  std::optional<MlpModel> model;    ///< required when methods contains neural
  std::size_t keep_layouts = 0;     ///< layouts retained per (cell, method) for rendering
  std::size_t threads = 1;
  bool record_timing = true;        ///< false reports 0 so the CSV is reproducible byte for byte

  /// Throws std::invalid_argument when the spec is unusable.
  void validate() const;
};

struct InstanceOutcome {
  std::size_t n = 0;
  double p = 0.0;
  Method method = Method::random;
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  StressReport report;
  double seconds = 0.0;
};

struct BenchRow {
  std::size_t n = 0;
  double p = 0.0;
  Method method = Method::random;
  std::size_t instances = 0;  ///< attempted
  double mean_raw_stress = 0.0;
  double mean_sns = 0.0;
  double std_sns = 0.0;       ///< sample standard deviation over succeeded instances
  double mean_time_s = 0.0;
  std::size_t excluded = 0;
};

struct RetainedLayout {
  std::size_t n = 0;
  double p = 0.0;
  Method method = Method::random;
  std::size_t index = 0;
  Graph graph{1, {}};
  Layout layout;
  double sns = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;               ///< ordered by (n, p, method) as given in the spec
  std::vector<InstanceOutcome> outcomes;    ///< ordered by (n, p, instance, method)
  std::vector<RetainedLayout> layouts;
};

/// Seed of instance `index` in cell (n, p); independent of the method list.
std::uint64_t instance_seed(std::uint64_t bench_seed, std::size_t n, double p, std::size_t index);

/// The graph every method sees for that instance.
Graph bench_graph(std::uint64_t bench_seed, std::size_t n, double p, std::size_t index);

/// Runs one method on one graph and times it.
Layout run_method(Method method, const Graph& g, const BenchSpec& spec, std::uint64_t seed,
                  double& seconds);

BenchResult run_bench(const BenchSpec& spec);

inline constexpr const char* kBenchCsvHeader =
    "n,p,method,instances,mean_raw_stress,mean_sns,std_sns,mean_time_s,excluded";

std::string format_bench_csv(const BenchResult& result);

/// Grid of the retained layouts with "n p method #index sns" captions.
std::string render_bench_grid(const BenchResult& result, std::size_t columns, const RenderStyle& style);

}  // namespace embedlayout
