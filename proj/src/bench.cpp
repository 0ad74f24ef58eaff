#include "embedlayout/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "embedlayout/rng.hpp"
#include "io_util.hpp"

namespace embedlayout {

std::string method_name(Method m) {
  switch (m) {
    case Method::word2vec: return "word2vec";
    case Method::sp_sgd: return "sp_sgd";
    case Method::random: return "random";
    case Method::neural: return "neural";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::word2vec, Method::sp_sgd, Method::random, Method::neural}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown method \"" + name + "\"");
}

void BenchSpec::validate() const {
  if (node_sizes.empty() || edge_probabilities.empty() || methods.empty()) {
    throw std::invalid_argument("bench: node sizes, probabilities and methods must be nonempty");
  }
  if (instances < 1) throw std::invalid_argument("bench: instances must be at least 1");
  for (auto n : node_sizes) {
    if (n == 0) throw std::invalid_argument("bench: node sizes must be positive");
  }
  for (double p : edge_probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bench: probabilities must lie in [0, 1]");
  }
  if (std::find(methods.begin(), methods.end(), Method::neural) != methods.end() && !model) {
    throw std::invalid_argument("bench: the neural method needs a trained model");
  }
  if (threads < 1) throw std::invalid_argument("bench: threads must be at least 1");
}

std::uint64_t instance_seed(std::uint64_t bench_seed, std::size_t n, double p, std::size_t index) {
  return derive_seed(bench_seed, {n, std::bit_cast<std::uint64_t>(p), index});
}

Graph bench_graph(std::uint64_t bench_seed, std::size_t n, double p, std::size_t index) {
  return generate_er(n, p, derive_seed(instance_seed(bench_seed, n, p, index), {0}));
}

Layout run_method(Method method, const Graph& g, const BenchSpec& spec, std::uint64_t seed,
                  double& seconds) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  Layout x;
  switch (method) {
    case Method::word2vec:
      x = word2vec_layout(g, spec.word2vec, seed).layout;
      break;
    case Method::sp_sgd:
      x = sp_sgd_layout(g, spec.sp_sgd, seed).layout;
      break;
    case Method::random:
      x = random_layout(g.node_count(), seed);
      break;
    case Method::neural: {
      if (!spec.model) throw std::invalid_argument("neural method without a model");
      auto pred = predict_with_timing(*spec.model, g, spec.word2vec.walks, spec.word2vec.skipgram, seed);
      x = std::move(pred.layout);
      break;
    }
  }
  seconds = std::chrono::duration<double>(clock::now() - start).count();
  return x;
}

namespace {

struct Job {
  std::size_t n;
  double p;
  std::size_t index;
};

struct JobOutput {
  std::vector<InstanceOutcome> outcomes;
  std::vector<RetainedLayout> layouts;
};

JobOutput run_job(const BenchSpec& spec, const Job& job) {
  JobOutput out;
  const auto base = instance_seed(spec.seed, job.n, job.p, job.index);
  const Graph g = bench_graph(spec.seed, job.n, job.p, job.index);
  const auto distances = bfs_all_pairs(g);
  for (Method m : spec.methods) {
    InstanceOutcome o{job.n, job.p, m, job.index, false, {}, {}, 0.0};
    try {
      double seconds = 0.0;
      const Layout x = run_method(m, g, spec, derive_seed(base, {1 + static_cast<std::uint64_t>(m)}), seconds);
      o.report = evaluate_layout(x, distances);
      if (!std::isfinite(o.report.raw_stress) || !std::isfinite(o.report.sns)) {
        throw std::runtime_error("non-finite metric");
      }
      o.seconds = spec.record_timing ? seconds : 0.0;
      o.ok = true;
      if (job.index < spec.keep_layouts) {
        out.layouts.push_back({job.n, job.p, m, job.index, g, x, o.report.sns});
      }
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    out.outcomes.push_back(std::move(o));
  }
  return out;
}

}  // namespace

BenchResult run_bench(const BenchSpec& spec) {
  spec.validate();
  std::vector<Job> jobs;
  for (auto n : spec.node_sizes) {
    for (double p : spec.edge_probabilities) {
      for (std::size_t i = 0; i < spec.instances; ++i) jobs.push_back({n, p, i});
    }
  }
  std::vector<JobOutput> outputs(jobs.size());
  if (spec.threads <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) outputs[j] = run_job(spec, jobs[j]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < spec.threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) outputs[j] = run_job(spec, jobs[j]);
      });
    }
  }

  BenchResult result;
  for (auto& o : outputs) {
    for (auto& oc : o.outcomes) result.outcomes.push_back(std::move(oc));
    for (auto& l : o.layouts) result.layouts.push_back(std::move(l));
  }
  for (auto n : spec.node_sizes) {
    for (double p : spec.edge_probabilities) {
      for (Method m : spec.methods) {
        BenchRow row{n, p, m, 0, 0.0, 0.0, 0.0, 0.0, 0};
        std::vector<double> sns_values;
        for (const auto& o : result.outcomes) {
          if (o.n != n || o.p != p || o.method != m) continue;
          ++row.instances;
          if (!o.ok) {
            ++row.excluded;
            continue;
          }
          row.mean_raw_stress += o.report.raw_stress;
          row.mean_time_s += o.seconds;
          sns_values.push_back(o.report.sns);
        }
        const double k = static_cast<double>(sns_values.size());
        if (!sns_values.empty()) {
          row.mean_raw_stress /= k;
          row.mean_time_s /= k;
          for (double v : sns_values) row.mean_sns += v;
          row.mean_sns /= k;
          if (sns_values.size() > 1) {
            double ss = 0.0;
            for (double v : sns_values) ss += (v - row.mean_sns) * (v - row.mean_sns);
            row.std_sns = std::sqrt(ss / (k - 1.0));
          }
        } else {
          row.mean_raw_stress = row.mean_sns = row.std_sns = row.mean_time_s = std::nan("");
        }
        result.rows.push_back(row);
      }
    }
  }
  return result;
}

std::string format_bench_csv(const BenchResult& result) {
  std::string out = std::string(kBenchCsvHeader) + "\n";
  for (const auto& r : result.rows) {
    out += std::to_string(r.n) + "," + detail::format_double(r.p) + "," + method_name(r.method) + "," +
           std::to_string(r.instances) + "," + detail::format_double(r.mean_raw_stress) + "," +
           detail::format_double(r.mean_sns) + "," + detail::format_double(r.std_sns) + "," +
           detail::format_double(r.mean_time_s) + "," + std::to_string(r.excluded) + "\n";
  }
  return out;
}

std::string render_bench_grid(const BenchResult& result, std::size_t columns, const RenderStyle& style) {
  std::vector<GridItem> items;
  for (const auto& l : result.layouts) {
    items.push_back({l.graph, l.layout,
                     "n=" + std::to_string(l.n) + " p=" + detail::format_double(l.p) + " " +
                         method_name(l.method) + " #" + std::to_string(l.index) +
                         " sns=" + detail::format_fixed(l.sns, 2)});
  }
  return render_grid(items, columns, style);
}

}  // namespace embedlayout
