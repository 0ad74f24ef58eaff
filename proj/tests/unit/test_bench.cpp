#include "doctest.h"

#include <cmath>
#include <sstream>

#include "embedlayout/bench.hpp"
#include "embedlayout/rng.hpp"

using namespace embedlayout;

namespace {

BenchSpec quick_spec(std::vector<Method> methods, std::size_t instances = 5) {
  BenchSpec spec;
  spec.node_sizes = {12};
  spec.edge_probabilities = {0.3};
  spec.instances = instances;
  spec.methods = std::move(methods);
  spec.seed = 17;
  spec.record_timing = false;
  return spec;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("method names round trip") {
    for (Method m : {Method::word2vec, Method::sp_sgd, Method::random, Method::neural}) {
      CHECK(parse_method(method_name(m)) == m);
    }
    CHECK_THROWS_AS(parse_method("neato"), std::invalid_argument);
  }

  TEST_CASE("random-only cell aggregates its instances") {
    const auto spec = quick_spec({Method::random});
    const auto result = run_bench(spec);
    REQUIRE(result.rows.size() == 1);
    REQUIRE(result.outcomes.size() == 5);
    const auto& row = result.rows[0];
    CHECK(row.instances == 5);
    CHECK(row.excluded == 0);

    // Oracle: recompute every instance from its seed and aggregate by hand.
    double raw = 0.0, s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      const Graph g = bench_graph(spec.seed, 12, 0.3, i);
      double seconds = 0.0;
      const Layout x = run_method(Method::random, g, spec, derive_seed(instance_seed(spec.seed, 12, 0.3, i), {3}), seconds);
      const auto d = bfs_all_pairs(g);
      CHECK(result.outcomes[i].report.sns == doctest::Approx(sns(x, d)).epsilon(1e-12));
      raw += result.outcomes[i].report.raw_stress;
      s += result.outcomes[i].report.sns;
      s2 += result.outcomes[i].report.sns * result.outcomes[i].report.sns;
    }
    CHECK(row.mean_raw_stress == doctest::Approx(raw / 5));
    CHECK(row.mean_sns == doctest::Approx(s / 5));
    CHECK(row.std_sns == doctest::Approx(std::sqrt((s2 - s * s / 5) / 4)));
    CHECK(row.mean_time_s == 0.0);
  }

  TEST_CASE("graphs do not depend on the method list") {
    const auto a = run_bench(quick_spec({Method::random}, 3));
    const auto b = run_bench(quick_spec({Method::sp_sgd, Method::random}, 3));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.outcomes[i].report.sns == b.outcomes[2 * i + 1].report.sns);
      CHECK(a.outcomes[i].report.pairs_evaluated == b.outcomes[2 * i + 1].report.pairs_evaluated);
    }
    CHECK(instance_seed(1, 20, 0.2, 0) != instance_seed(1, 20, 0.4, 0));
    CHECK(instance_seed(1, 20, 0.2, 0) != instance_seed(1, 30, 0.2, 0));
    CHECK(instance_seed(1, 20, 0.2, 0) != instance_seed(1, 20, 0.2, 1));
  }

  TEST_CASE("sp_sgd beats random on every cell") {
    auto spec = quick_spec({Method::sp_sgd, Method::random}, 8);
    spec.node_sizes = {10, 20};
    spec.edge_probabilities = {0.2, 0.6};
    const auto result = run_bench(spec);
    REQUIRE(result.rows.size() == 8);
    for (std::size_t r = 0; r < result.rows.size(); r += 2) {
      CHECK(result.rows[r].method == Method::sp_sgd);
      CHECK(result.rows[r].mean_sns < result.rows[r + 1].mean_sns);
    }
  }

  TEST_CASE("failed instances are excluded and counted") {
    // An edgeless graph has no admissible pair, so every metric fails.
    auto spec = quick_spec({Method::random}, 4);
    spec.edge_probabilities = {0.0, 0.3};
    const auto result = run_bench(spec);
    REQUIRE(result.rows.size() == 2);
    CHECK(result.rows[0].instances == 4);
    CHECK(result.rows[0].excluded == 4);
    CHECK(std::isnan(result.rows[0].mean_sns));
    CHECK(result.rows[1].excluded == 0);
    for (const auto& o : result.outcomes) {
      if (o.p == 0.0) {
        CHECK_FALSE(o.ok);
        CHECK_FALSE(o.error.empty());
      }
    }
  }

  TEST_CASE("csv is deterministic, also across thread counts") {
    auto spec = quick_spec({Method::word2vec, Method::sp_sgd, Method::random}, 3);
    const auto csv = format_bench_csv(run_bench(spec));
    CHECK(csv == format_bench_csv(run_bench(spec)));
    spec.threads = 3;
    CHECK(csv == format_bench_csv(run_bench(spec)));

    const auto rows = lines(csv);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == kBenchCsvHeader);
    CHECK(rows[1].rfind("12,0.3,word2vec,3,", 0) == 0);
    CHECK(rows[3].rfind("12,0.3,random,3,", 0) == 0);
  }

  TEST_CASE("timing is recorded when requested") {
    auto spec = quick_spec({Method::sp_sgd}, 2);
    spec.record_timing = true;
    CHECK(run_bench(spec).rows[0].mean_time_s > 0.0);
  }

  TEST_CASE("neural method needs a model") {
    auto spec = quick_spec({Method::neural}, 2);
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.model = MlpModel(MlpConfig{}, 1);
    const auto result = run_bench(spec);
    CHECK(result.rows[0].excluded == 0);
    CHECK(std::isfinite(result.rows[0].mean_sns));
  }

  TEST_CASE("spec validation") {
    auto spec = quick_spec({Method::random});
    spec.instances = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = quick_spec({Method::random});
    spec.edge_probabilities = {1.5};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = quick_spec({});
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }

  TEST_CASE("retained layouts render as a grid") {
    auto spec = quick_spec({Method::sp_sgd, Method::random}, 3);
    spec.keep_layouts = 2;
    const auto result = run_bench(spec);
    CHECK(result.layouts.size() == 4);
    const auto svg = render_bench_grid(result, 2, {});
    std::size_t cells = 0;
    for (auto pos = svg.find("translate("); pos != std::string::npos; pos = svg.find("translate(", pos + 1)) ++cells;
    CHECK(cells == 4);
    CHECK(svg.find("sp_sgd") != std::string::npos);
  }
}
