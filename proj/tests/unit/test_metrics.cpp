#include "doctest.h"

#include <cmath>

#include "embedlayout/layout.hpp"
#include "embedlayout/metrics.hpp"
#include "embedlayout/rng.hpp"
#include "oracles.hpp"

using namespace embedlayout;

namespace {

struct Instance {
  Layout x;
  DistanceMatrix d{0};
};

Instance random_instance(std::uint64_t seed, std::size_t n) {
  auto edges = generate_er(n, 0.4, seed).edges();
  if (edges.empty() || edges.front() != Edge{0, 1}) edges.insert(edges.begin(), Edge{0, 1});
  const Graph g(n, edges);
  Rng rng(derive_seed(seed, {1}));
  Layout x(n);
  for (auto& p : x.points) p = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
  return {x, bfs_all_pairs(g)};
}

Layout scaled(const Layout& x, double c) {
  Layout y = x;
  for (auto& p : y.points) p = {c * p.x, c * p.y};
  return y;
}

Layout path_layout(std::size_t n) {
  Layout x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = {static_cast<double>(i), 0.0};
  return x;
}

Graph path(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(n, edges);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("perfect layout") {
    const auto d = bfs_all_pairs(path(6));
    const auto x = path_layout(6);
    CHECK(alpha_min(x, d) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sns(x, d) == doctest::Approx(0.0));
    CHECK(raw_stress(x, d, true) == 0.0);
    CHECK(raw_stress(x, d, false) == 0.0);
    const auto report = evaluate_layout(x, d);
    CHECK(report.pairs_evaluated == 15);
  }

  TEST_CASE("alpha_min scales inversely with the layout") {
    const auto inst = random_instance(3, 8);
    const double a = alpha_min(inst.x, inst.d);
    for (double c : {0.25, 4.0, 100.0}) CHECK(alpha_min(scaled(inst.x, c), inst.d) == doctest::Approx(a / c).epsilon(1e-12));
  }

  TEST_CASE("alpha_min agrees with golden-section search") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto inst = random_instance(seed, 5);
      const auto targets = testing::dense_targets(inst.d);
      const auto coords = testing::flatten(inst.x);
      auto f = [&](double a) { return testing::reference_stress(coords, targets, 5, a); };
      const double a = alpha_min(inst.x, inst.d);
      CHECK(std::abs(testing::golden_section(f, 1e-6, 20.0) - a) < 1e-6);
    }
  }

  TEST_CASE("sns is scale invariant") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto inst = random_instance(seed, 3 + seed % 20);
      const double base = sns(inst.x, inst.d);
      for (double c : {1e-3, 1e-1, 1.0, 10.0, 1e3}) CHECK(std::abs(sns(scaled(inst.x, c), inst.d) - base) < 1e-9);
    }
  }

  TEST_CASE("sns is no larger than the stress of any scaled layout") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto inst = random_instance(seed + 40, 10);
      const double s = sns(inst.x, inst.d);
      const double a = alpha_min(inst.x, inst.d);
      CHECK(s == doctest::Approx(raw_stress(scaled(inst.x, a), inst.d)).epsilon(1e-12));
      for (int k = 1; k <= 1000; ++k) {
        const double alpha = 0.005 * k;
        REQUIRE(s <= raw_stress(scaled(inst.x, alpha), inst.d) + 1e-12);
      }
    }
  }

  TEST_CASE("raw stress forms") {
    DistanceMatrix d(2);
    d.set(0, 1, 1.0);
    CHECK(raw_stress(Layout({{0, 0}, {2, 0}}), d, false) == 1.0);
    DistanceMatrix far(2);
    far.set(0, 1, 2.0);
    const Layout x({{0, 0}, {4, 0}});
    CHECK(raw_stress(x, far, false) == 4.0);
    CHECK(raw_stress(x, far, true) == 1.0);
  }

  TEST_CASE("weighted raw stress is the layout loss") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto inst = random_instance(seed, 12);
      CHECK(std::abs(raw_stress(inst.x, inst.d) - stress_loss(inst.x, inst.d)) < 1e-12);
    }
  }

  TEST_CASE("normalized stress divides by the pair count") {
    const auto inst = random_instance(2, 9);
    const auto pairs = admissible_pairs(inst.d);
    CHECK(normalized_stress(inst.x, inst.d) ==
          doctest::Approx(raw_stress(inst.x, inst.d) / static_cast<double>(pairs.pairs.size())));
  }

  TEST_CASE("metrics are invariant to translation and rotation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto inst = random_instance(seed + 7, 10);
      Layout moved = inst.x;
      const double c = std::cos(1.1 * seed), s = std::sin(1.1 * seed);
      for (auto& p : moved.points) p = {c * p.x - s * p.y + 5.0, s * p.x + c * p.y - 2.0};
      CHECK(std::abs(raw_stress(moved, inst.d) - raw_stress(inst.x, inst.d)) < 1e-9);
      CHECK(std::abs(sns(moved, inst.d) - sns(inst.x, inst.d)) < 1e-9);
      CHECK(std::abs(alpha_min(moved, inst.d) - alpha_min(inst.x, inst.d)) < 1e-9);
    }
  }

  TEST_CASE("report satisfies the optimality invariant") {
    const auto inst = random_instance(11, 15);
    const auto r = evaluate_layout(inst.x, inst.d);
    CHECK(r.sns <= r.raw_stress);
    CHECK(r.alpha_min > 0.0);
  }

  TEST_CASE("degenerate layouts are rejected") {
    const auto d = bfs_all_pairs(path(3));
    const Layout same({{1, 1}, {1, 1}, {1, 1}});
    CHECK_THROWS_AS(alpha_min(same, d), DegenerateLayoutError);
    CHECK_THROWS_AS(sns(same, d), DegenerateLayoutError);
    CHECK_THROWS_AS(alpha_min(Layout({{0, 0}, {1, 0}}), bfs_all_pairs(Graph(2, {}))), DegenerateLayoutError);
  }

  TEST_CASE("size mismatch is rejected") {
    CHECK_THROWS_AS(raw_stress(path_layout(3), bfs_all_pairs(path(4))), std::invalid_argument);
  }

  TEST_CASE("csv row") {
    const auto d = bfs_all_pairs(path(3));
    const auto r = evaluate_layout(path_layout(3), d);
    CHECK(std::string(kStressReportCsvHeader) == "graph_id,n,p,method,raw_stress,sns,alpha_min,pairs");
    CHECK(stress_report_csv_row("g0", 3, 0.25, "sp_sgd", r) == "g0,3,0.25,sp_sgd,0,0,1,3");
  }
}
