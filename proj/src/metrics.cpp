#include "embedlayout/metrics.hpp"

#include <cmath>

#include "io_util.hpp"

namespace embedlayout {

namespace {

void check_size(const Layout& x, std::size_t n) {
  if (x.size() != n) {
    throw std::invalid_argument("layout has " + std::to_string(x.size()) +
                                " nodes but distances cover " + std::to_string(n));
  }
}

}  // namespace

double alpha_min(const Layout& x, const PairSet& pairs) {
  check_size(x, pairs.n);
  double num = 0.0;
  double den = 0.0;
  for (const auto& t : pairs.pairs) {
    const double len = distance(x[t.i], x[t.j]);
    num += len / t.target;
    den += len * len / (t.target * t.target);
  }
  if (!(den > 0.0)) {
    throw DegenerateLayoutError("alpha_min: no admissible pair has positive layout distance");
  }
  return num / den;
}

double alpha_min(const Layout& x, const DistanceMatrix& d) {
  check_size(x, d.size());
  return alpha_min(x, admissible_pairs(d));
}

double sns(const Layout& x, const PairSet& pairs) {
  const double a = alpha_min(x, pairs);
  double total = 0.0;
  for (const auto& t : pairs.pairs) {
    const double r = a * distance(x[t.i], x[t.j]) - t.target;
    total += t.weight * r * r;
  }
  return total;
}

double sns(const Layout& x, const DistanceMatrix& d) {
  check_size(x, d.size());
  return sns(x, admissible_pairs(d));
}

double raw_stress(const Layout& x, const DistanceMatrix& d, bool weighted) {
  check_size(x, d.size());
  auto pairs = admissible_pairs(d);
  if (!weighted) {
    for (auto& t : pairs.pairs) t.weight = 1.0;
  }
  return stress_loss(x, pairs);
}

double normalized_stress(const Layout& x, const DistanceMatrix& d) {
  check_size(x, d.size());
  const auto pairs = admissible_pairs(d);
  if (pairs.pairs.empty()) return 0.0;
  return stress_loss(x, pairs) / static_cast<double>(pairs.pairs.size());
}

StressReport evaluate_layout(const Layout& x, const DistanceMatrix& d) {
  check_size(x, d.size());
  const auto pairs = admissible_pairs(d);
  StressReport r;
  r.raw_stress = stress_loss(x, pairs);
  r.alpha_min = alpha_min(x, pairs);
  r.sns = sns(x, pairs);
  r.pairs_evaluated = pairs.pairs.size();
  return r;
}

std::string stress_report_csv_row(const std::string& graph_id, std::size_t n, double p,
                                  const std::string& method, const StressReport& report) {
  return graph_id + "," + std::to_string(n) + "," + detail::format_double(p) + "," + method + "," +
         detail::format_double(report.raw_stress) + "," + detail::format_double(report.sns) + "," +
         detail::format_double(report.alpha_min) + "," + std::to_string(report.pairs_evaluated);
}

}  // namespace embedlayout
