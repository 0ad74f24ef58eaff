#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "embedlayout/graph.hpp"
#include "embedlayout/layout.hpp"

namespace embedlayout {

/// Thrown when every admissible pair is drawn at zero distance.
class DegenerateLayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-form minimizer of sum d^-2 (a |X_i - X_j| - d)^2 over a > 0:
///   a = sum d^-1 |X_i - X_j| / sum d^-2 |X_i - X_j|^2
/// over the same admissible pairs the layout optimizer uses.
double alpha_min(const Layout& x, const DistanceMatrix& d);
double alpha_min(const Layout& x, const PairSet& pairs);

/// Scale-normalized stress: weighted stress of alpha_min * X.
double sns(const Layout& x, const DistanceMatrix& d);
double sns(const Layout& x, const PairSet& pairs);

/// Weighted (w = d^-2, identical to stress_loss) or unit-weight raw stress.
double raw_stress(const Layout& x, const DistanceMatrix& d, bool weighted = true);

/// Repo convention, not used for acceptance: weighted raw stress divided by
/// the admissible pair count.
double normalized_stress(const Layout& x, const DistanceMatrix& d);

struct StressReport {
  double raw_stress = 0.0;
  double sns = 0.0;
  double alpha_min = 0.0;
  std::size_t pairs_evaluated = 0;
};

StressReport evaluate_layout(const Layout& x, const DistanceMatrix& d);

inline constexpr const char* kStressReportCsvHeader =
    "graph_id,n,p,method,raw_stress,sns,alpha_min,pairs";

/// One CSV row: graph_id,n,p,method,raw_stress,sns,alpha_min,pairs.
std::string stress_report_csv_row(const std::string& graph_id, std::size_t n, double p,
                                  const std::string& method, const StressReport& report);

}  // namespace embedlayout
