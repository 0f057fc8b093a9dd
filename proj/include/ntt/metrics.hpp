#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ntt {

using PointSet = std::vector<Eigen::Vector2d>;

// Optimal sub-pattern assignment distance of order p with cutoff c on 2-D
// centroids. Both sets empty -> 0 by convention.
double ospa(const PointSet& x, const PointSet& y, double p, double c);

inline int cardinality_error(int truth_count, int est_count) {
  return std::abs(truth_count - est_count);
}

struct TypedPoint {
  int type = 0;
  Eigen::Vector2d pos;
};

struct DiscriminationResult {
  double rate = 1.0;     // correct / considered; 1 when nothing is considered
  int considered = 0;    // estimates with some truth target within the gate
  int correct = 0;       // of those, estimates whose type matches
  int false_tracks = 0;  // estimates with no truth target within the gate
  bool empty_estimates = false;
};

// Fraction of estimates whose nearest ground-truth target within the gate
// has the same type. Estimates with nothing nearby are excluded from the
// denominator and tallied as false tracks.
DiscriminationResult discrimination_rate(const std::vector<TypedPoint>& estimates,
                                         const std::vector<TypedPoint>& truth,
                                         double gate);

struct AxiomsReport {
  int pairs_checked = 0;
  int triples_checked = 0;
  int identity_failures = 0;
  int symmetry_failures = 0;
  int triangle_failures = 0;
  int bound_failures = 0;
  bool ok() const {
    return identity_failures == 0 && symmetry_failures == 0 &&
           triangle_failures == 0 && bound_failures == 0;
  }
};

// Checks the metric axioms (identity, symmetry, triangle inequality,
// boundedness by c) on every pair and triple of the supplied sets.
AxiomsReport ospa_axioms_check(const std::vector<PointSet>& sets, double p,
                               double c);

struct MetricRecord {
  int frame = 0;
  double ospa = 0.0;
  int card_truth = 0;
  int card_est = 0;
  int card_err = 0;
  double disc_rate = 1.0;
};

using MetricSeries = std::vector<MetricRecord>;

// CSV with the fixed header frame,ospa,card_truth,card_est,card_err,disc_rate.
std::string format_metrics_csv(const MetricSeries& series);
MetricSeries parse_metrics_csv(const std::string& text);

struct LabeledPoint {
  int label = 0;
  Eigen::Vector2d pos;
};

struct TruthPoint {
  int id = 0;
  Eigen::Vector2d pos;
};

// Fraction of ground-truth targets matched in consecutive frames whose
// estimate label changed between those frames. Diagnostic only.
double label_switch_rate(const std::vector<std::vector<TruthPoint>>& truth,
                         const std::vector<std::vector<LabeledPoint>>& ests,
                         double gate);

}  // namespace ntt
