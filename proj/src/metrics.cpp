#include "ntt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ntt/assignment.hpp"

namespace ntt {

double ospa(const PointSet& x, const PointSet& y, double p, double c) {
  if (!(p >= 1.0)) throw std::invalid_argument("ospa: order p must be >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("ospa: cutoff c must be > 0");

  const PointSet* small = &x;
  const PointSet* big = &y;
  if (small->size() > big->size()) std::swap(small, big);
  const int m = int(small->size());
  const int n = int(big->size());
  if (n == 0) return 0.0;
  if (m == 0) return c;

  Eigen::MatrixXd costs(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = std::min(c, ((*small)[i] - (*big)[j]).norm());
      costs(i, j) = std::pow(d, p);
    }
  }
  const double assigned = solve_assignment(costs).total_cost;
  const double total = assigned + std::pow(c, p) * double(n - m);
  return std::pow(total / double(n), 1.0 / p);
}

DiscriminationResult discrimination_rate(const std::vector<TypedPoint>& estimates,
                                         const std::vector<TypedPoint>& truth,
                                         double gate) {
  DiscriminationResult res;
  res.empty_estimates = estimates.empty();
  for (const auto& e : estimates) {
    int best = -1;
    double best_dist = gate;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double d = (truth[t].pos - e.pos).norm();
      if (d <= best_dist && (best < 0 || d < best_dist)) {
        best = int(t);
        best_dist = d;
      }
    }
    if (best < 0) {
      ++res.false_tracks;
      continue;
    }
    ++res.considered;
    if (truth[best].type == e.type) ++res.correct;
  }
  res.rate = res.considered > 0 ? double(res.correct) / double(res.considered)
                                : 1.0;
  return res;
}

AxiomsReport ospa_axioms_check(const std::vector<PointSet>& sets, double p,
                               double c) {
  AxiomsReport rep;
  const double tol = 1e-9;
  const int n = int(sets.size());
  for (int i = 0; i < n; ++i) {
    if (std::abs(ospa(sets[i], sets[i], p, c)) > tol) ++rep.identity_failures;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      ++rep.pairs_checked;
      const double ab = ospa(sets[i], sets[j], p, c);
      const double ba = ospa(sets[j], sets[i], p, c);
      if (std::abs(ab - ba) > tol) ++rep.symmetry_failures;
      if (ab < -tol || ab > c + tol) ++rep.bound_failures;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n && i != j && j != k && i != k; ++k) {
        ++rep.triples_checked;
        const double ik = ospa(sets[i], sets[k], p, c);
        const double ij = ospa(sets[i], sets[j], p, c);
        const double jk = ospa(sets[j], sets[k], p, c);
        if (ik > ij + jk + tol) ++rep.triangle_failures;
      }
    }
  }
  return rep;
}

std::string format_metrics_csv(const MetricSeries& series) {
  std::string out = "frame,ospa,card_truth,card_est,card_err,disc_rate\n";
  char buf[160];
  for (const auto& r : series) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%d,%d,%d,%.17g\n", r.frame,
                  r.ospa, r.card_truth, r.card_est, r.card_err, r.disc_rate);
    out += buf;
  }
  return out;
}

MetricSeries parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "frame,ospa,card_truth,card_est,card_err,disc_rate") {
    throw std::runtime_error("metrics csv: missing or wrong header");
  }
  MetricSeries series;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    MetricRecord r;
    if (std::sscanf(line.c_str(), "%d,%lg,%d,%d,%d,%lg", &r.frame, &r.ospa,
                    &r.card_truth, &r.card_est, &r.card_err,
                    &r.disc_rate) != 6) {
      throw std::runtime_error("metrics csv: malformed row at line " +
                               std::to_string(line_no));
    }
    series.push_back(r);
  }
  return series;
}

double label_switch_rate(const std::vector<std::vector<TruthPoint>>& truth,
                         const std::vector<std::vector<LabeledPoint>>& ests,
                         double gate) {
  if (truth.size() != ests.size()) {
    throw std::invalid_argument("label_switch_rate: frame count mismatch");
  }
  // Per frame, match truth targets to labeled estimates by distance.
  std::vector<std::map<int, int>> matched(truth.size());  // truth id -> label
  for (std::size_t f = 0; f < truth.size(); ++f) {
    const auto& ts = truth[f];
    const auto& es = ests[f];
    if (ts.empty() || es.empty()) continue;
    Eigen::MatrixXd costs(ts.size(), es.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      for (std::size_t j = 0; j < es.size(); ++j) {
        costs(int(i), int(j)) = (ts[i].pos - es[j].pos).norm();
      }
    }
    for (const auto& [i, j] : solve_assignment(costs).pairs) {
      if (costs(i, j) <= gate) matched[f][ts[i].id] = es[j].label;
    }
  }

  int transitions = 0;
  int switches = 0;
  for (std::size_t f = 1; f < matched.size(); ++f) {
    for (const auto& [id, label] : matched[f]) {
      const auto prev = matched[f - 1].find(id);
      if (prev == matched[f - 1].end()) continue;
      ++transitions;
      if (prev->second != label) ++switches;
    }
  }
  return transitions > 0 ? double(switches) / double(transitions) : 0.0;
}

}  // namespace ntt
