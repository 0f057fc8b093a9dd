#include "ntt/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ntt {

namespace {

// Hungarian algorithm with row/column potentials and shortest augmenting
// paths. Expects nr <= nc; every row ends up matched.
std::vector<int> hungarian_rows_to_cols(const Eigen::MatrixXd& a) {
  const int nr = int(a.rows());
  const int nc = int(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(nr + 1, 0.0), v(nc + 1, 0.0);
  std::vector<int> match(nc + 1, 0);  // 1-based row matched to each column
  std::vector<int> way(nc + 1, 0);

  for (int i = 1; i <= nr; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_v(nc + 1, kInf);
    std::vector<bool> used(nc + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= nc; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < min_v[j]) {
          min_v[j] = cur;
          way[j] = j0;
        }
        if (min_v[j] < delta) {
          delta = min_v[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= nc; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_v[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(nr, -1);
  for (int j = 1; j <= nc; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& costs) {
  const int nr = int(costs.rows());
  const int nc = int(costs.cols());
  Assignment out;
  if (nr == 0 || nc == 0) {
    for (int i = 0; i < nr; ++i) out.unmatched_rows.push_back(i);
    for (int j = 0; j < nc; ++j) out.unmatched_cols.push_back(j);
    return out;
  }
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < nc; ++j) {
      const double c = costs(i, j);
      if (!std::isfinite(c) || c < 0.0) {
        throw std::invalid_argument(
            "solve_assignment: costs must be finite and nonnegative");
      }
    }
  }

  std::vector<int> row_to_col;
  if (nr <= nc) {
    row_to_col = hungarian_rows_to_cols(costs);
  } else {
    const auto col_to_row = hungarian_rows_to_cols(costs.transpose());
    row_to_col.assign(nr, -1);
    for (int j = 0; j < nc; ++j) {
      if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = j;
    }
  }

  std::vector<bool> col_used(nc, false);
  for (int i = 0; i < nr; ++i) {
    if (row_to_col[i] >= 0) {
      out.pairs.emplace_back(i, row_to_col[i]);
      out.total_cost += costs(i, row_to_col[i]);
      col_used[row_to_col[i]] = true;
    } else {
      out.unmatched_rows.push_back(i);
    }
  }
  for (int j = 0; j < nc; ++j) {
    if (!col_used[j]) out.unmatched_cols.push_back(j);
  }
  return out;
}

LabelResult label_frame(const std::vector<Track>& tracks,
                        const std::vector<TypedEstimate>& estimates, int frame,
                        double gate, int next_label) {
  const int nt = int(tracks.size());
  const int ne = int(estimates.size());

  Eigen::MatrixXd costs(nt, ne);
  for (int i = 0; i < nt; ++i) {
    const Eigen::Vector2d prev = tracks[i].last_state.head<2>();
    for (int j = 0; j < ne; ++j) {
      costs(i, j) = (estimates[j].mean.head<2>() - prev).norm();
    }
  }

  const Assignment asg = solve_assignment(costs);

  std::vector<int> est_label(ne, -1);
  std::vector<bool> track_matched(nt, false);
  LabelResult res;
  for (const auto& [i, j] : asg.pairs) {
    if (costs(i, j) > gate) continue;  // too far apart to be the same target
    track_matched[i] = true;
    est_label[j] = tracks[i].label;
  }

  for (int i = 0; i < nt; ++i) {
    if (!track_matched[i]) res.deleted_labels.push_back(tracks[i].label);
  }

  res.next_label = next_label;
  for (int j = 0; j < ne; ++j) {
    if (est_label[j] < 0) {
      est_label[j] = res.next_label++;
      res.new_labels.push_back(est_label[j]);
    }
  }

  // Survivors keep their slot order; new tracks follow in estimate order.
  for (int i = 0; i < nt; ++i) {
    if (!track_matched[i]) continue;
    Track t = tracks[i];
    for (int j = 0; j < ne; ++j) {
      if (est_label[j] == t.label) {
        t.last_state = estimates[j].mean;
        break;
      }
    }
    t.last_seen_frame = frame;
    ++t.age;
    res.tracks.push_back(std::move(t));
  }
  for (int j = 0; j < ne; ++j) {
    res.labeled.push_back({estimates[j], est_label[j]});
    if (std::find(res.new_labels.begin(), res.new_labels.end(), est_label[j]) !=
        res.new_labels.end()) {
      Track t;
      t.label = est_label[j];
      t.type_index = estimates[j].type_index;
      t.last_state = estimates[j].mean;
      t.last_seen_frame = frame;
      t.age = 1;
      res.tracks.push_back(std::move(t));
    }
  }
  return res;
}

std::vector<LabeledEstimate> TrackLabeler::update(
    const std::vector<TypedEstimate>& estimates, int frame) {
  for (const auto& e : estimates) {
    if (e.type_index != type_index_) {
      throw std::invalid_argument(
          "TrackLabeler: estimate type does not match this labeler");
    }
  }
  auto res = label_frame(tracks_, estimates, frame, gate_, next_label_);
  tracks_ = std::move(res.tracks);
  next_label_ = res.next_label;
  return std::move(res.labeled);
}

}  // namespace ntt
