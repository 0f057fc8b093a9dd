#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ntt/filter.hpp"

namespace ntt {

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;
};

// Minimum-cost bipartite matching of size min(rows, cols) via the Hungarian
// algorithm (shortest augmenting paths with potentials, O(n^3)). Costs must
// be finite and nonnegative; rectangular matrices are fine; an empty matrix
// yields an empty assignment.
Assignment solve_assignment(const Eigen::MatrixXd& costs);

struct Track {
  int label = 0;
  int type_index = 0;
  Eigen::VectorXd last_state;
  int last_seen_frame = 0;
  int age = 1;  // frames this label has been alive
};

struct LabeledEstimate {
  TypedEstimate estimate;
  int label = 0;
};

struct LabelResult {
  std::vector<Track> tracks;  // survivors in track order, then new tracks
  std::vector<LabeledEstimate> labeled;  // in estimate order
  std::vector<int> deleted_labels;
  std::vector<int> new_labels;
  int next_label = 0;  // counter after handing out fresh labels
};

// Matches tracks to estimates by centroid distance, rejects matches beyond
// the gate, deletes unmatched tracks immediately, and gives unmatched
// estimates fresh labels starting at next_label. Pure function; the caller
// carries the counter between frames.
LabelResult label_frame(const std::vector<Track>& tracks,
                        const std::vector<TypedEstimate>& estimates, int frame,
                        double gate, int next_label);

// Per-type stateful wrapper around label_frame.
class TrackLabeler {
 public:
  TrackLabeler(int type_index, double gate)
      : type_index_(type_index), gate_(gate) {}

  std::vector<LabeledEstimate> update(
      const std::vector<TypedEstimate>& estimates, int frame);

  const std::vector<Track>& tracks() const { return tracks_; }
  int type_index() const { return type_index_; }

 private:
  int type_index_;
  double gate_;
  int next_label_ = 0;
  std::vector<Track> tracks_;
};

}  // namespace ntt
