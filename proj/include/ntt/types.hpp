#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ntt {

// Axis-aligned support box for measurements [cx, cy, w, h].
// Positions live in [0,width] x [0,height], extents in [w,h] ranges.
struct Region {
  double width = 0.0;
  double height = 0.0;
  double w_min = 0.0;
  double w_max = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;

  double volume() const {
    return width * height * (w_max - w_min) * (h_max - h_min);
  }

  bool contains(const Eigen::VectorXd& z) const {
    return z.size() == 4 && z(0) >= 0.0 && z(0) <= width && z(1) >= 0.0 &&
           z(1) <= height && z(2) >= w_min && z(2) <= w_max && z(3) >= h_min &&
           z(3) <= h_max;
  }
};

// Where a simulated measurement came from. The tracking path never looks at
// this; it exists so tests and diagnostics can audit the generator.
struct Provenance {
  enum class Kind { True, Confusion, Clutter };
  Kind kind = Kind::Clutter;
  int truth_id = -1;     // valid for True and Confusion
  int source_type = -1;  // valid for Confusion
};

// One frame of output from a single detector.
struct DetectionFrame {
  int frame = 0;
  int detector = 0;
  std::vector<Eigen::VectorXd> measurements;  // each 4-D [cx, cy, w, h]
  std::vector<Provenance> provenance;         // empty unless tagged by the simulator
};

struct TruthTarget {
  int id = 0;
  int type = 0;
  Eigen::VectorXd state;  // 6-D [cx, cy, vx, vy, w, h]
};

struct GroundTruthFrame {
  int frame = 0;
  std::vector<TruthTarget> targets;
};

}  // namespace ntt
