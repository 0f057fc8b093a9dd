#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ntt/filter.hpp"
#include "ntt/types.hpp"

namespace ntt {

// One scheduled target: born at frame_birth with the given state, removed
// at frame_death (exclusive; INT_MAX-ish for "never").
struct BirthSpec {
  int frame_birth = 0;
  int frame_death = 0;
  Eigen::VectorXd state0;  // 6-D [cx, cy, vx, vy, w, h]
};

struct Scenario {
  std::string name;
  int n_types = 1;
  int frame_count = 0;
  Region region;
  std::vector<std::vector<BirthSpec>> schedule;   // per type
  std::vector<double> sigma_v;                    // per type, process noise
  std::vector<std::vector<double>> sigma_r;       // [detector][type]
  std::vector<std::vector<double>> p_detect;      // [detector][type]
  std::vector<double> clutter_rate;               // per detector
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws std::invalid_argument naming the field
};

// Constant-velocity transition and process noise for one type (step = 1).
Eigen::MatrixXd cv_transition();
Eigen::MatrixXd cv_process_noise(double sigma_v);
// Projects [cx, cy, vx, vy, w, h] onto [cx, cy, w, h].
Eigen::MatrixXd box_projection();

// Trajectories by x <- F x + N(0, Q), clipped into the region, targets
// present on [frame_birth, frame_death). Deterministic in scn.rng_seed.
std::vector<GroundTruthFrame> generate_truth(const Scenario& scn);

// One detection frame per detector: independent Bernoulli firing on every
// target (diagonal = true channel, off-diagonal = confusion), then Poisson
// clutter uniform over the region box. Measurements are clipped into the
// box and tagged with their provenance. Deterministic in (seed, frame).
std::vector<DetectionFrame> simulate_detections(const GroundTruthFrame& truth,
                                                const Scenario& scn);

// Tracking model matching the scenario's generator parameters, with the
// standard thresholds; p_survival supplied by the caller.
FilterConfig filter_config_for(const Scenario& scn, double p_survival = 0.99);

// Shipped presets: "football3" (three interacting types on a pitch-sized
// region), "urban2" (pedestrians and vehicles on a wide strip) and
// "single1" (one type, one target, for steady-state checks).
std::vector<Scenario> preset_scenarios();
Scenario preset_scenario(const std::string& name);  // throws on unknown name

// Stable per-frame / per-replicate seed derivation (splitmix64 over the
// base seed and stream tags).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index);

}  // namespace ntt
