#pragma once

#include <utility>
#include <vector>

#include "ntt/gaussian.hpp"
#include "ntt/types.hpp"

namespace ntt {

// Intensity (PHD) of one target type as a Gaussian mixture. Total mass is
// the expected number of targets of that type, not a probability.
struct TypedIntensity {
  int type_index = 0;
  std::vector<GaussianComponent> components;

  double total_mass() const {
    double s = 0.0;
    for (const auto& c : components) s += c.weight;
    return s;
  }
};

struct TypedEstimate {
  int type_index = 0;
  Eigen::VectorXd mean;
  double weight = 0.0;
  int extracted_count = 0;  // how many estimates this type produced this frame
};

// Per-type motion, birth and clutter model.
struct TypeModel {
  Eigen::MatrixXd f;          // state transition
  Eigen::MatrixXd q;          // process noise
  double p_survival = 0.99;
  Eigen::MatrixXd birth_cov;
  double birth_weight = 1e-4;
  double clutter_rate = 0.0;  // expected clutter count per frame in this stream
};

// Cross-detector model: index [j][i] describes detector j observing a
// type-i target. The diagonal is the true detection channel; off-diagonal
// entries are the confusion channels that feed c_t.
struct FilterConfig {
  int n_types = 1;
  std::vector<TypeModel> types;
  std::vector<std::vector<double>> p_detect;       // [detector][type]
  std::vector<std::vector<Eigen::MatrixXd>> h;     // [detector][type]
  std::vector<std::vector<Eigen::MatrixXd>> r;     // [detector][type]
  Region region;                                   // clutter support box
  double prune_threshold = 1e-5;
  double merge_threshold = 4.0;   // squared Mahalanobis form
  double extract_threshold = 0.5;
  int max_components = 100;

  // Throws std::invalid_argument naming the offending field. Warns on
  // stderr when some off-diagonal detection probability dominates the
  // diagonal (legal but useless).
  void validate() const;

  int state_dim() const { return types.empty() ? 0 : int(types[0].f.rows()); }
  int meas_dim() const {
    return h.empty() || h[0].empty() ? 0 : int(h[0][0].rows());
  }

  // log(lambda_i * c_i(z)) with c_i uniform over the region box; -inf
  // outside the box or when the rate is zero.
  double clutter_log_intensity(int type_index, const Eigen::VectorXd& z) const;
};

// One birth component per measurement: position/extent copied, velocity 0.
std::vector<GaussianComponent> birth_intensity(
    const std::vector<Eigen::VectorXd>& measurements, const FilterConfig& cfg,
    int type_index);

// Output order: births first (not propagated this frame), then the prior
// components pushed through (F, Q, p_survival).
TypedIntensity predict(const TypedIntensity& prior,
                       const std::vector<GaussianComponent>& births,
                       const FilterConfig& cfg);

// log c_t for type i at z: confusion mass contributed by every other type's
// predicted intensity through detector i's confusion channels. -inf when no
// other type can contribute (N=1 or zero off-diagonal probabilities).
double confusion_clutter_logintensity(
    const Eigen::VectorXd& z, int type_index,
    const std::vector<TypedIntensity>& predicted, const FilterConfig& cfg);

// PHD update for one type against its own detector's frame. Needs the
// predicted snapshot of ALL types for the confusion term. Output component
// count is exactly (|Z|+1) * |predicted_i|: the missed-detection block
// first, then one block per measurement.
TypedIntensity update(const TypedIntensity& predicted_i,
                      const DetectionFrame& frame_i,
                      const std::vector<TypedIntensity>& all_predicted,
                      const FilterConfig& cfg);

// Drops weights below prune_threshold, then greedily merges clusters within
// merge_threshold around the heaviest survivor (moment-matched), then caps
// the count at max_components keeping the heaviest. Conserves post-prune
// mass apart from the cap.
TypedIntensity prune_and_merge(const TypedIntensity& intensity,
                               const FilterConfig& cfg);

// One estimate per component with weight strictly above extract_threshold,
// ordered by descending weight.
std::vector<TypedEstimate> extract_states(const TypedIntensity& intensity,
                                          const FilterConfig& cfg);

struct StepResult {
  std::vector<TypedIntensity> state;                 // pruned/merged posteriors
  std::vector<std::vector<TypedEstimate>> estimates; // per type
};

// Full recursion for one frame: birth -> predict (all types) -> update each
// type against the immutable predicted snapshot -> prune/merge -> extract.
StepResult step(const std::vector<TypedIntensity>& state,
                const std::vector<DetectionFrame>& frames,
                const FilterConfig& cfg);

// Stateful wrapper that owns the per-type intensities.
class NTypeFilter {
 public:
  explicit NTypeFilter(FilterConfig cfg);

  const FilterConfig& config() const { return cfg_; }
  const std::vector<TypedIntensity>& state() const { return state_; }

  std::vector<std::vector<TypedEstimate>> step(
      const std::vector<DetectionFrame>& frames);

 private:
  FilterConfig cfg_;
  std::vector<TypedIntensity> state_;
};

// Same model with every confusion channel removed; the filter then behaves
// as independent per-type trackers.
FilterConfig zero_confusion(FilterConfig cfg);

// Extracts the standalone single-type model of type i (its own detector
// channel only), for running one type in isolation.
FilterConfig single_type_config(const FilterConfig& cfg, int type_index);

}  // namespace ntt
