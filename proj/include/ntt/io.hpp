#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ntt/filter.hpp"
#include "ntt/metrics.hpp"
#include "ntt/sim.hpp"

namespace ntt {

enum class DetectionFormat { sim_csv, mot };
DetectionFormat parse_detection_format(const std::string& name);
const char* detection_format_name(DetectionFormat f);

// Scalar tracking knobs layered on top of the scenario's physical model.
struct FilterSettings {
  double p_survival = 0.99;
  double birth_weight = 1e-4;
  double prune_threshold = 1e-5;
  double merge_threshold = 4.0;
  double extract_threshold = 0.5;
  int max_components = 100;
};

struct MetricSettings {
  double ospa_p = 1.0;
  double ospa_c = 100.0;
  double gate = 50.0;  // labeling and discrimination gate, pixels
};

struct RunConfig {
  std::optional<std::string> preset;   // shipped scenario by name...
  std::optional<Scenario> scenario;    // ...or a fully inline one
  std::optional<std::string> detections_path;  // else simulate from scenario
  DetectionFormat detections_format = DetectionFormat::sim_csv;
  std::optional<std::string> truth_path;
  std::uint64_t seed = 1;
  std::string mode = "ntype";  // ntype | independent | detections | compare
  int replicates = 1;
  std::string out_dir = "out";
  FilterSettings filter;
  MetricSettings metrics;

  void validate() const;  // field-level errors
  // The scenario this run works with (preset expanded, seed applied).
  Scenario resolved_scenario() const;
};

// Strict JSON: unknown keys anywhere are errors, every value is validated.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& where);
std::string serialize_config(const RunConfig& cfg);

std::string serialize_scenario(const Scenario& scn);
Scenario parse_scenario(const std::string& text);

// Writes via a temp file in the same directory plus an atomic rename, so a
// failed run never leaves a partial file behind.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content);

// --- ground truth CSV: frame,truth_id,type,cx,cy,vx,vy,w,h ---
std::string format_truth_csv(const std::vector<GroundTruthFrame>& frames);
std::vector<GroundTruthFrame> parse_truth_csv(const std::string& text);
std::vector<GroundTruthFrame> load_truth_csv(const std::filesystem::path& path);

// --- detections CSV: frame,detector,cx,cy,w,h[,provenance] ---
// Outer index frame, inner index detector.
std::string format_detections_csv(
    const std::vector<std::vector<DetectionFrame>>& frames,
    bool with_provenance);
std::vector<std::vector<DetectionFrame>> parse_detections_csv(
    const std::string& text);
std::vector<std::vector<DetectionFrame>> parse_mot(const std::string& text);
std::vector<std::vector<DetectionFrame>> ingest_detections(
    const std::filesystem::path& path, DetectionFormat format);

// --- estimates CSV: frame,type,label,cx,cy,vx,vy,w,h,weight ---
struct EstimateRow {
  int frame = 0;
  int type = 0;
  int label = 0;
  Eigen::VectorXd state;  // 6-D
  double weight = 0.0;
};
std::string format_estimates_csv(const std::vector<EstimateRow>& rows);
std::vector<EstimateRow> parse_estimates_csv(const std::string& text);
std::vector<EstimateRow> load_estimates_csv(const std::filesystem::path& path);

struct RunSummary {
  std::string mode;
  int frames = 0;
  bool has_metrics = false;
  double mean_ospa = 0.0;
  double mean_card_error = 0.0;
  double discrimination = 1.0;  // pooled correct / considered over the run
  double label_switch = 0.0;
  double wall_ms_per_frame = 0.0;
};

struct RunArtifacts {
  std::filesystem::path estimates_path;
  std::filesystem::path metrics_path;  // empty when no truth was available
  std::filesystem::path summary_path;
  RunSummary summary;
  MetricSeries series;
};

// Full tracking run: obtain detections (file or simulation), run the chosen
// mode, label tracks, score against truth when present, and write
// estimates/metrics/summary into cfg.out_dir.
RunArtifacts run_tracking(const RunConfig& cfg);

// Metrics for already-written artifacts (the evaluate subcommand).
RunArtifacts evaluate_estimates(const std::filesystem::path& estimates_path,
                                const std::filesystem::path& truth_path,
                                const MetricSettings& ms,
                                const std::filesystem::path& out_dir);

struct MethodStats {
  std::string mode;
  std::vector<double> ospa;      // per replicate means
  std::vector<double> card_err;  // per replicate means
  double mean_ospa = 0.0;
  double mean_card_error = 0.0;
  double discrimination = 1.0;
  double wall_ms_per_frame = 0.0;
};

struct CompareResult {
  std::vector<MethodStats> methods;  // ntype, independent, detections
  // one-sided paired sign tests on per-replicate means
  double p_ospa_ntype_vs_independent = 1.0;
  double p_ospa_independent_vs_detections = 1.0;
  double p_card_ntype_vs_independent = 1.0;
  double p_card_independent_vs_detections = 1.0;
  std::filesystem::path table_path;    // per-replicate CSV
  std::filesystem::path summary_path;  // aggregate JSON
};

// Runs all three methods on identical per-replicate detection streams and
// emits a side-by-side table.
CompareResult compare_methods(const RunConfig& cfg);

// Exact one-sided binomial sign test: probability of >= wins successes in
// trials fair coin flips. Ties must be excluded by the caller.
double sign_test_p_value(int wins, int trials);

}  // namespace ntt
