// nttrack: simulate / track / evaluate for the N-type GM-PHD tracker.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ntt/io.hpp"
#include "ntt/kernels.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON run config path");
  cmd->add_option("--preset", a.preset,
                  "built-in scenario (football3, urban2, single1)");
  cmd->add_option("--seed", a.seed, "RNG seed (overrides config)");
  cmd->add_option("--out", a.out_dir, "output directory (overrides config)");
}

ntt::RunConfig resolve_config(const CommonArgs& a) {
  ntt::RunConfig cfg;
  if (!a.config_path.empty()) {
    cfg = ntt::load_config(a.config_path);
  }
  if (!a.preset.empty()) {
    cfg.preset = a.preset;
    cfg.scenario.reset();
  }
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (!cfg.preset && !cfg.scenario) {
    throw std::runtime_error("need --config or --preset");
  }
  return cfg;
}

int cmd_simulate(const CommonArgs& a, int frames_override, bool provenance) {
  ntt::RunConfig cfg = resolve_config(a);
  ntt::Scenario scn = cfg.resolved_scenario();
  if (frames_override > 0) scn.frame_count = frames_override;
  scn.validate();

  const auto truth = ntt::generate_truth(scn);
  std::vector<std::vector<ntt::DetectionFrame>> detections;
  detections.reserve(truth.size());
  for (const auto& tf : truth) {
    detections.push_back(ntt::simulate_detections(tf, scn));
  }

  const std::filesystem::path out(cfg.out_dir);
  ntt::atomic_write_file(out / "truth.csv", ntt::format_truth_csv(truth));
  ntt::atomic_write_file(out / "detections.csv",
                         ntt::format_detections_csv(detections, provenance));
  ntt::atomic_write_file(out / "scenario.json", ntt::serialize_scenario(scn));

  std::size_t n_meas = 0;
  for (const auto& per : detections) {
    for (const auto& d : per) n_meas += d.measurements.size();
  }
  std::printf("simulated %d frames, %zu detections -> %s\n", scn.frame_count,
              n_meas, out.string().c_str());
  return 0;
}

int cmd_track(const CommonArgs& a, const std::string& detections_path,
              const std::string& format, const std::string& truth_path,
              const std::string& mode, int replicates) {
  ntt::RunConfig cfg = resolve_config(a);
  if (!detections_path.empty()) cfg.detections_path = detections_path;
  if (!format.empty()) cfg.detections_format = ntt::parse_detection_format(format);
  if (!truth_path.empty()) cfg.truth_path = truth_path;
  if (!mode.empty()) cfg.mode = mode;
  if (replicates > 0) cfg.replicates = replicates;
  cfg.validate();

  if (cfg.mode == "compare") {
    const auto res = ntt::compare_methods(cfg);
    std::printf("%-12s %12s %12s %16s %12s\n", "mode", "mean_ospa",
                "mean_card", "discrimination", "ms/frame");
    for (const auto& st : res.methods) {
      std::printf("%-12s %12.4f %12.4f %15.2f%% %12.3f\n", st.mode.c_str(),
                  st.mean_ospa, st.mean_card_error, 100.0 * st.discrimination,
                  st.wall_ms_per_frame);
    }
    std::printf("sign tests (one-sided): ospa ntype<independent p=%.3g, "
                "independent<detections p=%.3g\n",
                res.p_ospa_ntype_vs_independent,
                res.p_ospa_independent_vs_detections);
    std::printf("                        card ntype<independent p=%.3g, "
                "independent<detections p=%.3g\n",
                res.p_card_ntype_vs_independent,
                res.p_card_independent_vs_detections);
    std::printf("table: %s\n", res.table_path.string().c_str());
    return 0;
  }

  const auto art = ntt::run_tracking(cfg);
  const auto& s = art.summary;
  std::printf("mode=%s frames=%d backend=%s\n", s.mode.c_str(), s.frames,
              ntt::kernels::backend_name(ntt::kernels::active_backend()));
  if (s.has_metrics) {
    std::printf("mean_ospa=%.4f mean_card_error=%.4f discrimination=%.2f%% "
                "label_switch=%.4f\n",
                s.mean_ospa, s.mean_card_error, 100.0 * s.discrimination,
                s.label_switch);
  }
  std::printf("wall_ms_per_frame=%.3f\n", s.wall_ms_per_frame);
  std::printf("estimates: %s\n", art.estimates_path.string().c_str());
  if (!art.metrics_path.empty()) {
    std::printf("metrics:   %s\n", art.metrics_path.string().c_str());
  }
  std::printf("summary:   %s\n", art.summary_path.string().c_str());
  return 0;
}

int cmd_evaluate(const std::string& estimates_path,
                 const std::string& truth_path, double ospa_p, double ospa_c,
                 double gate, const std::string& out_dir) {
  ntt::MetricSettings ms;
  ms.ospa_p = ospa_p;
  ms.ospa_c = ospa_c;
  ms.gate = gate;
  const auto art =
      ntt::evaluate_estimates(estimates_path, truth_path, ms, out_dir);
  const auto& s = art.summary;
  std::printf("frames=%d mean_ospa=%.4f mean_card_error=%.4f "
              "discrimination=%.2f%%\n",
              s.frames, s.mean_ospa, s.mean_card_error,
              100.0 * s.discrimination);
  std::printf("metrics: %s\n", art.metrics_path.string().c_str());
  std::printf("summary: %s\n", art.summary_path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N-type GM-PHD multi-target tracker"};
  app.require_subcommand(1);

  CommonArgs sim_args;
  int sim_frames = 0;
  bool sim_provenance = false;
  CLI::App* sim = app.add_subcommand("simulate", "generate truth + detections");
  add_common(sim, sim_args);
  sim->add_option("--frames", sim_frames, "override scenario frame count");
  sim->add_flag("--provenance", sim_provenance,
                "include a provenance column in detections.csv");

  CommonArgs trk_args;
  std::string trk_detections, trk_format, trk_truth, trk_mode;
  int trk_replicates = 0;
  CLI::App* trk = app.add_subcommand("track", "run the tracker");
  add_common(trk, trk_args);
  trk->add_option("--detections", trk_detections,
                  "detection file (otherwise simulated from the scenario)");
  trk->add_option("--format", trk_format, "detection file format")
      ->check(CLI::IsMember({"sim_csv", "mot"}));
  trk->add_option("--truth", trk_truth, "ground truth CSV for scoring");
  trk->add_option("--mode", trk_mode, "tracking mode")
      ->check(CLI::IsMember({"ntype", "independent", "detections", "compare"}));
  trk->add_option("--replicates", trk_replicates,
                  "Monte Carlo replicates (compare mode)");

  std::string ev_estimates, ev_truth, ev_out = "out";
  double ev_p = 1.0, ev_c = 100.0, ev_gate = 50.0;
  CLI::App* ev = app.add_subcommand("evaluate", "score estimates against truth");
  ev->add_option("--estimates", ev_estimates, "estimates CSV")->required();
  ev->add_option("--truth", ev_truth, "ground truth CSV")->required();
  ev->add_option("--ospa-p", ev_p, "OSPA order p");
  ev->add_option("--ospa-c", ev_c, "OSPA cutoff c");
  ev->add_option("--gate", ev_gate, "discrimination gate, pixels");
  ev->add_option("--out", ev_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_args, sim_frames, sim_provenance);
    if (trk->parsed()) {
      return cmd_track(trk_args, trk_detections, trk_format, trk_truth,
                       trk_mode, trk_replicates);
    }
    if (ev->parsed()) {
      return cmd_evaluate(ev_estimates, ev_truth, ev_p, ev_c, ev_gate, ev_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
