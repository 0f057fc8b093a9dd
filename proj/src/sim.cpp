#include "ntt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ntt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double clamp(double x, double lo, double hi) {
  return std::min(std::max(x, lo), hi);
}

void clip_state(Eigen::VectorXd& x, const Region& rg) {
  x(0) = clamp(x(0), 0.0, rg.width);
  x(1) = clamp(x(1), 0.0, rg.height);
  x(4) = clamp(x(4), rg.w_min, rg.w_max);
  x(5) = clamp(x(5), rg.h_min, rg.h_max);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ stream);
  return splitmix64(h ^ index);
}

void Scenario::validate() const {
  auto fail = [this](const std::string& msg) {
    throw std::invalid_argument("Scenario " + name + ": " + msg);
  };
  if (n_types < 1) fail("n_types must be >= 1");
  if (frame_count < 0) fail("frame_count must be >= 0");
  const auto n = static_cast<std::size_t>(n_types);
  if (schedule.size() != n) fail("schedule must have one list per type");
  if (sigma_v.size() != n) fail("sigma_v must have one entry per type");
  if (sigma_r.size() != n || p_detect.size() != n) {
    fail("sigma_r and p_detect must be n_types x n_types");
  }
  if (clutter_rate.size() != n) fail("clutter_rate must have one entry per detector");
  if (!(region.volume() > 0.0)) fail("region must have positive volume");

  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigma_v[i] >= 0.0)) fail("sigma_v[" + std::to_string(i) + "] must be >= 0");
    if (!(clutter_rate[i] >= 0.0)) {
      fail("clutter_rate[" + std::to_string(i) + "] must be >= 0");
    }
    if (sigma_r[i].size() != n || p_detect[i].size() != n) {
      fail("sigma_r and p_detect must be n_types x n_types");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const std::string at = "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (!(sigma_r[i][j] >= 0.0)) fail("sigma_r" + at + " must be >= 0");
      const double p = p_detect[i][j];
      if (!(p >= 0.0 && p <= 1.0)) fail("p_detect" + at + " outside [0,1]");
    }
    for (std::size_t s = 0; s < schedule[i].size(); ++s) {
      const auto& b = schedule[i][s];
      const std::string at =
          "schedule[" + std::to_string(i) + "][" + std::to_string(s) + "]";
      if (b.frame_birth < 0) fail(at + ".frame_birth must be >= 0");
      if (b.frame_death <= b.frame_birth) {
        fail(at + ".frame_death must be after frame_birth");
      }
      if (b.state0.size() != 6) fail(at + ".state0 must be 6-D");
    }
  }
}

Eigen::MatrixXd cv_transition() {
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(6, 6);
  f(0, 2) = 1.0;
  f(1, 3) = 1.0;
  return f;
}

Eigen::MatrixXd cv_process_noise(double sigma_v) {
  // Discretized white acceleration on the centroid plus a random walk on
  // the extent, all driven by the same noise scale.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(6, 6);
  const double s2 = sigma_v * sigma_v;
  q(0, 0) = q(1, 1) = 0.25 * s2;
  q(0, 2) = q(2, 0) = 0.5 * s2;
  q(1, 3) = q(3, 1) = 0.5 * s2;
  q(2, 2) = q(3, 3) = s2;
  q(4, 4) = q(5, 5) = s2;
  return q;
}

Eigen::MatrixXd box_projection() {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(4, 6);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  h(2, 4) = 1.0;
  h(3, 5) = 1.0;
  return h;
}

std::vector<GroundTruthFrame> generate_truth(const Scenario& scn) {
  scn.validate();
  std::mt19937_64 rng(derive_seed(scn.rng_seed, 1, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::MatrixXd f = cv_transition();

  struct Live {
    int id;
    int type;
    const BirthSpec* spec;
    Eigen::VectorXd state;
  };
  std::vector<Live> targets;
  int next_id = 0;
  for (int i = 0; i < scn.n_types; ++i) {
    for (const auto& b : scn.schedule[static_cast<std::size_t>(i)]) {
      targets.push_back({next_id++, i, &b, Eigen::VectorXd()});
    }
  }

  std::vector<GroundTruthFrame> out(static_cast<std::size_t>(scn.frame_count));
  for (int fr = 0; fr < scn.frame_count; ++fr) {
    auto& frame = out[static_cast<std::size_t>(fr)];
    frame.frame = fr;
    for (auto& t : targets) {
      if (fr < t.spec->frame_birth || fr >= t.spec->frame_death) continue;
      if (fr == t.spec->frame_birth) {
        t.state = t.spec->state0;
      } else {
        const double sv = scn.sigma_v[static_cast<std::size_t>(t.type)];
        const double ax = normal(rng);
        const double ay = normal(rng);
        const double ew = normal(rng);
        const double eh = normal(rng);
        Eigen::VectorXd noise(6);
        noise << 0.5 * ax, 0.5 * ay, ax, ay, ew, eh;
        t.state = f * t.state + sv * noise;
      }
      clip_state(t.state, scn.region);
      frame.targets.push_back({t.id, t.type, t.state});
    }
  }
  return out;
}

std::vector<DetectionFrame> simulate_detections(const GroundTruthFrame& truth,
                                                const Scenario& scn) {
  std::mt19937_64 rng(
      derive_seed(scn.rng_seed, 2, static_cast<std::uint64_t>(truth.frame)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const Region& rg = scn.region;

  std::vector<DetectionFrame> out(static_cast<std::size_t>(scn.n_types));
  for (int j = 0; j < scn.n_types; ++j) {
    auto& frame = out[static_cast<std::size_t>(j)];
    frame.frame = truth.frame;
    frame.detector = j;

    for (const auto& t : truth.targets) {
      const double p =
          scn.p_detect[static_cast<std::size_t>(j)][static_cast<std::size_t>(t.type)];
      if (uni(rng) >= p) continue;
      const double sr =
          scn.sigma_r[static_cast<std::size_t>(j)][static_cast<std::size_t>(t.type)];
      Eigen::VectorXd z(4);
      z << t.state(0) + sr * normal(rng), t.state(1) + sr * normal(rng),
          t.state(4) + sr * normal(rng), t.state(5) + sr * normal(rng);
      z(0) = clamp(z(0), 0.0, rg.width);
      z(1) = clamp(z(1), 0.0, rg.height);
      z(2) = clamp(z(2), rg.w_min, rg.w_max);
      z(3) = clamp(z(3), rg.h_min, rg.h_max);
      frame.measurements.push_back(std::move(z));
      Provenance pv;
      if (t.type == j) {
        pv.kind = Provenance::Kind::True;
        pv.truth_id = t.id;
      } else {
        pv.kind = Provenance::Kind::Confusion;
        pv.truth_id = t.id;
        pv.source_type = t.type;
      }
      frame.provenance.push_back(pv);
    }

    std::poisson_distribution<int> pois(
        scn.clutter_rate[static_cast<std::size_t>(j)]);
    const int n_clutter =
        scn.clutter_rate[static_cast<std::size_t>(j)] > 0.0 ? pois(rng) : 0;
    for (int k = 0; k < n_clutter; ++k) {
      Eigen::VectorXd z(4);
      z << uni(rng) * rg.width, uni(rng) * rg.height,
          rg.w_min + uni(rng) * (rg.w_max - rg.w_min),
          rg.h_min + uni(rng) * (rg.h_max - rg.h_min);
      frame.measurements.push_back(std::move(z));
      frame.provenance.push_back({Provenance::Kind::Clutter, -1, -1});
    }
  }
  return out;
}

FilterConfig filter_config_for(const Scenario& scn, double p_survival) {
  scn.validate();
  FilterConfig cfg;
  cfg.n_types = scn.n_types;
  const auto n = static_cast<std::size_t>(scn.n_types);
  cfg.types.resize(n);
  cfg.p_detect = scn.p_detect;
  cfg.h.assign(n, std::vector<Eigen::MatrixXd>(n));
  cfg.r.assign(n, std::vector<Eigen::MatrixXd>(n));
  cfg.region = scn.region;

  Eigen::VectorXd birth_diag(6);
  birth_diag << 100, 100, 25, 25, 20, 20;
  for (std::size_t i = 0; i < n; ++i) {
    auto& t = cfg.types[i];
    t.f = cv_transition();
    t.q = cv_process_noise(scn.sigma_v[i]);
    t.p_survival = p_survival;
    t.birth_cov = birth_diag.asDiagonal();
    t.birth_weight = 1e-4;
    t.clutter_rate = scn.clutter_rate[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      cfg.h[j][i] = box_projection();
      const double sr = scn.sigma_r[j][i];
      cfg.r[j][i] = (sr * sr) * Eigen::MatrixXd::Identity(4, 4);
    }
  }
  return cfg;
}

namespace {

Scenario football3() {
  Scenario s;
  s.name = "football3";
  s.n_types = 3;
  s.frame_count = 100;
  s.region = {720.0, 576.0, 5.0, 100.0, 5.0, 100.0};
  s.sigma_v = {5.0, 5.0, 5.0};
  s.sigma_r.assign(3, std::vector<double>(3, 6.0));
  s.p_detect = {{0.93, 0.24, 0.50},
                {0.24, 0.99, 0.18},
                {0.19, 0.17, 0.99}};
  s.clutter_rate = {10.0, 10.0, 10.0};
  s.rng_seed = 1;

  auto born = [](int b, int d, double cx, double cy, double vx, double vy,
                 double w, double h) {
    BirthSpec bs;
    bs.frame_birth = b;
    bs.frame_death = d;
    bs.state0 = Eigen::VectorXd(6);
    bs.state0 << cx, cy, vx, vy, w, h;
    return bs;
  };

  s.schedule.resize(3);
  s.schedule[0] = {
      born(0, 100, 60, 100, 3.0, 2.0, 22, 50),
      born(0, 100, 660, 120, -3.2, 1.6, 22, 50),
      born(0, 100, 100, 480, 2.8, -2.4, 22, 50),
      born(0, 100, 620, 460, -2.6, -1.8, 22, 50),
      born(10, 90, 360, 40, 0.4, 3.0, 22, 50),
      born(20, 100, 40, 300, 3.4, 0.2, 22, 50),
  };
  s.schedule[1] = {
      born(0, 100, 120, 60, 2.6, 2.6, 22, 50),
      born(0, 100, 600, 80, -2.4, 2.2, 22, 50),
      born(0, 100, 80, 420, 3.0, -1.6, 22, 50),
      born(0, 100, 640, 500, -3.0, -2.6, 22, 50),
      born(0, 80, 300, 540, 1.0, -3.0, 22, 50),
      born(30, 100, 680, 300, -3.6, -0.4, 22, 50),
  };
  s.schedule[2] = {
      born(0, 100, 360, 288, 1.2, -0.8, 26, 55),
  };
  return s;
}

Scenario urban2() {
  Scenario s;
  s.name = "urban2";
  s.n_types = 2;
  s.frame_count = 100;
  s.region = {1242.0, 375.0, 10.0, 260.0, 10.0, 200.0};
  s.sigma_v = {5.0, 6.0};
  s.sigma_r.assign(2, std::vector<double>(2, 7.0));
  s.p_detect = {{0.83, 0.10}, {0.30, 0.86}};
  s.clutter_rate = {10.0, 10.0};
  s.rng_seed = 1;

  auto born = [](int b, int d, double cx, double cy, double vx, double vy,
                 double w, double h) {
    BirthSpec bs;
    bs.frame_birth = b;
    bs.frame_death = d;
    bs.state0 = Eigen::VectorXd(6);
    bs.state0 << cx, cy, vx, vy, w, h;
    return bs;
  };

  s.schedule.resize(2);
  s.schedule[0] = {
      born(0, 100, 150, 200, 1.2, 0.0, 35, 90),
      born(0, 100, 1100, 210, -1.4, 0.1, 35, 90),
      born(15, 100, 600, 190, 0.9, -0.1, 35, 90),
      born(0, 70, 900, 230, -1.0, 0.0, 35, 90),
  };
  s.schedule[1] = {
      born(0, 100, 60, 240, 6.0, 0.0, 160, 90),
      born(0, 100, 1180, 250, -5.5, 0.0, 160, 90),
      born(25, 100, 20, 220, 4.5, 0.1, 160, 90),
  };
  return s;
}

Scenario single1() {
  Scenario s;
  s.name = "single1";
  s.n_types = 1;
  s.frame_count = 100;
  s.region = {720.0, 576.0, 5.0, 100.0, 5.0, 100.0};
  // gentle maneuvering keeps the lone target well inside the region, so the
  // scenario probes steady-state accuracy rather than boundary clipping
  s.sigma_v = {0.2};
  s.sigma_r = {{6.0}};
  s.p_detect = {{0.95}};
  s.clutter_rate = {10.0};
  s.rng_seed = 1;

  BirthSpec b;
  b.frame_birth = 0;
  b.frame_death = 100;
  b.state0 = Eigen::VectorXd(6);
  b.state0 << 360, 288, 0.5, 0.2, 20, 40;
  s.schedule = {{b}};
  return s;
}

}  // namespace

std::vector<Scenario> preset_scenarios() {
  return {football3(), urban2(), single1()};
}

Scenario preset_scenario(const std::string& name) {
  for (auto& s : preset_scenarios()) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("unknown preset scenario: " + name);
}

}  // namespace ntt
