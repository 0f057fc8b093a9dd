#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ntt/sim.hpp"

using namespace ntt;

namespace {

Scenario tiny_scenario() {
  Scenario s;
  s.name = "tiny";
  s.n_types = 2;
  s.frame_count = 20;
  s.region = {720.0, 576.0, 5.0, 100.0, 5.0, 100.0};
  s.sigma_v = {2.0, 2.0};
  s.sigma_r = {{3.0, 3.0}, {3.0, 3.0}};
  s.p_detect = {{0.9, 0.2}, {0.25, 0.85}};
  s.clutter_rate = {4.0, 4.0};
  s.rng_seed = 9;

  BirthSpec a, b;
  a.frame_birth = 0;
  a.frame_death = 20;
  a.state0 = Eigen::VectorXd(6);
  a.state0 << 200, 150, 2, 1, 20, 40;
  b.frame_birth = 5;
  b.frame_death = 15;
  b.state0 = Eigen::VectorXd(6);
  b.state0 << 500, 400, -2, 0, 30, 60;
  s.schedule = {{a}, {b}};
  return s;
}

}  // namespace

TEST_CASE("constant-velocity matrices") {
  const auto f = cv_transition();
  CHECK(f(0, 2) == 1.0);
  CHECK(f(1, 3) == 1.0);
  CHECK(f(4, 4) == 1.0);
  const auto q = cv_process_noise(3.0);
  CHECK(q(0, 0) == doctest::Approx(9.0 / 4.0));
  CHECK(q(0, 2) == doctest::Approx(9.0 / 2.0));
  CHECK(q(2, 2) == doctest::Approx(9.0));
  CHECK(q(4, 4) == doctest::Approx(9.0));
  CHECK((q - q.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const auto h = box_projection();
  CHECK(h.rows() == 4);
  CHECK(h.cols() == 6);
  Eigen::VectorXd x(6);
  x << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd z = h * x;
  CHECK(z(0) == 1.0);
  CHECK(z(1) == 2.0);
  CHECK(z(2) == 5.0);
  CHECK(z(3) == 6.0);
}

TEST_CASE("zero process noise gives exact straight lines") {
  Scenario s = tiny_scenario();
  s.sigma_v = {0.0, 0.0};
  const auto truth = generate_truth(s);
  REQUIRE(int(truth.size()) == s.frame_count);
  for (int k = 0; k < s.frame_count; ++k) {
    CHECK(truth[size_t(k)].frame == k);
    const auto& t0 = truth[size_t(k)].targets;
    // target 0 alive all frames, target 1 alive on [5, 15)
    const auto* first = &t0[0];
    CHECK(first->type == 0);
    CHECK(first->state(0) == 200.0 + 2.0 * k);
    CHECK(first->state(1) == 150.0 + 1.0 * k);
    CHECK(first->state(4) == 20.0);
  }
}

TEST_CASE("schedule controls presence exactly") {
  Scenario s = tiny_scenario();
  const auto truth = generate_truth(s);
  for (int k = 0; k < s.frame_count; ++k) {
    const auto& targets = truth[size_t(k)].targets;
    const bool second_alive = k >= 5 && k < 15;
    CHECK(int(targets.size()) == 1 + (second_alive ? 1 : 0));
    if (second_alive) {
      CHECK(targets[1].type == 1);
      CHECK(targets[1].id == 1);
    }
  }
}

TEST_CASE("truth stays inside the region box") {
  Scenario s = tiny_scenario();
  s.sigma_v = {50.0, 50.0};  // violent, guaranteed to hit the walls
  s.frame_count = 60;
  const auto truth = generate_truth(s);
  for (const auto& fr : truth) {
    for (const auto& t : fr.targets) {
      CHECK(t.state(0) >= 0.0);
      CHECK(t.state(0) <= s.region.width);
      CHECK(t.state(1) >= 0.0);
      CHECK(t.state(1) <= s.region.height);
      CHECK(t.state(4) >= s.region.w_min);
      CHECK(t.state(4) <= s.region.w_max);
      CHECK(t.state(5) >= s.region.h_min);
      CHECK(t.state(5) <= s.region.h_max);
    }
  }
}

TEST_CASE("same seed reproduces the run bit for bit") {
  const Scenario s = tiny_scenario();
  const auto t1 = generate_truth(s);
  const auto t2 = generate_truth(s);
  REQUIRE(t1.size() == t2.size());
  for (size_t k = 0; k < t1.size(); ++k) {
    REQUIRE(t1[k].targets.size() == t2[k].targets.size());
    for (size_t j = 0; j < t1[k].targets.size(); ++j) {
      CHECK((t1[k].targets[j].state - t2[k].targets[j].state)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
    const auto d1 = simulate_detections(t1[k], s);
    const auto d2 = simulate_detections(t2[k], s);
    REQUIRE(d1.size() == d2.size());
    for (size_t j = 0; j < d1.size(); ++j) {
      REQUIRE(d1[j].measurements.size() == d2[j].measurements.size());
      for (size_t v = 0; v < d1[j].measurements.size(); ++v) {
        CHECK((d1[j].measurements[v] - d2[j].measurements[v])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
      }
    }
  }

  Scenario other = s;
  other.rng_seed = 10;
  const auto t3 = generate_truth(other);
  bool all_equal = true;
  for (size_t k = 0; k < t1.size() && all_equal; ++k) {
    for (size_t j = 0; j < t1[k].targets.size(); ++j) {
      if ((t1[k].targets[j].state - t3[k].targets[j].state).norm() > 0) {
        all_equal = false;
      }
    }
  }
  CHECK(!all_equal);
}

TEST_CASE("perfect noiseless sensor returns the projected truth") {
  Scenario s = tiny_scenario();
  s.sigma_v = {0.0, 0.0};
  s.sigma_r = {{0.0, 0.0}, {0.0, 0.0}};
  s.p_detect = {{1.0, 0.0}, {0.0, 1.0}};
  s.clutter_rate = {0.0, 0.0};
  const auto truth = generate_truth(s);
  for (const auto& fr : truth) {
    const auto dets = simulate_detections(fr, s);
    REQUIRE(dets.size() == 2);
    CHECK(dets[0].detector == 0);
    CHECK(dets[1].detector == 1);
    for (int j = 0; j < 2; ++j) {
      size_t own = 0;
      for (const auto& t : fr.targets) {
        if (t.type != j) continue;
        REQUIRE(own < dets[size_t(j)].measurements.size());
        const auto& z = dets[size_t(j)].measurements[own];
        CHECK(z(0) == t.state(0));
        CHECK(z(1) == t.state(1));
        CHECK(z(2) == t.state(4));
        CHECK(z(3) == t.state(5));
        const auto& prov = dets[size_t(j)].provenance[own];
        CHECK(prov.kind == Provenance::Kind::True);
        CHECK(prov.truth_id == t.id);
        ++own;
      }
      CHECK(own == dets[size_t(j)].measurements.size());
    }
  }
}

TEST_CASE("confusion frequency matches its probability over many trials") {
  Scenario s;
  s.name = "bernoulli";
  s.n_types = 2;
  s.frame_count = 10000;
  s.region = {720.0, 576.0, 5.0, 100.0, 5.0, 100.0};
  s.sigma_v = {0.0, 0.0};
  s.sigma_r = {{1.0, 1.0}, {1.0, 1.0}};
  s.p_detect = {{0.9, 0.24}, {0.0, 0.9}};
  s.clutter_rate = {0.0, 0.0};
  s.rng_seed = 77;
  BirthSpec b;
  b.frame_birth = 0;
  b.frame_death = s.frame_count;
  b.state0 = Eigen::VectorXd(6);
  b.state0 << 360, 288, 0, 0, 30, 30;
  s.schedule = {{}, {b}};  // a single type-1 target

  const auto truth = generate_truth(s);
  int confusions = 0;
  for (const auto& fr : truth) {
    const auto dets = simulate_detections(fr, s);
    for (const auto& p : dets[0].provenance) {
      if (p.kind == Provenance::Kind::Confusion) {
        ++confusions;
        CHECK(p.source_type == 1);
      }
    }
  }
  const double rate = double(confusions) / s.frame_count;
  const double ci99 = 2.5758 * std::sqrt(0.24 * 0.76 / s.frame_count);
  CHECK(std::abs(rate - 0.24) <= ci99);
}

TEST_CASE("clutter count is Poisson with the configured mean") {
  Scenario s = tiny_scenario();
  s.schedule = {{}, {}};
  s.clutter_rate = {10.0, 0.0};
  s.frame_count = 2000;
  const auto truth = generate_truth(s);
  long long total = 0;
  double sumsq = 0.0;
  for (const auto& fr : truth) {
    const auto dets = simulate_detections(fr, s);
    const auto n = double(dets[0].measurements.size());
    total += long(n);
    sumsq += n * n;
    CHECK(dets[1].measurements.empty());  // rate zero stream stays silent
    for (const auto& p : dets[0].provenance) {
      CHECK(p.kind == Provenance::Kind::Clutter);
    }
    for (const auto& z : dets[0].measurements) {
      CHECK(s.region.contains(z));
    }
  }
  const double mean = double(total) / s.frame_count;
  CHECK(std::abs(mean - 10.0) <= 3.0 * std::sqrt(10.0 / s.frame_count));
  // Poisson: variance tracks the mean
  const double var = sumsq / s.frame_count - mean * mean;
  CHECK(var == doctest::Approx(10.0).epsilon(0.15));
}

TEST_CASE("provenance partitions every detection") {
  const Scenario s = tiny_scenario();
  const auto truth = generate_truth(s);
  for (const auto& fr : truth) {
    for (const auto& d : simulate_detections(fr, s)) {
      CHECK(d.provenance.size() == d.measurements.size());
      for (const auto& p : d.provenance) {
        const bool is_true = p.kind == Provenance::Kind::True;
        const bool is_conf = p.kind == Provenance::Kind::Confusion;
        const bool is_clut = p.kind == Provenance::Kind::Clutter;
        CHECK(int(is_true) + int(is_conf) + int(is_clut) == 1);
        if (is_true || is_conf) CHECK(p.truth_id >= 0);
      }
    }
  }
}

TEST_CASE("presets load and match their advertised shapes") {
  const auto all = preset_scenarios();
  REQUIRE(all.size() == 3);
  std::set<std::string> names;
  for (const auto& s : all) {
    names.insert(s.name);
    CHECK_NOTHROW(s.validate());
  }
  CHECK(names == std::set<std::string>{"football3", "urban2", "single1"});

  const auto fb = preset_scenario("football3");
  CHECK(fb.n_types == 3);
  CHECK(fb.frame_count == 100);
  CHECK(fb.p_detect[0][0] == 0.93);
  CHECK(fb.p_detect[0][1] == 0.24);
  CHECK(fb.p_detect[2][2] == 0.99);
  int targets = 0;
  for (const auto& per : fb.schedule) targets += int(per.size());
  CHECK(targets == 13);

  const auto ub = preset_scenario("urban2");
  CHECK(ub.n_types == 2);
  CHECK(ub.region.width == 1242.0);

  const auto sg = preset_scenario("single1");
  CHECK(sg.n_types == 1);
  CHECK(sg.p_detect[0][0] == 0.95);
  CHECK(sg.sigma_r[0][0] == 6.0);
  CHECK(sg.clutter_rate[0] == 10.0);

  CHECK_THROWS_WITH_AS(preset_scenario("nope"), doctest::Contains("nope"),
                       std::invalid_argument);
}

TEST_CASE("filter config mirrors the scenario parameters") {
  const auto fb = preset_scenario("football3");
  const auto cfg = filter_config_for(fb, 0.99);
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.n_types == 3);
  CHECK(cfg.p_detect == fb.p_detect);
  CHECK(cfg.types[0].clutter_rate == 10.0);
  CHECK(cfg.r[1][0](0, 0) == fb.sigma_r[1][0] * fb.sigma_r[1][0]);
  CHECK(cfg.region.volume() ==
        doctest::Approx(720.0 * 576.0 * 95.0 * 95.0));
}

TEST_CASE("scenario validation names the bad entry") {
  Scenario s = tiny_scenario();
  s.p_detect[0][1] = 1.2;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("p_detect[0][1]"),
                       std::invalid_argument);
  s = tiny_scenario();
  s.sigma_r[1][0] = -1.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("sigma_r"),
                       std::invalid_argument);
  s = tiny_scenario();
  s.schedule[0][0].state0 = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("derived seeds separate streams and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t stream = 1; stream <= 4; ++stream) {
    for (std::uint64_t idx = 0; idx < 50; ++idx) {
      seen.insert(derive_seed(1, stream, idx));
    }
  }
  CHECK(seen.size() == 200);  // no collisions across the tags we use
  CHECK(derive_seed(1, 1, 0) != derive_seed(2, 1, 0));
}
