#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ntt/metrics.hpp"

using namespace ntt;

namespace {

PointSet random_set(std::mt19937_64& rng, int max_pts) {
  std::uniform_int_distribution<int> n(0, max_pts);
  std::uniform_real_distribution<double> u(0.0, 300.0);
  PointSet s;
  const int k = n(rng);
  for (int i = 0; i < k; ++i) s.push_back(Eigen::Vector2d(u(rng), u(rng)));
  return s;
}

}  // namespace

TEST_CASE("ospa hand cases") {
  const PointSet empty;
  const PointSet one = {Eigen::Vector2d(0, 0)};
  const PointSet far = {Eigen::Vector2d(3, 4)};

  CHECK(ospa(empty, empty, 1.0, 100.0) == 0.0);
  CHECK(ospa(empty, one, 1.0, 100.0) == 100.0);
  CHECK(ospa(one, empty, 1.0, 100.0) == 100.0);
  CHECK(ospa(one, far, 1.0, 100.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(ospa(one, far, 2.0, 100.0) == doctest::Approx(5.0).epsilon(1e-12));

  // distance above cutoff saturates at c
  const PointSet very_far = {Eigen::Vector2d(1000, 1000)};
  CHECK(ospa(one, very_far, 1.0, 100.0) == 100.0);

  // cardinality mismatch: one matched at 5, one unmatched at c
  const PointSet two = {Eigen::Vector2d(0, 0), Eigen::Vector2d(500, 0)};
  CHECK(ospa(far, two, 1.0, 100.0) ==
        doctest::Approx((5.0 + 100.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("ospa parameter validation") {
  const PointSet one = {Eigen::Vector2d(0, 0)};
  CHECK_THROWS_AS(ospa(one, one, 0.5, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(ospa(one, one, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("ospa axioms hold on random sets") {
  std::mt19937_64 rng(19);
  for (int round = 0; round < 10; ++round) {
    std::vector<PointSet> sets;
    for (int s = 0; s < 4; ++s) sets.push_back(random_set(rng, 5));
    const auto rep = ospa_axioms_check(sets, 1.0, 100.0);
    CHECK(rep.ok());
    CHECK(rep.pairs_checked > 0);
    CHECK(rep.triples_checked > 0);
  }
}

TEST_CASE("order p is a mean of matched distances for equal cardinality") {
  const PointSet a = {Eigen::Vector2d(0, 0), Eigen::Vector2d(10, 0)};
  const PointSet b = {Eigen::Vector2d(0, 3), Eigen::Vector2d(10, 1)};
  CHECK(ospa(a, b, 1.0, 100.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ospa(a, b, 2.0, 100.0) ==
        doctest::Approx(std::sqrt((9.0 + 1.0) / 2.0)).epsilon(1e-12));
}

TEST_CASE("ospa is bounded by the cutoff") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_set(rng, 5);
    const auto b = random_set(rng, 5);
    const double d = ospa(a, b, 1.0, 50.0);
    CHECK(d >= 0.0);
    CHECK(d <= 50.0);
  }
}

TEST_CASE("cardinality error") {
  CHECK(cardinality_error(3, 3) == 0);
  CHECK(cardinality_error(3, 5) == 2);
  CHECK(cardinality_error(5, 3) == 2);
  CHECK(cardinality_error(0, 0) == 0);
}

TEST_CASE("discrimination counts matches and false tracks") {
  std::vector<TypedPoint> truth = {{0, Eigen::Vector2d(0, 0)},
                                   {1, Eigen::Vector2d(100, 0)}};
  std::vector<TypedPoint> est = {
      {0, Eigen::Vector2d(1, 0)},     // near type-0 truth, right type
      {0, Eigen::Vector2d(99, 0)},    // near type-1 truth, wrong type
      {1, Eigen::Vector2d(500, 500)}  // nothing nearby: false track
  };
  const auto r = discrimination_rate(est, truth, 20.0);
  CHECK(r.considered == 2);
  CHECK(r.correct == 1);
  CHECK(r.false_tracks == 1);
  CHECK(r.rate == doctest::Approx(0.5));

  // no estimates: vacuous rate 1
  const auto empty = discrimination_rate({}, truth, 20.0);
  CHECK(empty.rate == 1.0);
  CHECK(empty.considered == 0);
  CHECK(empty.empty_estimates);

  // nearest truth decides: (12,0) at distance 2 beats (5,0) at distance 5
  std::vector<TypedPoint> two_truth = {{1, Eigen::Vector2d(12, 0)},
                                       {0, Eigen::Vector2d(5, 0)}};
  const auto nearest =
      discrimination_rate({{0, Eigen::Vector2d(10, 0)}}, two_truth, 50.0);
  CHECK(nearest.considered == 1);
  CHECK(nearest.correct == 0);  // nearest has type 1, estimate claims 0
  const auto agreed =
      discrimination_rate({{1, Eigen::Vector2d(10, 0)}}, two_truth, 50.0);
  CHECK(agreed.correct == 1);
}

TEST_CASE("discrimination ignores truth ordering") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  std::vector<TypedPoint> truth, est;
  for (int k = 0; k < 6; ++k) {
    truth.push_back({k % 2, Eigen::Vector2d(u(rng), u(rng))});
    est.push_back({k % 2, truth.back().pos + Eigen::Vector2d(1, 1)});
  }
  const auto a = discrimination_rate(est, truth, 30.0);
  std::reverse(truth.begin(), truth.end());
  const auto b = discrimination_rate(est, truth, 30.0);
  CHECK(a.rate == b.rate);
  CHECK(a.correct == b.correct);
}

TEST_CASE("metrics csv round trip") {
  MetricSeries s;
  s.push_back({0, 12.345678901234567, 3, 2, 1, 0.5});
  s.push_back({1, 0.0, 0, 0, 0, 1.0});
  s.push_back({2, 99.125, 4, 7, 3, 0.25});
  const std::string text = format_metrics_csv(s);
  CHECK(text.rfind("frame,ospa,card_truth,card_est,card_err,disc_rate\n", 0) ==
        0);
  const auto back = parse_metrics_csv(text);
  REQUIRE(back.size() == s.size());
  for (size_t k = 0; k < s.size(); ++k) {
    CHECK(back[k].frame == s[k].frame);
    CHECK(back[k].ospa == s[k].ospa);  // %.17g survives the round trip
    CHECK(back[k].card_truth == s[k].card_truth);
    CHECK(back[k].card_est == s[k].card_est);
    CHECK(back[k].card_err == s[k].card_err);
    CHECK(back[k].disc_rate == s[k].disc_rate);
  }
  CHECK_THROWS_AS(parse_metrics_csv("bogus header\n1,2,3,4,5,6\n"),
                  std::runtime_error);
}

TEST_CASE("label switches are counted per matched transition") {
  using Truths = std::vector<std::vector<TruthPoint>>;
  using Labels = std::vector<std::vector<LabeledPoint>>;
  // one target, label flips once between frames 1 and 2
  Truths truth = {{{7, Eigen::Vector2d(0, 0)}},
                  {{7, Eigen::Vector2d(1, 0)}},
                  {{7, Eigen::Vector2d(2, 0)}}};
  Labels stable = {{{0, Eigen::Vector2d(0, 0)}},
                   {{0, Eigen::Vector2d(1, 0)}},
                   {{0, Eigen::Vector2d(2, 0)}}};
  Labels flip = {{{0, Eigen::Vector2d(0, 0)}},
                 {{0, Eigen::Vector2d(1, 0)}},
                 {{3, Eigen::Vector2d(2, 0)}}};
  CHECK(label_switch_rate(truth, stable, 10.0) == 0.0);
  CHECK(label_switch_rate(truth, flip, 10.0) == doctest::Approx(0.5));
  CHECK(label_switch_rate({}, {}, 10.0) == 0.0);
}
