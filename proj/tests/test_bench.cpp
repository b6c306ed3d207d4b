#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "depth/bench.hpp"
#include "test_support.hpp"

using namespace depth;
using Catch::Approx;

namespace {

Scenario make(ScenarioTag tag, std::uint64_t seed) {
  Scenario s;
  s.tag = tag;
  s.seed = seed;
  return s;
}

std::int64_t anomaly_count(const LabeledSample& sample) {
  std::int64_t count = 0;
  for (bool label : sample.labels) count += label;
  return count;
}

MethodConfig projection_method(SearchStrategy strategy,
                               std::int64_t directions, std::uint64_t seed) {
  MethodConfig m;
  m.notion = DepthNotion::projection;
  m.budget.strategy = strategy;
  m.budget.n_directions = directions;
  m.budget.seed = seed;
  return m;
}

}  // namespace

TEST_CASE("scenario validation") {
  Scenario s = make(ScenarioTag::robust_s51, 1);
  s.epsilon = 0.7;
  CHECK_THROWS_AS(generate(s), BadScenario);
  Scenario extrap = make(ScenarioTag::extrap_s52, 1);
  extrap.n = 200;
  CHECK_THROWS_AS(generate(extrap), BadScenario);
  Scenario toeplitz = make(ScenarioTag::toeplitz_s6, 1);
  toeplitz.rho = 1.5;
  CHECK_THROWS_AS(generate(toeplitz), BadScenario);
  CHECK_THROWS_AS(parse_scenario("nope"), BadScenario);
}

TEST_CASE("clustered scenario matches the published parameters") {
  const LabeledSample sample = generate(make(ScenarioTag::clustered_s4, 3));
  REQUIRE(sample.data.n() == 100);
  REQUIRE(sample.data.dim() == 2);
  CHECK(anomaly_count(sample) == 10);
  Vector anomaly_mean = Vector::Zero(2);
  Vector normal_mean = Vector::Zero(2);
  for (Index i = 0; i < sample.data.n(); ++i) {
    if (sample.labels[static_cast<std::size_t>(i)]) {
      anomaly_mean += sample.data.row(i);
    } else {
      normal_mean += sample.data.row(i);
    }
  }
  anomaly_mean /= 10.0;
  normal_mean /= 90.0;
  CHECK(std::abs(anomaly_mean(0) - 3.181) < 0.25);
  CHECK(std::abs(anomaly_mean(1) + 0.222) < 0.25);
  CHECK(std::abs(normal_mean(0) - 1.0) < 0.5);
  CHECK(std::abs(normal_mean(1) - 1.0) < 0.6);
}

TEST_CASE("intro scenarios plant four anomalies") {
  const LabeledSample small = generate(make(ScenarioTag::intro_25, 8));
  CHECK(small.data.n() == 25);
  CHECK(anomaly_count(small) == 4);
  const LabeledSample large = generate(make(ScenarioTag::intro_500, 8));
  CHECK(large.data.n() == 504);
  CHECK(anomaly_count(large) == 4);
}

TEST_CASE("robust scenario enforces the norm condition") {
  for (std::uint64_t seed : {1ULL, 2ULL}) {
    Scenario s = make(ScenarioTag::robust_s51, seed);
    s.d = 5;
    s.n = 200;
    s.epsilon = 0.2;
    const LabeledSample sample = generate(s);
    CHECK(sample.data.n() == 200);
    CHECK(anomaly_count(sample) == 40);  // ceil(200 * 0.2)
    double max_normal_norm = 0.0;
    for (Index i = 0; i < sample.data.n(); ++i) {
      if (!sample.labels[static_cast<std::size_t>(i)]) {
        max_normal_norm = std::max(max_normal_norm, sample.data.row(i).norm());
      }
    }
    for (Index i = 0; i < sample.data.n(); ++i) {
      if (sample.labels[static_cast<std::size_t>(i)]) {
        CHECK(sample.data.row(i).norm() > 1.5 * max_normal_norm);
      }
    }
  }
}

TEST_CASE("extrapolation scenario produces both parts") {
  Scenario train = make(ScenarioTag::extrap_s52, 5);
  const LabeledSample train_sample = generate(train);
  CHECK(train_sample.data.n() == 100);
  CHECK(anomaly_count(train_sample) == 10);

  Scenario test = make(ScenarioTag::extrap_s52, 5);
  test.n = 300;
  const LabeledSample test_sample = generate(test);
  CHECK(test_sample.data.n() == 300);
  CHECK(anomaly_count(test_sample) == 50);
  // The new anomaly group sits near (7/4, 1/2).
  Vector right_mean = Vector::Zero(2);
  std::int64_t right_count = 0;
  for (Index i = 0; i < test_sample.data.n(); ++i) {
    if (test_sample.labels[static_cast<std::size_t>(i)] &&
        test_sample.data.values()(i, 0) > 1.0) {
      right_mean += test_sample.data.row(i);
      ++right_count;
    }
  }
  REQUIRE(right_count == 25);
  right_mean /= static_cast<double>(right_count);
  CHECK(std::abs(right_mean(0) - 1.75) < 0.1);
  CHECK(std::abs(right_mean(1) - 0.5) < 0.1);
}

TEST_CASE("toeplitz scenario places anomalies at the stated distance") {
  Scenario s = make(ScenarioTag::toeplitz_s6, 6);
  s.d = 10;
  s.n = 400;
  const LabeledSample sample = generate(s);
  CHECK(sample.data.n() == 400);
  CHECK(anomaly_count(sample) == 20);
  // Mean of the anomalies recovers the planted center: Mahalanobis distance
  // 1.25 from the origin under the Toeplitz covariance.
  Matrix sigma(10, 10);
  for (Index i = 0; i < 10; ++i) {
    for (Index j = 0; j < 10; ++j) {
      sigma(i, j) = std::pow(0.5, std::abs(static_cast<double>(i - j)));
    }
  }
  Vector anomaly_mean = Vector::Zero(10);
  for (Index i = 0; i < sample.data.n(); ++i) {
    if (sample.labels[static_cast<std::size_t>(i)]) {
      anomaly_mean += sample.data.row(i);
    }
  }
  anomaly_mean /= 20.0;
  const double distance =
      std::sqrt(anomaly_mean.dot(sigma.ldlt().solve(anomaly_mean)));
  CHECK(std::abs(distance - 1.25) < 0.5);
}

TEST_CASE("generation is deterministic per seed") {
  const LabeledSample a = generate(make(ScenarioTag::toeplitz_s6, 12));
  const LabeledSample b = generate(make(ScenarioTag::toeplitz_s6, 12));
  CHECK((a.data.values() - b.data.values()).norm() == 0.0);
  CHECK(a.labels == b.labels);
  const LabeledSample c = generate(make(ScenarioTag::toeplitz_s6, 13));
  CHECK((a.data.values() - c.data.values()).norm() != 0.0);
}

TEST_CASE("p metric counting") {
  // Anomalies exactly occupy the lowest depths.
  CHECK(p_metric({0.01, 0.02, 0.5, 0.6, 0.7},
                 {true, true, false, false, false}) == 1.0);
  // One normal point below the deepest anomaly.
  std::vector<double> depths{0.10, 0.11, 0.12, 0.125, 0.13, 0.14, 0.15,
                             0.16, 0.17, 0.18, 0.19,  0.5,  0.6};
  std::vector<bool> labels(13, false);
  for (int i = 0; i < 11; ++i) labels[static_cast<std::size_t>(i)] = true;
  labels[3] = false;  // a normal inside the anomaly depth range
  labels[11] = true;  // anomaly deeper than that normal
  // anomalies: indices 0,1,2,4..10,11 -> 11 of them; flagged = 12.
  CHECK(p_metric(depths, labels) == Approx(11.0 / 12.0));
  // All depths equal: everything is flagged.
  CHECK(p_metric({0.3, 0.3, 0.3, 0.3}, {true, false, false, false}) ==
        Approx(0.25));
  CHECK_THROWS_AS(p_metric({0.1}, {false}), NoAnomalies);
}

TEST_CASE("single repetition equals the fit/score pipeline") {
  Scenario s = make(ScenarioTag::clustered_s4, 21);
  const MethodConfig method =
      projection_method(SearchStrategy::nelder_mead, 300, 9);
  const RepetitionSummary summary = run_repetitions(s, method, 1, 2);
  REQUIRE(summary.p_values.size() == 1);

  // Independent pipeline: generate, fit with the detect-all policy, count.
  const LabeledSample sample = generate(s);
  const DepthModel model =
      fit(sample.data, method.notion, method.budget,
          ThresholdSpec::detect_all(), 1.0, &sample.labels, 2);
  const auto reports = score_all(model, sample.data, 2);
  std::int64_t flagged = 0;
  for (const auto& r : reports) flagged += r.is_anomaly;
  const double expected =
      static_cast<double>(anomaly_count(sample)) / static_cast<double>(flagged);
  CHECK(summary.p_values[0] == Approx(expected));
  CHECK_THROWS_AS(run_repetitions(s, method, 0), BadScenario);
}

TEST_CASE("repetition summaries are deterministic") {
  Scenario s = make(ScenarioTag::clustered_s4, 33);
  const MethodConfig method =
      projection_method(SearchStrategy::random, 100, 5);
  const RepetitionSummary a = run_repetitions(s, method, 5, 2);
  const RepetitionSummary b = run_repetitions(s, method, 5, 2);
  CHECK(a.p_values == b.p_values);
  CHECK(a.median == b.median);
  REQUIRE(a.p_values.size() == 5);
  CHECK(a.min <= a.q1);
  CHECK(a.q1 <= a.median);
  CHECK(a.median <= a.q3);
  CHECK(a.q3 <= a.max);
}

TEST_CASE("subsample study: full fraction column matches run_repetitions") {
  Scenario s = make(ScenarioTag::clustered_s4, 44);
  const MethodConfig method =
      projection_method(SearchStrategy::nelder_mead, 200, 3);
  const auto grid = subsample_study(s, method, {1.0, 0.5}, {200}, 3, 2);
  REQUIRE(grid.size() == 2);
  const RepetitionSummary direct = run_repetitions(s, method, 3, 2);
  CHECK(grid[0].summary.p_values == direct.p_values);

  // Tiny fractions that keep fewer than d + 1 rows are rejected.
  Scenario toeplitz = make(ScenarioTag::toeplitz_s6, 2);
  toeplitz.n = 200;
  CHECK_THROWS_AS(
      subsample_study(toeplitz, method, {0.01}, {100}, 1, 1),
      BadScenario);
}
