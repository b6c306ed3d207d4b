#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "depth/bench.hpp"
#include "depth/explain.hpp"
#include "test_support.hpp"

using namespace depth;
using Catch::Approx;
using testsupport::random_gaussian_data;

namespace {

DepthModel projection_model(const DataMatrix& data, std::uint64_t seed,
                            std::int64_t directions = 300,
                            double threshold = 0.2) {
  SearchBudget budget;
  budget.strategy = SearchStrategy::nelder_mead;
  budget.n_directions = directions;
  budget.seed = seed;
  return fit(data, DepthNotion::projection, budget,
             ThresholdSpec::fixed(threshold));
}

}  // namespace

TEST_CASE("explanations obey the canonical sign and reproduce the depth") {
  Rng rng(11);
  const DataMatrix data = random_gaussian_data(40, 2, rng);
  const DepthModel model = projection_model(data, 5);
  for (Index i = 0; i < data.n(); i += 7) {
    const Explanation explanation = explain_point(model, data, i);
    const Vector& u = explanation.direction.coords;
    UnivariateSample projections(static_cast<std::size_t>(data.n()));
    for (Index r = 0; r < data.n(); ++r) {
      projections[static_cast<std::size_t>(r)] = data.values().row(r).dot(u);
    }
    CHECK(data.row(i).dot(u) - median(projections) >= -1e-12);
    const double outlyingness =
        projected_outlyingness(data.row(i).dot(u), projections);
    CHECK(explanation.depth.value ==
          Approx(1.0 / (1.0 + outlyingness)).margin(1e-12));
    CHECK(explanation.contribution.size() == 2);
    // The sequence is sorted, starts at zero and contains the point itself.
    CHECK(explanation.sequence.projections.front() == 0.0);
    CHECK(std::is_sorted(explanation.sequence.projections.begin(),
                         explanation.sequence.projections.end()));
    CHECK(explanation.sequence.own_position >= 1);
    CHECK(explanation.sequence.own_position <= data.n());
  }
}

TEST_CASE("an extreme point sits at the right end of its sequence") {
  std::vector<std::vector<double>> rows;
  Rng rng(23);
  for (int i = 0; i < 30; ++i) rows.push_back({rng.normal(), rng.normal()});
  rows.push_back({40.0, 40.0});
  const DataMatrix data = DataMatrix::from_rows(rows);
  const DepthModel model = projection_model(data, 9);
  const Explanation explanation =
      explain_point(model, data, data.n() - 1);
  CHECK(explanation.sequence.own_position == data.n());
}

TEST_CASE("the deepest point of a symmetric sample sits near the middle") {
  Rng rng(37);
  const DataMatrix data = random_gaussian_data(101, 2, rng);
  const DepthModel model = projection_model(data, 3);
  const DirectionSimilarity sim = direction_similarity(model, data);
  // Deepest point overall = last in depth-ascending order.
  const Index deepest = sim.order.back();
  const Explanation explanation = explain_point(model, data, deepest);
  const double center = static_cast<double>(data.n()) / 2.0;
  CHECK(std::abs(static_cast<double>(explanation.sequence.own_position) -
                 center) <= 0.15 * static_cast<double>(data.n()));
}

TEST_CASE("similarity matrix is symmetric with a unit diagonal") {
  Rng rng(71);
  const DataMatrix data = random_gaussian_data(35, 3, rng);
  const DepthModel model = projection_model(data, 13);
  const DirectionSimilarity sim = direction_similarity(model, data, 2);
  REQUIRE(sim.matrix.rows() == data.n());
  for (Index i = 0; i < data.n(); ++i) {
    CHECK(sim.matrix(i, i) == Approx(1.0).margin(1e-12));
    for (Index j = 0; j < i; ++j) {
      CHECK(sim.matrix(i, j) == sim.matrix(j, i));
      CHECK(sim.matrix(i, j) <= 1.0 + 1e-12);
      CHECK(sim.matrix(i, j) >= -1.0 - 1e-12);
    }
  }
  CHECK(std::is_sorted(sim.ordered_depths.begin(), sim.ordered_depths.end()));
}

TEST_CASE("duplicated rows receive identical directions") {
  Rng rng(4242);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({rng.normal(), rng.normal()});
  rows.push_back({3.5, -2.0});
  rows.push_back({3.5, -2.0});  // exact duplicate
  const DataMatrix data = DataMatrix::from_rows(rows);
  const DepthModel model = projection_model(data, 99);
  const Explanation a = explain_point(model, data, data.n() - 2);
  const Explanation b = explain_point(model, data, data.n() - 1);
  CHECK((a.direction.coords - b.direction.coords).norm() == 0.0);
  CHECK(a.depth.value == b.depth.value);
}

TEST_CASE("degenerate queries raise AmbiguousDirection") {
  const DataMatrix cross =
      DataMatrix::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {0, 0}});
  const DepthModel model = projection_model(cross, 7, 50);
  CHECK_THROWS_AS(explain_point(model, cross, 4), AmbiguousDirection);
}

TEST_CASE("explanations need a projection-type model") {
  Rng rng(3);
  const DataMatrix data = random_gaussian_data(30, 2, rng);
  SearchBudget budget;
  const DepthModel model = fit(data, DepthNotion::mahalanobis, budget,
                               ThresholdSpec::fixed(0.2));
  CHECK_THROWS_AS(explain_point(model, data, 0), UnsupportedNotion);
  CHECK_THROWS_AS(direction_similarity(model, data), UnsupportedNotion);
}

TEST_CASE("anomaly groups separate distinct anomaly directions") {
  Rng rng(2026);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 60; ++i) {
    rows.push_back({0.3 * rng.normal(), 0.3 * rng.normal()});
  }
  for (int i = 0; i < 3; ++i) rows.push_back({8.0 + 0.05 * rng.normal(), 0.0});
  for (int i = 0; i < 3; ++i) rows.push_back({0.0, 8.0 + 0.05 * rng.normal()});
  const DataMatrix data = DataMatrix::from_rows(rows);
  const DepthModel model = projection_model(data, 15, 400, 0.1);
  const DirectionSimilarity sim = direction_similarity(model, data, 2);
  const auto groups = anomaly_groups(sim, model.threshold, 0.95);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].size() == 3);
  CHECK(groups[1].size() == 3);
}
