#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "depth/core.hpp"
#include "depth/depths.hpp"
#include "depth/rng.hpp"
#include "depth/robust_stats.hpp"

namespace depth {

enum class SearchStrategy { random, refined_random, nelder_mead };

inline const char* to_string(SearchStrategy s) {
  switch (s) {
    case SearchStrategy::random: return "rs";
    case SearchStrategy::refined_random: return "rrs";
    case SearchStrategy::nelder_mead: return "nelder_mead";
  }
  throw DepthError("unknown search strategy");
}

inline SearchStrategy parse_strategy(const std::string& s) {
  if (s == "rs") return SearchStrategy::random;
  if (s == "rrs") return SearchStrategy::refined_random;
  if (s == "nelder_mead") return SearchStrategy::nelder_mead;
  throw FormatError("unknown search strategy: " + s);
}

/// Evaluation budget and strategy for a direction search over S^{d-1}.
/// The refinement schedule (rounds, initial cap, shrink factor) only applies
/// to the refined random search.
struct SearchBudget {
  std::int64_t n_directions = 500;
  SearchStrategy strategy = SearchStrategy::nelder_mead;
  std::uint64_t seed = 0;
  int restarts = 0;  // 0 = derive from the budget
  int rrs_rounds = 10;
  double rrs_initial_cap = M_PI / 2.0;
  double rrs_shrink = 0.5;

  SearchBudget with_seed(std::uint64_t s) const {
    SearchBudget copy = *this;
    copy.seed = s;
    return copy;
  }
  SearchBudget with_directions(std::int64_t n) const {
    SearchBudget copy = *this;
    copy.n_directions = n;
    return copy;
  }
};

/// Outcome of an approximate depth computation: the (upper-bounding) value,
/// the best direction found, and the number of objective evaluations spent.
/// `ambiguous` marks a query with zero outlyingness in every sampled
/// direction, for which any direction is as good as any other.
struct ApproxDepthResult {
  DepthValue value;
  UnitDirection best_direction;
  std::int64_t evaluations_used = 0;
  bool ambiguous = false;
};

/// Uniform draw on S^{d-1}: a standard normal vector, normalized.
inline UnitDirection uniform_sphere_direction(Index d, Rng& rng) {
  if (d < 1) throw DimensionMismatch("direction dimension must be positive");
  Vector g(d);
  double norm = 0.0;
  do {
    for (Index i = 0; i < d; ++i) g(i) = rng.normal();
    norm = g.norm();
  } while (norm == 0.0);
  return UnitDirection(g / norm);
}

namespace detail {

// Univariate objective of the projection-property depths for one query point.
// Lower is more extreme; the approximate depth is the minimum over all
// evaluated directions. Buffers are reused across evaluations.
class DirectionObjective {
 public:
  DirectionObjective(const Vector& x, const DataMatrix& data,
                     DepthNotion notion)
      : x_(x), data_(data), notion_(notion), projections_(data.n()) {
    if (!notion_is_projective(notion)) {
      throw UnsupportedNotion(
          "direction search supports halfspace and projection depths");
    }
    if (x.size() != data.dim()) {
      throw DimensionMismatch("direction search: dimension mismatch");
    }
  }

  double evaluate(const Vector& u) {
    projections_.noalias() = data_.values() * u;
    const double projected_x = x_.dot(u);
    const auto n = static_cast<std::size_t>(projections_.size());

    if (notion_ == DepthNotion::halfspace) {
      std::size_t below_or_eq = 0, above_or_eq = 0;
      for (Index i = 0; i < projections_.size(); ++i) {
        const double p = projections_(i);
        below_or_eq += (p <= projected_x);
        above_or_eq += (p >= projected_x);
      }
      return static_cast<double>(std::min(below_or_eq, above_or_eq)) /
             static_cast<double>(n);
    }

    scratch_.assign(projections_.data(), projections_.data() + n);
    const double med = median_inplace(scratch_);
    double numerator, scale;
    if (notion_ == DepthNotion::projection) {
      numerator = std::abs(projected_x - med);
      scratch_.assign(projections_.data(), projections_.data() + n);
      for (double& v : scratch_) v = std::abs(v - med);
      scale = median_inplace(scratch_);
    } else {
      numerator = std::max(projected_x - med, 0.0);
      scratch_.clear();
      for (Index i = 0; i < projections_.size(); ++i) {
        const double dev = projections_(i) - med;
        if (dev > 0.0) scratch_.push_back(dev);
      }
      scale = scratch_.empty() ? 0.0 : median_inplace(scratch_);
    }
    if (scale > 0.0) return 1.0 / (1.0 + numerator / scale);
    return numerator == 0.0 ? 1.0 : 0.0;
  }

  // med(X^T u), used for the canonical sign of reported directions.
  double projected_median(const Vector& u) {
    projections_.noalias() = data_.values() * u;
    scratch_.assign(projections_.data(),
                    projections_.data() + projections_.size());
    return median_inplace(scratch_);
  }

  double projected_query(const Vector& u) const { return x_.dot(u); }

 private:
  const Vector& x_;
  const DataMatrix& data_;
  DepthNotion notion_;
  Vector projections_;
  std::vector<double> scratch_;
};

// Rotates `center` by exactly `angle` toward a uniform tangent direction.
inline Vector rotate_toward_random_tangent(const Vector& center, double angle,
                                           Rng& rng) {
  const Index d = center.size();
  if (d == 1) return center;
  Vector g(d);
  for (Index i = 0; i < d; ++i) g(i) = rng.normal();
  Vector tangent = g - g.dot(center) * center;
  const double tangent_norm = tangent.norm();
  if (tangent_norm == 0.0) return center;
  tangent /= tangent_norm;
  Vector out = std::cos(angle) * center + std::sin(angle) * tangent;
  return out / out.norm();
}

// Draw inside the spherical cap of half-angle `cap_angle` around `center`:
// a uniform tangent direction, then a uniform rotation angle within the cap.
inline Vector sample_in_cap(const Vector& center, double cap_angle, Rng& rng) {
  const double angle = cap_angle * rng.uniform01();
  return rotate_toward_random_tangent(center, angle, rng);
}

struct SearchState {
  double best_value = std::numeric_limits<double>::infinity();
  Vector best_direction;
  std::int64_t evaluations = 0;

  // Strictly-better updates keep the earliest optimum, which makes results
  // reproducible and preserves the conservative bound.
  void consider(const Vector& u, double value) {
    ++evaluations;
    if (value < best_value) {
      best_value = value;
      best_direction = u;
    }
  }
};

inline ApproxDepthResult finalize_search(SearchState state,
                                         DirectionObjective& objective,
                                         DepthNotion notion) {
  bool ambiguous = false;
  if (notion_has_directions(notion)) {
    ambiguous = state.best_value >= 1.0;
    if (notion == DepthNotion::projection) {
      const double offset =
          objective.projected_query(state.best_direction) -
          objective.projected_median(state.best_direction);
      if (offset < 0.0) state.best_direction = -state.best_direction;
    }
    // The asymmetric objective already points from the data toward the
    // query whenever its outlyingness is positive; flipping a degenerate
    // direction would change the objective value, so it is left as found.
  }
  return ApproxDepthResult{
      DepthValue{state.best_value, notion, Exactness::approximate},
      UnitDirection::normalized(state.best_direction), state.evaluations,
      ambiguous};
}

}  // namespace detail

/// Random search: the objective on n_directions independent uniform draws.
inline ApproxDepthResult approx_depth_rs(const Vector& x,
                                         const DataMatrix& data,
                                         DepthNotion notion,
                                         const SearchBudget& budget) {
  if (budget.n_directions < 1) {
    throw DepthError("random search needs at least one direction");
  }
  detail::DirectionObjective objective(x, data, notion);
  detail::SearchState state;
  Rng rng(budget.seed);
  for (std::int64_t k = 0; k < budget.n_directions; ++k) {
    const UnitDirection u = uniform_sphere_direction(data.dim(), rng);
    state.consider(u.coords, objective.evaluate(u.coords));
  }
  return detail::finalize_search(std::move(state), objective, notion);
}

/// Refined random search: the budget is split into rounds; the first round
/// samples uniformly and every later round samples inside a spherical cap
/// around the incumbent, with the cap angle shrunk geometrically.
inline ApproxDepthResult approx_depth_rrs(const Vector& x,
                                          const DataMatrix& data,
                                          DepthNotion notion,
                                          const SearchBudget& budget) {
  if (budget.n_directions < 1) {
    throw DepthError("refined random search needs at least one direction");
  }
  const std::int64_t rounds =
      std::max<std::int64_t>(1, std::min<std::int64_t>(budget.rrs_rounds,
                                                       budget.n_directions));
  detail::DirectionObjective objective(x, data, notion);
  detail::SearchState state;
  Rng rng(budget.seed);
  const std::int64_t quota = budget.n_directions / rounds;
  const std::int64_t remainder = budget.n_directions % rounds;
  for (std::int64_t round = 0; round < rounds; ++round) {
    const std::int64_t draws = quota + (round < remainder ? 1 : 0);
    const double cap =
        budget.rrs_initial_cap * std::pow(budget.rrs_shrink, round - 1);
    for (std::int64_t k = 0; k < draws; ++k) {
      const Vector u =
          round == 0
              ? uniform_sphere_direction(data.dim(), rng).coords
              : detail::sample_in_cap(state.best_direction, cap, rng);
      state.consider(u, objective.evaluate(u));
    }
  }
  return detail::finalize_search(std::move(state), objective, notion);
}

/// Nelder-Mead on the sphere: a simplex of d unit vectors; reflection,
/// expansion, contraction and shrink steps are taken in the ambient space and
/// re-normalized. Multiple restarts from independent uniform seeds share the
/// evaluation budget.
inline ApproxDepthResult approx_depth_neldermead(const Vector& x,
                                                 const DataMatrix& data,
                                                 DepthNotion notion,
                                                 const SearchBudget& budget) {
  const Index d = data.dim();
  const std::int64_t total = budget.n_directions;
  if (total < d + 1) {
    throw DepthError("Nelder-Mead needs a budget of at least d + 1");
  }
  detail::DirectionObjective objective(x, data, notion);
  detail::SearchState state;
  Rng rng(budget.seed);

  if (d == 1) {
    Vector plus(1), minus(1);
    plus << 1.0;
    minus << -1.0;
    state.consider(plus, objective.evaluate(plus));
    state.consider(minus, objective.evaluate(minus));
    return detail::finalize_search(std::move(state), objective, notion);
  }

  std::int64_t restarts =
      budget.restarts > 0
          ? budget.restarts
          : std::max<std::int64_t>(1, total / (20 * static_cast<std::int64_t>(d)));
  restarts = std::min(restarts, total / (d + 1));
  restarts = std::max<std::int64_t>(restarts, 1);

  constexpr double kReflection = 1.0;
  constexpr double kExpansion = 2.0;
  constexpr double kContraction = 0.5;
  constexpr double kShrink = 0.5;
  constexpr double kInitAngle = 0.1;

  const std::size_t simplex_size = static_cast<std::size_t>(d);
  std::vector<Vector> vertex(simplex_size);
  std::vector<double> vertex_value(simplex_size);
  std::vector<std::size_t> order(simplex_size);

  auto propose = [&](const Vector& centroid, const Vector& worst,
                     double coefficient) {
    Vector p = centroid + coefficient * (centroid - worst);
    const double norm = p.norm();
    if (norm < 1e-12) return uniform_sphere_direction(d, rng).coords;
    return Vector(p / norm);
  };

  for (std::int64_t restart = 0; restart < restarts; ++restart) {
    const std::int64_t allocation =
        (total - state.evaluations) / (restarts - restart);
    if (allocation < d + 1) break;
    std::int64_t used = 0;
    auto evaluate = [&](const Vector& u) {
      ++used;
      const double value = objective.evaluate(u);
      state.consider(u, value);
      return value;
    };

    const Vector anchor = uniform_sphere_direction(d, rng).coords;
    vertex[0] = anchor;
    for (std::size_t i = 1; i < simplex_size; ++i) {
      vertex[i] = detail::rotate_toward_random_tangent(anchor, kInitAngle, rng);
      if ((vertex[i] - anchor).norm() == 0.0) {
        vertex[i] = uniform_sphere_direction(d, rng).coords;
      }
    }
    for (std::size_t i = 0; i < simplex_size; ++i) {
      vertex_value[i] = evaluate(vertex[i]);
    }

    while (used < allocation) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return vertex_value[a] < vertex_value[b];
                       });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second_worst =
          simplex_size >= 2 ? order[simplex_size - 2] : worst;

      double spread = 0.0;
      for (std::size_t i = 0; i < simplex_size; ++i) {
        spread = std::max(spread, (vertex[i] - vertex[best]).norm());
      }
      if (spread < 1e-10) break;

      Vector centroid = Vector::Zero(d);
      for (std::size_t i = 0; i + 1 < simplex_size; ++i) {
        centroid += vertex[order[i]];
      }
      centroid /= static_cast<double>(std::max<std::size_t>(simplex_size - 1, 1));

      const Vector reflected = propose(centroid, vertex[worst], kReflection);
      const double reflected_value = evaluate(reflected);

      if (reflected_value < vertex_value[best]) {
        if (used < allocation) {
          const Vector expanded = propose(centroid, vertex[worst], kExpansion);
          const double expanded_value = evaluate(expanded);
          if (expanded_value < reflected_value) {
            vertex[worst] = expanded;
            vertex_value[worst] = expanded_value;
            continue;
          }
        }
        vertex[worst] = reflected;
        vertex_value[worst] = reflected_value;
        continue;
      }
      if (reflected_value < vertex_value[second_worst]) {
        vertex[worst] = reflected;
        vertex_value[worst] = reflected_value;
        continue;
      }
      if (used >= allocation) break;
      const Vector contracted =
          reflected_value < vertex_value[worst]
              ? propose(centroid, vertex[worst], kContraction)
              : propose(centroid, vertex[worst], -kContraction);
      const double contracted_value = evaluate(contracted);
      if (contracted_value <
          std::min(reflected_value, vertex_value[worst])) {
        vertex[worst] = contracted;
        vertex_value[worst] = contracted_value;
        continue;
      }
      // Shrink toward the best vertex.
      if (used + static_cast<std::int64_t>(simplex_size) - 1 > allocation) {
        break;
      }
      for (std::size_t i = 0; i < simplex_size; ++i) {
        if (i == best) continue;
        Vector contractedVertex =
            vertex[best] + kShrink * (vertex[i] - vertex[best]);
        const double norm = contractedVertex.norm();
        vertex[i] = norm < 1e-12 ? uniform_sphere_direction(d, rng).coords
                                 : Vector(contractedVertex / norm);
        vertex_value[i] = evaluate(vertex[i]);
      }
    }
  }
  return detail::finalize_search(std::move(state), objective, notion);
}

/// Dispatch on the budget's strategy.
inline ApproxDepthResult approx_depth(const Vector& x, const DataMatrix& data,
                                      DepthNotion notion,
                                      const SearchBudget& budget) {
  switch (budget.strategy) {
    case SearchStrategy::random:
      return approx_depth_rs(x, data, notion, budget);
    case SearchStrategy::refined_random:
      return approx_depth_rrs(x, data, notion, budget);
    case SearchStrategy::nelder_mead:
      return approx_depth_neldermead(x, data, notion, budget);
  }
  throw DepthError("unknown search strategy");
}

/// The witness direction of a projection-notion search, with the canonical
/// sign pointing from the data's center toward the query point.
inline UnitDirection optimal_direction(const ApproxDepthResult& result) {
  if (!notion_has_directions(result.value.notion)) {
    throw UnsupportedNotion(
        "optimal_direction is defined for projection-type results");
  }
  return result.best_direction;
}

}  // namespace depth
