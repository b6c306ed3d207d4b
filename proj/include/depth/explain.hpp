#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "depth/core.hpp"
#include "depth/detect.hpp"
#include "depth/optimize.hpp"
#include "depth/parallel.hpp"

namespace depth {

// Anomaly-explanation artifacts built from projection-depth optimal
// directions. Every point of the data set is explained with the model's base
// seed (not the per-index scoring seed), so duplicated rows receive identical
// directions.

/// Projections of the whole data set on one point's optimal direction,
/// sorted ascending with the left-most value subtracted. own_position is the
/// 1-based rank of the explained point inside the sequence.
struct ProjectionSequence {
  Index point_index = 0;
  std::vector<double> projections;
  Index own_position = 0;
};

struct Explanation {
  UnitDirection direction;  // canonical sign: u^T x - med(X^T u) >= 0
  ProjectionSequence sequence;
  Vector contribution;  // coordinates of the direction, signed per variable
  DepthValue depth;
};

namespace detail {

struct PointDirection {
  Vector direction;
  double depth_value = 0.0;
  bool ambiguous = false;
};

inline PointDirection explain_direction(const DepthModel& model,
                                        const DataMatrix& data, Index i) {
  if (!notion_has_directions(model.notion)) {
    throw UnsupportedNotion("explanations need a projection-type notion");
  }
  const Vector x = data.row(i);
  if (data.dim() == 1) {
    UnivariateSample s(static_cast<std::size_t>(data.n()));
    for (Index r = 0; r < data.n(); ++r) {
      s[static_cast<std::size_t>(r)] = data.values()(r, 0);
    }
    const DepthValue v = projection_depth_1d(
        x, data, model.notion == DepthNotion::projection_asymmetric);
    Vector u(1);
    u << (x(0) >= median(s) ? 1.0 : -1.0);
    return {u, v.value, v.value >= 1.0};
  }
  const ApproxDepthResult result =
      approx_depth(x, data, model.notion, model.budget);
  return {result.best_direction.coords, result.value.value, result.ambiguous};
}

inline ProjectionSequence projection_sequence(const DataMatrix& data,
                                              const Vector& direction,
                                              Index point_index) {
  const Index n = data.n();
  Vector projections = data.values() * direction;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (projections(a) != projections(b)) {
      return projections(a) < projections(b);
    }
    return a < b;
  });
  ProjectionSequence sequence;
  sequence.point_index = point_index;
  sequence.projections.resize(static_cast<std::size_t>(n));
  const double leftmost = projections(order.front());
  for (std::size_t r = 0; r < order.size(); ++r) {
    sequence.projections[r] = projections(order[r]) - leftmost;
    if (order[r] == point_index) {
      sequence.own_position = static_cast<Index>(r) + 1;
    }
  }
  return sequence;
}

}  // namespace detail

/// Optimal direction, ordered projection sequence, and per-variable
/// contribution for observation i of the data set.
inline Explanation explain_point(const DepthModel& model,
                                 const DataMatrix& data, Index i) {
  if (i < 0 || i >= data.n()) {
    throw DepthError("explain_point: index out of range");
  }
  detail::PointDirection pd = detail::explain_direction(model, data, i);
  if (pd.ambiguous) {
    throw AmbiguousDirection(
        "point has zero outlyingness in every sampled direction");
  }
  Explanation out{UnitDirection::normalized(pd.direction),
                  detail::projection_sequence(data, pd.direction, i),
                  pd.direction,
                  DepthValue{pd.depth_value, model.notion,
                             data.dim() == 1 ? Exactness::exact
                                             : Exactness::approximate}};
  return out;
}

/// Pairwise scalar products between canonical optimal directions, with
/// points ordered by increasing depth (ties by original index).
struct DirectionSimilarity {
  std::vector<Index> order;            // original indices, depth-ascending
  std::vector<double> ordered_depths;  // depths in the same order
  Matrix directions;                   // row r = canonical direction of rank r
  Matrix matrix;                       // matrix(r, c) = u*_r . u*_c
};

inline DirectionSimilarity direction_similarity(const DepthModel& model,
                                                const DataMatrix& data,
                                                int workers = 1) {
  const Index n = data.n();
  std::vector<detail::PointDirection> directions(
      static_cast<std::size_t>(n));
  parallel_for(n, workers, [&](std::int64_t i) {
    directions[static_cast<std::size_t>(i)] =
        detail::explain_direction(model, data, static_cast<Index>(i));
  });

  DirectionSimilarity sim;
  sim.order.resize(static_cast<std::size_t>(n));
  std::iota(sim.order.begin(), sim.order.end(), Index{0});
  std::sort(sim.order.begin(), sim.order.end(), [&](Index a, Index b) {
    const double da = directions[static_cast<std::size_t>(a)].depth_value;
    const double db = directions[static_cast<std::size_t>(b)].depth_value;
    if (da != db) return da < db;
    return a < b;
  });

  sim.directions = Matrix(n, data.dim());
  sim.ordered_depths.resize(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    const auto& pd =
        directions[static_cast<std::size_t>(sim.order[static_cast<std::size_t>(r)])];
    sim.directions.row(r) = pd.direction.transpose();
    sim.ordered_depths[static_cast<std::size_t>(r)] = pd.depth_value;
  }
  sim.matrix = sim.directions * sim.directions.transpose();
  return sim;
}

/// Connected components of the thresholded similarity graph restricted to
/// points flagged by the model threshold; a machine-readable counterpart of
/// reading the similarity heat map. Groups hold original point indices.
inline std::vector<std::vector<Index>> anomaly_groups(
    const DirectionSimilarity& sim, double depth_threshold,
    double similarity_threshold = 0.95) {
  const auto n = static_cast<Index>(sim.order.size());
  std::vector<Index> flagged_ranks;
  for (Index r = 0; r < n; ++r) {
    if (sim.ordered_depths[static_cast<std::size_t>(r)] < depth_threshold) {
      flagged_ranks.push_back(r);
    }
  }
  std::vector<std::size_t> parent(flagged_ranks.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (std::size_t a = 0; a < flagged_ranks.size(); ++a) {
    for (std::size_t b = a + 1; b < flagged_ranks.size(); ++b) {
      if (sim.matrix(flagged_ranks[a], flagged_ranks[b]) >=
          similarity_threshold) {
        parent[find(a)] = find(b);
      }
    }
  }
  std::vector<std::vector<Index>> groups;
  std::vector<std::ptrdiff_t> group_of(flagged_ranks.size(), -1);
  for (std::size_t a = 0; a < flagged_ranks.size(); ++a) {
    const std::size_t root = find(a);
    if (group_of[root] < 0) {
      group_of[root] = static_cast<std::ptrdiff_t>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(group_of[root])].push_back(
        sim.order[static_cast<std::size_t>(flagged_ranks[a])]);
  }
  for (auto& group : groups) std::sort(group.begin(), group.end());
  std::sort(groups.begin(), groups.end());
  return groups;
}

}  // namespace depth
