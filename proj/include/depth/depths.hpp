#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "depth/core.hpp"
#include "depth/rng.hpp"
#include "depth/robust_stats.hpp"

namespace depth {

enum class Exactness { exact, approximate, oracle };

inline const char* to_string(Exactness e) {
  switch (e) {
    case Exactness::exact: return "exact";
    case Exactness::approximate: return "approximate";
    case Exactness::oracle: return "oracle";
  }
  throw DepthError("unknown exactness tag");
}

/// A depth evaluation: value in [0,1], the notion it belongs to, and whether
/// the number is exact, a sampling approximation, or a brute-force oracle.
struct DepthValue {
  double value = 0.0;
  DepthNotion notion = DepthNotion::mahalanobis;
  Exactness exactness = Exactness::exact;
};

// Hard cap on enumerated subsets for the combinatorial depths; beyond it the
// Monte Carlo estimator must be used instead.
inline constexpr double kCombinatorialBudget = 2e7;

/// C(n, k) computed exactly in double precision for moderate arguments.
inline double binomial_count(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    result = result * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (result > 1e18) return result;  // far past any enumeration budget
  }
  return std::round(result);
}

/// 1 / (1 + squared Mahalanobis distance to mu under sigma_inv).
inline DepthValue mahalanobis_depth(const Vector& x, const LocationScatter& ls) {
  if (x.size() != ls.dim()) {
    throw DimensionMismatch("mahalanobis_depth: dimension mismatch");
  }
  const Vector centered = x - ls.mu;
  double q = centered.dot(ls.sigma_inv * centered);
  if (q < 0.0) q = 0.0;  // symmetric-form roundoff
  return {1.0 / (1.0 + q), DepthNotion::mahalanobis, Exactness::exact};
}

namespace detail {

inline double cross2(double ax, double ay, double bx, double by) {
  return ax * by - ay * bx;
}

inline double dot2(double ax, double ay, double bx, double by) {
  return ax * bx + ay * by;
}

// Minimum over unit directions u of #{v : v^T u <= 0} for a set of nonzero
// 2-d vectors. Exact: candidate normals pass through each vector, and the
// one-sided rotation limits around each candidate recover all adjacent
// constancy cells of the count function.
inline std::int64_t min_halfplane_count(
    const std::vector<std::array<double, 2>>& v) {
  if (v.empty()) return 0;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& vi : v) {
    std::int64_t negative = 0, positive = 0, same_ray = 0, opposite_ray = 0;
    for (const auto& vj : v) {
      const double c = cross2(vi[0], vi[1], vj[0], vj[1]);
      if (c < 0.0) {
        ++negative;
      } else if (c > 0.0) {
        ++positive;
      } else if (dot2(vi[0], vi[1], vj[0], vj[1]) > 0.0) {
        ++same_ray;
      } else {
        ++opposite_ray;
      }
    }
    const std::int64_t on_boundary = same_ray + opposite_ray;
    const std::int64_t rotation_min = std::min(same_ray, opposite_ray);
    best = std::min({best, negative + on_boundary, positive + on_boundary,
                     negative + rotation_min, positive + rotation_min});
  }
  return best;
}

}  // namespace detail

/// Exact halfspace (Tukey) depth in the plane via an angular sweep: offsets
/// from x are sorted by angle and a closed halfplane is swept around x; the
/// minimizing direction leaves the largest open semicircle uncovered.
inline DepthValue halfspace_depth_2d(const Vector& x, const DataMatrix& data) {
  if (data.dim() != 2 || x.size() != 2) {
    throw DimensionMismatch("halfspace_depth_2d requires d = 2");
  }
  const Index n = data.n();
  const Matrix& values = data.values();

  struct Offset {
    double angle, zx, zy;
  };
  std::vector<Offset> offsets;
  offsets.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double zx = values(i, 0) - x(0);
    const double zy = values(i, 1) - x(1);
    if (zx == 0.0 && zy == 0.0) continue;  // coincident points lie in every halfplane
    offsets.push_back({std::atan2(zy, zx), zx, zy});
  }
  if (offsets.empty()) {
    return {1.0, DepthNotion::halfspace, Exactness::exact};
  }
  std::sort(offsets.begin(), offsets.end(),
            [](const Offset& a, const Offset& b) { return a.angle < b.angle; });

  // Group offsets sharing a ray so ties sweep as one block.
  struct Group {
    double zx, zy;
    std::int64_t count;
  };
  std::vector<Group> groups;
  for (const Offset& o : offsets) {
    if (!groups.empty()) {
      Group& last = groups.back();
      if (detail::cross2(last.zx, last.zy, o.zx, o.zy) == 0.0 &&
          detail::dot2(last.zx, last.zy, o.zx, o.zy) > 0.0) {
        ++last.count;
        continue;
      }
    }
    groups.push_back({o.zx, o.zy, 1});
  }

  const std::size_t k = groups.size();
  auto in_open_semicircle = [&](std::size_t start, std::size_t other) {
    if (start == other) return true;
    return detail::cross2(groups[start].zx, groups[start].zy, groups[other].zx,
                          groups[other].zy) > 0.0;
  };

  // Largest point count over open semicircles [theta_k, theta_k + pi).
  std::int64_t best_open = 0;
  std::int64_t window = 0;
  std::size_t reach = 0;
  for (std::size_t start = 0; start < k; ++start) {
    if (reach < start) {
      reach = start;
      window = 0;
    }
    while (reach < start + k && in_open_semicircle(start, reach % k)) {
      window += groups[reach % k].count;
      ++reach;
    }
    best_open = std::max(best_open, window);
    window -= groups[start].count;
  }

  const double value =
      static_cast<double>(n - best_open) / static_cast<double>(n);
  return {value, DepthNotion::halfspace, Exactness::exact};
}

/// Brute-force halfspace depth for d <= 3. Enumerates candidate normals
/// spanned by (d-1)-subsets of the offsets, evaluates the closed count at
/// each candidate and its negation, and takes one-sided rotation limits
/// (recursively in d = 3) so that every constancy cell of the objective is
/// reached. Intended as a test oracle.
inline DepthValue halfspace_depth_oracle(const Vector& x,
                                         const DataMatrix& data) {
  const Index d = data.dim();
  const Index n = data.n();
  if (x.size() != d) {
    throw DimensionMismatch("halfspace_depth_oracle: dimension mismatch");
  }
  if (d > 3) {
    throw DimensionMismatch("halfspace_depth_oracle supports d <= 3");
  }
  const double work =
      binomial_count(n, d - 1) * static_cast<double>(n);
  if (work > 1e7) {
    throw BudgetExceeded("halfspace_depth_oracle: candidate count too large");
  }

  const Matrix& values = data.values();
  std::vector<Vector> offsets;
  offsets.reserve(static_cast<std::size_t>(n));
  std::int64_t coincident = 0;
  for (Index i = 0; i < n; ++i) {
    Vector z = values.row(i).transpose() - x;
    if ((z.array() == 0.0).all()) {
      ++coincident;
    } else {
      offsets.push_back(std::move(z));
    }
  }
  const auto to_value = [&](std::int64_t count) {
    return DepthValue{static_cast<double>(count) / static_cast<double>(n),
                      DepthNotion::halfspace, Exactness::oracle};
  };
  if (offsets.empty()) return to_value(n);

  if (d == 1) {
    std::int64_t neg = 0, pos = 0;
    for (const Vector& z : offsets) (z(0) < 0.0 ? neg : pos)++;
    return to_value(coincident + std::min(neg, pos));
  }

  if (d == 2) {
    std::vector<std::array<double, 2>> v;
    v.reserve(offsets.size());
    for (const Vector& z : offsets) v.push_back({z(0), z(1)});
    return to_value(coincident + detail::min_halfplane_count(v));
  }

  // d == 3: candidate normals from pairs of non-parallel offsets; offsets on
  // the candidate's boundary plane form a planar subproblem solved by the
  // 2-d helper.
  const std::size_t m = offsets.size();
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  bool found_pair = false;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      Eigen::Vector3d a = offsets[i].head<3>();
      Eigen::Vector3d b = offsets[j].head<3>();
      Eigen::Vector3d normal = a.cross(b);
      if (normal.norm() == 0.0) continue;
      found_pair = true;
      std::int64_t negative = 0, positive = 0;
      std::vector<std::size_t> boundary;
      for (std::size_t l = 0; l < m; ++l) {
        if (l == i || l == j) {
          boundary.push_back(l);
          continue;
        }
        const double s = offsets[l].head<3>().dot(normal);
        if (s < 0.0) {
          ++negative;
        } else if (s > 0.0) {
          ++positive;
        } else {
          boundary.push_back(l);
        }
      }
      Eigen::Vector3d e1 = a.normalized();
      Eigen::Vector3d e2 = normal.cross(a).normalized();
      std::vector<std::array<double, 2>> plane;
      plane.reserve(boundary.size());
      for (std::size_t l : boundary) {
        plane.push_back(
            {offsets[l].head<3>().dot(e1), offsets[l].head<3>().dot(e2)});
      }
      best = std::min(best, std::min(negative, positive) +
                                detail::min_halfplane_count(plane));
    }
  }
  if (!found_pair) {
    // All offsets share one line through x: reduce to the 1-d count.
    const Eigen::Vector3d axis = offsets.front().head<3>();
    std::int64_t neg = 0, pos = 0;
    for (const Vector& z : offsets) {
      (z.head<3>().dot(axis) < 0.0 ? neg : pos)++;
    }
    best = std::min(neg, pos);
  }
  return to_value(coincident + best);
}

/// Projection depth on the line: the direction extremum over S^0 = {-1, +1}
/// is enumerated directly.
inline DepthValue projection_depth_1d(const Vector& x, const DataMatrix& data,
                                      bool asymmetric = false) {
  if (data.dim() != 1 || x.size() != 1) {
    throw DimensionMismatch("projection_depth_1d requires d = 1");
  }
  const Index n = data.n();
  UnivariateSample sample(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    sample[static_cast<std::size_t>(i)] = data.values()(i, 0);
  }
  double outlyingness;
  if (!asymmetric) {
    outlyingness = projected_outlyingness(x(0), sample, false);
  } else {
    UnivariateSample negated(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) negated[i] = -sample[i];
    outlyingness = std::max(projected_outlyingness(x(0), sample, true),
                            projected_outlyingness(-x(0), negated, true));
  }
  const double value = std::isinf(outlyingness) ? 0.0 : 1.0 / (1.0 + outlyingness);
  return {value,
          asymmetric ? DepthNotion::projection_asymmetric
                     : DepthNotion::projection,
          Exactness::exact};
}

namespace detail {

// Closed-simplex membership with barycentric tolerance. Degenerate (affinely
// dependent) vertex sets fall back to membership in some drop-one face, which
// equals membership in the degenerate hull by Caratheodory's theorem.
inline bool convex_hull_contains(const Vector& x,
                                 const std::vector<Vector>& vertices,
                                 double tolerance) {
  const Index d = x.size();
  const std::size_t k = vertices.size();
  if (k == 1) {
    return (x - vertices[0]).lpNorm<Eigen::Infinity>() <= tolerance;
  }
  auto drop_one = [&]() {
    for (std::size_t skip = 0; skip < k; ++skip) {
      std::vector<Vector> face;
      face.reserve(k - 1);
      for (std::size_t j = 0; j < k; ++j) {
        if (j != skip) face.push_back(vertices[j]);
      }
      if (convex_hull_contains(x, face, tolerance)) return true;
    }
    return false;
  };

  if (static_cast<Index>(k) == d + 1) {
    Matrix system(d + 1, d + 1);
    for (std::size_t j = 0; j < k; ++j) {
      system.block(0, static_cast<Index>(j), d, 1) = vertices[j];
      system(d, static_cast<Index>(j)) = 1.0;
    }
    Eigen::FullPivLU<Matrix> lu(system);
    if (lu.isInvertible()) {
      Vector rhs(d + 1);
      rhs.head(d) = x;
      rhs(d) = 1.0;
      const Vector lambda = lu.solve(rhs);
      return (lambda.array() >= -tolerance).all();
    }
    return drop_one();
  }

  // Fewer points than a full simplex: solve the affine system in least
  // squares and require both feasibility and a negligible residual.
  Matrix system(d + 1, static_cast<Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    system.block(0, static_cast<Index>(j), d, 1) = vertices[j];
    system(d, static_cast<Index>(j)) = 1.0;
  }
  Vector rhs(d + 1);
  rhs.head(d) = x;
  rhs(d) = 1.0;
  Eigen::ColPivHouseholderQR<Matrix> qr(system);
  if (qr.rank() == static_cast<Index>(k)) {
    const Vector lambda = qr.solve(rhs);
    double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
    for (const Vector& v : vertices) {
      scale = std::max(scale, v.lpNorm<Eigen::Infinity>());
    }
    const double residual = (system * lambda - rhs).lpNorm<Eigen::Infinity>();
    return residual <= tolerance * scale &&
           (lambda.array() >= -tolerance).all();
  }
  return drop_one();
}

// Fast closed-triangle test for the d = 2 enumeration hot path; offsets are
// relative to the query point. Falls back to the generic routine when the
// triangle is exactly degenerate.
inline bool triangle_contains_origin(double ax, double ay, double bx,
                                     double by, double cx, double cy,
                                     double tolerance) {
  const double det = cross2(ax - cx, ay - cy, bx - cx, by - cy);
  if (det != 0.0) {
    const double l1 = cross2(-cx, -cy, bx - cx, by - cy) / det;
    const double l2 = cross2(ax - cx, ay - cy, -cx, -cy) / det;
    return l1 >= -tolerance && l2 >= -tolerance &&
           1.0 - l1 - l2 >= -tolerance;
  }
  std::vector<Vector> vertices(3, Vector(2));
  vertices[0] << ax, ay;
  vertices[1] << bx, by;
  vertices[2] << cx, cy;
  return convex_hull_contains(Vector::Zero(2), vertices, tolerance);
}

// Volume of the simplex spanned by x and d data points, via the determinant
// of the offset matrix divided by d!.
inline double simplex_volume(const Vector& x, const Matrix& values,
                             const std::vector<Index>& subset) {
  const Index d = x.size();
  if (d == 1) {
    return std::abs(values(subset[0], 0) - x(0));
  }
  if (d == 2) {
    return std::abs(cross2(values(subset[0], 0) - x(0),
                           values(subset[0], 1) - x(1),
                           values(subset[1], 0) - x(0),
                           values(subset[1], 1) - x(1))) /
           2.0;
  }
  Matrix offsets(d, d);
  for (Index j = 0; j < d; ++j) {
    offsets.col(j) = values.row(subset[static_cast<std::size_t>(j)]).transpose() - x;
  }
  double factorial = 1.0;
  for (Index i = 2; i <= d; ++i) factorial *= static_cast<double>(i);
  return std::abs(offsets.partialPivLu().determinant()) / factorial;
}

// Advances a lexicographic combination odometer; returns false after the
// last combination.
inline bool next_combination(std::vector<Index>& indices, Index n) {
  const auto k = static_cast<Index>(indices.size());
  Index i = k - 1;
  while (i >= 0 && indices[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) return false;
  ++indices[static_cast<std::size_t>(i)];
  for (Index j = i + 1; j < k; ++j) {
    indices[static_cast<std::size_t>(j)] =
        indices[static_cast<std::size_t>(j - 1)] + 1;
  }
  return true;
}

inline constexpr double kBarycentricTolerance = 1e-12;

}  // namespace detail

/// Fraction of closed (d+1)-point simplices from the data that contain x,
/// by full enumeration. Requires C(n, d+1) within the combinatorial budget.
inline DepthValue simplicial_depth(const Vector& x, const DataMatrix& data) {
  const Index d = data.dim();
  const Index n = data.n();
  if (x.size() != d) {
    throw DimensionMismatch("simplicial_depth: dimension mismatch");
  }
  if (n < d + 1) {
    throw EmptyData("simplicial_depth needs at least d + 1 observations");
  }
  const double total = binomial_count(n, d + 1);
  if (total > kCombinatorialBudget) {
    throw BudgetExceeded(
        "simplicial_depth: subset count exceeds the enumeration budget; use "
        "monte_carlo_simplex_depth");
  }

  std::int64_t contained = 0;
  if (d == 2) {
    const Matrix& values = data.values();
    std::vector<double> zx(static_cast<std::size_t>(n));
    std::vector<double> zy(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      zx[static_cast<std::size_t>(i)] = values(i, 0) - x(0);
      zy[static_cast<std::size_t>(i)] = values(i, 1) - x(1);
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        for (Index l = j + 1; l < n; ++l) {
          if (detail::triangle_contains_origin(
                  zx[static_cast<std::size_t>(i)], zy[static_cast<std::size_t>(i)],
                  zx[static_cast<std::size_t>(j)], zy[static_cast<std::size_t>(j)],
                  zx[static_cast<std::size_t>(l)], zy[static_cast<std::size_t>(l)],
                  detail::kBarycentricTolerance)) {
            ++contained;
          }
        }
      }
    }
  } else {
    std::vector<Index> subset(static_cast<std::size_t>(d + 1));
    for (Index j = 0; j <= d; ++j) subset[static_cast<std::size_t>(j)] = j;
    std::vector<Vector> vertices(static_cast<std::size_t>(d + 1));
    do {
      for (std::size_t j = 0; j < vertices.size(); ++j) {
        vertices[j] = data.row(subset[j]);
      }
      if (detail::convex_hull_contains(x, vertices,
                                       detail::kBarycentricTolerance)) {
        ++contained;
      }
    } while (detail::next_combination(subset, n));
  }
  return {static_cast<double>(contained) / total, DepthNotion::simplicial,
          Exactness::exact};
}

/// Simplicial volume (Oja) depth: 1 / (1 + mean simplex volume over all
/// d-subsets). The affine-invariant form divides each volume by
/// sqrt(det Sigma) and requires a scatter estimate.
inline DepthValue simplicial_volume_depth(const Vector& x,
                                          const DataMatrix& data,
                                          bool affine_invariant = false,
                                          const LocationScatter* ls = nullptr) {
  const Index d = data.dim();
  const Index n = data.n();
  if (x.size() != d) {
    throw DimensionMismatch("simplicial_volume_depth: dimension mismatch");
  }
  if (n < d) {
    throw EmptyData("simplicial_volume_depth needs at least d observations");
  }
  if (affine_invariant) {
    if (ls == nullptr) {
      throw DepthError(
          "simplicial_volume_depth: affine-invariant form needs a scatter");
    }
    if (!(ls->sigma_det > 0.0)) {
      throw SingularScatter("simplicial_volume_depth: non-positive det");
    }
  }
  const double total = binomial_count(n, d);
  if (total > kCombinatorialBudget) {
    throw BudgetExceeded(
        "simplicial_volume_depth: subset count exceeds the enumeration "
        "budget; use monte_carlo_simplex_depth");
  }

  double volume_sum = 0.0;
  std::vector<Index> subset(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) subset[static_cast<std::size_t>(j)] = j;
  do {
    volume_sum += detail::simplex_volume(x, data.values(), subset);
  } while (detail::next_combination(subset, n));

  double mean_volume = volume_sum / total;
  if (affine_invariant) mean_volume /= std::sqrt(ls->sigma_det);
  return {1.0 / (1.0 + mean_volume),
          affine_invariant ? DepthNotion::simplicial_volume_affine_invariant
                           : DepthNotion::simplicial_volume,
          Exactness::exact};
}

/// Unbiased sampling estimator for the two combinatorial depths: averages the
/// per-simplex statistic over `budget` uniformly drawn index subsets.
/// Deterministic for a given seed.
inline DepthValue monte_carlo_simplex_depth(const Vector& x,
                                            const DataMatrix& data,
                                            DepthNotion notion,
                                            std::int64_t budget,
                                            std::uint64_t seed) {
  if (notion != DepthNotion::simplicial &&
      notion != DepthNotion::simplicial_volume) {
    throw UnsupportedNotion(
        "monte_carlo_simplex_depth supports simplicial and simplicial_volume");
  }
  if (budget < 1000) {
    throw DepthError("monte_carlo_simplex_depth: budget must be >= 1000");
  }
  const Index d = data.dim();
  const Index n = data.n();
  if (x.size() != d) {
    throw DimensionMismatch("monte_carlo_simplex_depth: dimension mismatch");
  }
  const Index subset_size = notion == DepthNotion::simplicial ? d + 1 : d;
  if (n < subset_size) {
    throw EmptyData("monte_carlo_simplex_depth: not enough observations");
  }

  Rng rng(seed);
  std::vector<Index> subset(static_cast<std::size_t>(subset_size));
  std::vector<Vector> vertices;
  if (notion == DepthNotion::simplicial) {
    vertices.assign(static_cast<std::size_t>(subset_size), Vector(d));
  }

  // Floyd's algorithm: k distinct indices, uniform over subsets.
  auto draw_subset = [&]() {
    std::size_t filled = 0;
    for (Index j = n - subset_size; j < n; ++j) {
      const auto t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(j) + 1));
      bool present = false;
      for (std::size_t c = 0; c < filled; ++c) {
        if (subset[c] == t) {
          present = true;
          break;
        }
      }
      subset[filled++] = present ? j : t;
    }
  };

  double accumulator = 0.0;
  for (std::int64_t rep = 0; rep < budget; ++rep) {
    draw_subset();
    if (notion == DepthNotion::simplicial) {
      for (std::size_t j = 0; j < vertices.size(); ++j) {
        vertices[j] = data.row(subset[j]);
      }
      if (detail::convex_hull_contains(x, vertices,
                                       detail::kBarycentricTolerance)) {
        accumulator += 1.0;
      }
    } else {
      accumulator += detail::simplex_volume(x, data.values(), subset);
    }
  }
  const double mean = accumulator / static_cast<double>(budget);
  const double value =
      notion == DepthNotion::simplicial ? mean : 1.0 / (1.0 + mean);
  return {value, notion, Exactness::approximate};
}

}  // namespace depth
