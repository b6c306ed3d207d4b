#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "depth/core.hpp"

namespace depth {

// Univariate robust building blocks shared by all projection-type depths.
// Conventions:
//  - even-n median averages the two middle order statistics;
//  - MAD is the median of absolute deviations from the median;
//  - MAD+ is the median of the strictly positive deviations (0 if none).

using UnivariateSample = std::vector<double>;

namespace detail {

// Median by selection; clobbers v. O(n) expected.
inline double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  auto mid_it = v.begin() + static_cast<std::ptrdiff_t>(mid);
  std::nth_element(v.begin(), mid_it, v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid_it);
  return 0.5 * (lower + upper);
}

}  // namespace detail

inline double median(UnivariateSample s) {
  if (s.empty()) throw EmptyData("median of an empty sample");
  return detail::median_inplace(s);
}

inline double mad(const UnivariateSample& s) {
  const double med = median(s);
  std::vector<double> deviations(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    deviations[i] = std::abs(s[i] - med);
  }
  return detail::median_inplace(deviations);
}

inline double mad_plus(const UnivariateSample& s) {
  const double med = median(s);
  std::vector<double> positive;
  positive.reserve(s.size());
  for (double y : s) {
    if (y - med > 0.0) positive.push_back(y - med);
  }
  if (positive.empty()) return 0.0;
  return detail::median_inplace(positive);
}

/// min(#{y <= x}, #{y >= x}) / n; zero strictly outside [min, max].
inline double univariate_halfspace_depth(double x, const UnivariateSample& s) {
  if (s.empty()) throw EmptyData("halfspace depth of an empty sample");
  std::size_t below_or_eq = 0;
  std::size_t above_or_eq = 0;
  for (double y : s) {
    if (y <= x) ++below_or_eq;
    if (y >= x) ++above_or_eq;
  }
  return static_cast<double>(std::min(below_or_eq, above_or_eq)) /
         static_cast<double>(s.size());
}

/// Robust standardized deviation of x from the sample.
/// Symmetric: |x - med| / MAD. Asymmetric: (x - med)_+ / MAD+.
/// Degenerate scale maps to 0 when the numerator is 0, +infinity otherwise.
inline double projected_outlyingness(double x, const UnivariateSample& s,
                                     bool asymmetric = false) {
  if (s.empty()) throw EmptyData("outlyingness w.r.t. an empty sample");
  const double med = median(s);
  const double numerator =
      asymmetric ? std::max(x - med, 0.0) : std::abs(x - med);
  const double scale = asymmetric ? mad_plus(s) : mad(s);
  if (scale > 0.0) return numerator / scale;
  return numerator == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace depth
