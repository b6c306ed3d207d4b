#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "depth/core.hpp"
#include "depth/detect.hpp"
#include "depth/rng.hpp"

namespace depth {

// Seedable generators for the synthetic experiment families, the p quality
// metric, and the repetition harness producing figure-ready summaries.

enum class ScenarioTag {
  intro_500,
  intro_25,
  clustered_s4,
  masked_s4,
  robust_s51,
  extrap_s52,
  toeplitz_s6,
};

inline const char* to_string(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::intro_500: return "intro_500";
    case ScenarioTag::intro_25: return "intro_25";
    case ScenarioTag::clustered_s4: return "clustered_s4";
    case ScenarioTag::masked_s4: return "masked_s4";
    case ScenarioTag::robust_s51: return "robust_s51";
    case ScenarioTag::extrap_s52: return "extrap_s52";
    case ScenarioTag::toeplitz_s6: return "toeplitz_s6";
  }
  throw BadScenario("unknown scenario tag");
}

inline ScenarioTag parse_scenario(const std::string& s) {
  if (s == "intro_500") return ScenarioTag::intro_500;
  if (s == "intro_25") return ScenarioTag::intro_25;
  if (s == "clustered_s4") return ScenarioTag::clustered_s4;
  if (s == "masked_s4") return ScenarioTag::masked_s4;
  if (s == "robust_s51") return ScenarioTag::robust_s51;
  if (s == "extrap_s52") return ScenarioTag::extrap_s52;
  if (s == "toeplitz_s6") return ScenarioTag::toeplitz_s6;
  throw BadScenario("unknown scenario tag: " + s);
}

/// Description of one synthetic draw. Fields left at their sentinel (0 for
/// d/n, negative for epsilon/rho) are filled with the scenario's defaults.
struct Scenario {
  ScenarioTag tag = ScenarioTag::toeplitz_s6;
  int d = 0;
  std::int64_t n = 0;
  double epsilon = -1.0;
  double rho = -1.0;
  std::uint64_t seed = 0;

  Scenario with_seed(std::uint64_t s) const {
    Scenario copy = *this;
    copy.seed = s;
    return copy;
  }
};

struct LabeledSample {
  DataMatrix data;
  std::vector<bool> labels;  // true = anomaly
};

namespace detail {

inline Scenario normalize_scenario(Scenario s) {
  auto fill = [](auto& field, auto fallback) {
    if (field <= 0) field = fallback;
  };
  switch (s.tag) {
    case ScenarioTag::intro_500:
      fill(s.d, 2);
      fill(s.n, std::int64_t{504});
      if (s.rho < 0.0) s.rho = 0.9;
      s.epsilon = 4.0 / static_cast<double>(s.n);
      if (s.d != 2) throw BadScenario("intro scenarios are bivariate");
      if (s.n < 9) throw BadScenario("intro scenarios need n >= 9");
      if (std::abs(s.rho) >= 1.0) throw BadScenario("|rho| must be < 1");
      break;
    case ScenarioTag::intro_25:
      fill(s.d, 2);
      fill(s.n, std::int64_t{25});
      if (s.rho < 0.0) s.rho = 0.9;
      s.epsilon = 4.0 / static_cast<double>(s.n);
      if (s.d != 2) throw BadScenario("intro scenarios are bivariate");
      if (s.n < 9) throw BadScenario("intro scenarios need n >= 9");
      if (std::abs(s.rho) >= 1.0) throw BadScenario("|rho| must be < 1");
      break;
    case ScenarioTag::clustered_s4:
      fill(s.d, 2);
      fill(s.n, std::int64_t{100});
      if (s.epsilon < 0.0) s.epsilon = 0.1;
      if (s.d != 2) throw BadScenario("clustered_s4 is bivariate");
      break;
    case ScenarioTag::masked_s4:
      fill(s.d, 2);
      fill(s.n, std::int64_t{125});
      if (s.d != 2) throw BadScenario("masked_s4 is bivariate");
      if (s.n < 20) throw BadScenario("masked_s4 needs n >= 20");
      break;
    case ScenarioTag::robust_s51:
      fill(s.d, 10);
      fill(s.n, std::int64_t{1000});
      if (s.epsilon < 0.0) s.epsilon = 0.05;
      break;
    case ScenarioTag::extrap_s52:
      fill(s.d, 2);
      fill(s.n, std::int64_t{100});
      if (s.d != 2) throw BadScenario("extrap_s52 is bivariate");
      if (s.n != 100 && s.n != 300) {
        throw BadScenario(
            "extrap_s52 supports n=100 (training part) or n=300 (test part)");
      }
      break;
    case ScenarioTag::toeplitz_s6:
      fill(s.d, 10);
      fill(s.n, std::int64_t{1000});
      if (s.epsilon < 0.0) s.epsilon = 0.05;
      if (s.rho < 0.0) s.rho = 0.5;
      if (std::abs(s.rho) >= 1.0) throw BadScenario("|rho| must be < 1");
      break;
  }
  if (s.epsilon < 0.0) s.epsilon = 0.0;
  if (s.epsilon > 0.5) throw BadScenario("epsilon must lie in [0, 0.5]");
  if (s.n < 1) throw BadScenario("n must be positive");
  if (s.d < 1) throw BadScenario("d must be positive");
  return s;
}

inline Vector gaussian_vector(Index d, Rng& rng) {
  Vector g(d);
  for (Index i = 0; i < d; ++i) g(i) = rng.normal();
  return g;
}

// One draw from N(mu, L L^T) given the lower Cholesky factor L.
inline Vector gaussian_draw(const Vector& mu, const Matrix& chol_lower,
                            Rng& rng) {
  return mu + chol_lower * gaussian_vector(mu.size(), rng);
}

inline Matrix cholesky_lower(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw BadScenario("scenario covariance is not positive definite");
  }
  return llt.matrixL();
}

inline Matrix toeplitz_covariance(Index d, double rho) {
  Matrix sigma(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      sigma(i, j) = std::pow(rho, std::abs(static_cast<double>(i - j)));
    }
  }
  return sigma;
}

inline void shuffle_rows(std::vector<Vector>& rows, std::vector<bool>& labels,
                         Rng& rng) {
  for (std::size_t i = rows.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(rows[i - 1], rows[j]);
    const bool tmp = labels[i - 1];
    labels[i - 1] = labels[j];
    labels[j] = tmp;
  }
}

inline LabeledSample assemble(std::vector<Vector> rows,
                              std::vector<bool> labels, Rng& rng) {
  shuffle_rows(rows, labels, rng);
  Matrix data(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.row(static_cast<Index>(i)) = rows[i].transpose();
  }
  return {DataMatrix(std::move(data)), std::move(labels)};
}

}  // namespace detail

/// Deterministic draw of the scenario: normal observations first, anomalies
/// appended, then a seeded uniform shuffle. Generator postconditions (counts
/// and placement conditions) are verified on every draw.
inline LabeledSample generate(const Scenario& scenario) {
  const Scenario s = detail::normalize_scenario(scenario);
  Rng rng(s.seed);
  std::vector<Vector> rows;
  std::vector<bool> labels;
  const Index d = s.d;

  switch (s.tag) {
    case ScenarioTag::intro_500:
    case ScenarioTag::intro_25: {
      // Correlated bivariate normal plus four planted anomalies: three
      // "pluses" violating marginal validation bands and one "cross" that is
      // marginally inocuous but breaks the correlation structure.
      Matrix chol(2, 2);
      chol << 1.0, 0.0, s.rho, std::sqrt(1.0 - s.rho * s.rho);
      const std::int64_t normals = s.n - 4;
      const Vector mu = Vector::Zero(2);
      for (std::int64_t i = 0; i < normals; ++i) {
        rows.push_back(detail::gaussian_draw(mu, chol, rng));
        labels.push_back(false);
      }
      Vector plus1(2), plus2(2), plus3(2), cross(2);
      plus1 << 4.5, 4.5 * s.rho;
      plus2 << 0.0, -4.5;
      plus3 << -4.5, -4.5 * s.rho - 0.5;
      cross << 2.2, -2.2;
      for (const Vector& anomaly : {plus1, plus2, plus3, cross}) {
        rows.push_back(anomaly);
        labels.push_back(true);
      }
      break;
    }

    case ScenarioTag::clustered_s4: {
      Matrix sigma(2, 2);
      sigma << 1.0, 1.0, 1.0, 2.0;
      const Matrix chol = detail::cholesky_lower(sigma);
      Vector mu(2), anomaly_mu(2);
      mu << 1.0, 1.0;
      anomaly_mu << 3.181, -0.222;  // mean shifted 2.5 along the second
                                    // principal axis of the normal law
      const auto n_anomalies =
          static_cast<std::int64_t>(std::ceil(s.epsilon * static_cast<double>(s.n)));
      const std::int64_t n_normals = s.n - n_anomalies;
      for (std::int64_t i = 0; i < n_normals; ++i) {
        rows.push_back(detail::gaussian_draw(mu, chol, rng));
        labels.push_back(false);
      }
      for (std::int64_t i = 0; i < n_anomalies; ++i) {
        rows.push_back(anomaly_mu +
                       (chol / 6.0) * detail::gaussian_vector(2, rng));
        labels.push_back(true);
      }
      break;
    }

    case ScenarioTag::masked_s4: {
      // The clustered sample plus masking anomalies: same law as the normal
      // data, conditioned on a population Mahalanobis distance between the
      // smallest and largest distance of the clustered anomalies.
      Matrix sigma(2, 2);
      sigma << 1.0, 1.0, 1.0, 2.0;
      const Matrix chol = detail::cholesky_lower(sigma);
      const Matrix sigma_inv = sigma.inverse();
      Vector mu(2), anomaly_mu(2);
      mu << 1.0, 1.0;
      anomaly_mu << 3.181, -0.222;
      std::int64_t n_clustered = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::llround(0.08 * static_cast<double>(s.n))));
      std::int64_t n_masking = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::llround(0.20 * static_cast<double>(s.n))));
      const std::int64_t n_normals = s.n - n_clustered - n_masking;
      if (n_normals < 1) throw BadScenario("masked_s4: n too small");
      auto maha = [&](const Vector& y) {
        const Vector c = y - mu;
        return std::sqrt(c.dot(sigma_inv * c));
      };
      for (std::int64_t i = 0; i < n_normals; ++i) {
        rows.push_back(detail::gaussian_draw(mu, chol, rng));
        labels.push_back(false);
      }
      double dist_min = std::numeric_limits<double>::infinity();
      double dist_max = 0.0;
      for (std::int64_t i = 0; i < n_clustered; ++i) {
        Vector z = anomaly_mu + (chol / 6.0) * detail::gaussian_vector(2, rng);
        dist_min = std::min(dist_min, maha(z));
        dist_max = std::max(dist_max, maha(z));
        rows.push_back(std::move(z));
        labels.push_back(true);
      }
      for (std::int64_t i = 0; i < n_masking; ++i) {
        Vector y;
        bool accepted = false;
        for (std::int64_t attempt = 0; attempt < 1000000; ++attempt) {
          y = detail::gaussian_draw(mu, chol, rng);
          const double dist = maha(y);
          if (dist >= dist_min && dist <= dist_max) {
            accepted = true;
            break;
          }
        }
        if (!accepted) {
          y = detail::gaussian_draw(mu, chol, rng);
          const double target = (dist_min + dist_max) / 2.0;
          y = mu + (y - mu) * (target / maha(y));
        }
        rows.push_back(std::move(y));
        labels.push_back(true);
      }
      break;
    }

    case ScenarioTag::robust_s51: {
      const auto n_normals = static_cast<std::int64_t>(
          std::floor(static_cast<double>(s.n) * (1.0 - s.epsilon)));
      const std::int64_t n_anomalies = s.n - n_normals;
      const Vector ones = Vector::Ones(d);
      double max_norm = 0.0;
      for (std::int64_t i = 0; i < n_normals; ++i) {
        Vector y = ones + detail::gaussian_vector(d, rng);
        max_norm = std::max(max_norm, y.norm());
        rows.push_back(std::move(y));
        labels.push_back(false);
      }
      // Spherical Cauchy: normal vector over an independent |normal| scalar,
      // conditioned on landing beyond 1.5x the farthest normal observation.
      const double norm_floor = 1.5 * max_norm;
      for (std::int64_t i = 0; i < n_anomalies; ++i) {
        Vector z;
        bool accepted = false;
        for (std::int64_t attempt = 0; attempt < 1000000; ++attempt) {
          const Vector g = detail::gaussian_vector(d, rng);
          const double w = std::abs(rng.normal());
          if (w == 0.0) continue;
          z = g / w;
          if (z.allFinite() && z.norm() > norm_floor) {
            accepted = true;
            break;
          }
        }
        if (!accepted) {
          z = detail::gaussian_vector(d, rng);
          z *= norm_floor * (1.0 + 1e-9) / z.norm();
        }
        rows.push_back(std::move(z));
        labels.push_back(true);
      }
      break;
    }

    case ScenarioTag::extrap_s52: {
      Vector center(2), left(2), right(2);
      center << 0.5, 0.5;
      left << -0.75, 0.5;
      right << 1.75, 0.5;
      const Matrix wide = Matrix::Identity(2, 2) * 0.25;
      const Matrix tight = Matrix::Identity(2, 2) * 0.1;
      struct Block {
        const Vector* mu;
        const Matrix* scale;
        std::int64_t count;
        bool anomaly;
      };
      std::vector<Block> blocks;
      if (s.n == 100) {
        blocks = {{&center, &wide, 90, false}, {&left, &tight, 10, true}};
      } else {
        blocks = {{&center, &wide, 250, false},
                  {&left, &tight, 25, true},
                  {&right, &tight, 25, true}};
      }
      for (const Block& block : blocks) {
        for (std::int64_t i = 0; i < block.count; ++i) {
          rows.push_back(detail::gaussian_draw(*block.mu, *block.scale, rng));
          labels.push_back(block.anomaly);
        }
      }
      break;
    }

    case ScenarioTag::toeplitz_s6: {
      const Matrix sigma = detail::toeplitz_covariance(d, s.rho);
      const Matrix chol = detail::cholesky_lower(sigma);
      Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
      if (es.info() != Eigen::Success) {
        throw BadScenario("toeplitz_s6: eigendecomposition failed");
      }
      const double lambda_min = es.eigenvalues()(0);
      Vector v_min = es.eigenvectors().col(0);
      if (v_min(0) < 0.0) v_min = -v_min;  // deterministic sign
      // Anomaly center at Mahalanobis distance 1.25 from the origin along
      // the smallest principal direction of the normal law.
      const Vector anomaly_mu = 1.25 * std::sqrt(lambda_min) * v_min;
      const auto n_normals = static_cast<std::int64_t>(
          std::floor(static_cast<double>(s.n) * (1.0 - s.epsilon)));
      const std::int64_t n_anomalies = s.n - n_normals;
      for (std::int64_t i = 0; i < n_normals; ++i) {
        rows.push_back(chol * detail::gaussian_vector(d, rng));
        labels.push_back(false);
      }
      const double anomaly_scale = 1.0 / std::sqrt(10.0);
      for (std::int64_t i = 0; i < n_anomalies; ++i) {
        rows.push_back(anomaly_mu +
                       anomaly_scale * detail::gaussian_vector(d, rng));
        labels.push_back(true);
      }
      const Vector solved = sigma.ldlt().solve(anomaly_mu);
      const double placement = std::sqrt(anomaly_mu.dot(solved));
      if (std::abs(placement - 1.25) > 1e-9) {
        throw DepthError("toeplitz_s6: anomaly placement postcondition failed");
      }
      break;
    }
  }

  LabeledSample sample = detail::assemble(std::move(rows), std::move(labels), rng);

  // Postconditions shared by all tags.
  std::int64_t anomaly_count = 0;
  for (bool label : sample.labels) anomaly_count += label;
  if (s.tag == ScenarioTag::robust_s51 || s.tag == ScenarioTag::toeplitz_s6) {
    const auto expected = s.n - static_cast<std::int64_t>(std::floor(
                                    static_cast<double>(s.n) * (1.0 - s.epsilon)));
    if (anomaly_count != expected) {
      throw DepthError("generator postcondition failed: anomaly count");
    }
  }
  if (s.tag == ScenarioTag::robust_s51) {
    double max_normal_norm = 0.0;
    for (Index i = 0; i < sample.data.n(); ++i) {
      if (!sample.labels[static_cast<std::size_t>(i)]) {
        max_normal_norm =
            std::max(max_normal_norm, sample.data.row(i).norm());
      }
    }
    for (Index i = 0; i < sample.data.n(); ++i) {
      if (sample.labels[static_cast<std::size_t>(i)] &&
          sample.data.row(i).norm() <= 1.5 * max_normal_norm) {
        throw DepthError("generator postcondition failed: anomaly norms");
      }
    }
  }
  return sample;
}

/// Largest portion of anomalies among flagged points when the threshold is
/// the smallest one that flags every anomaly.
inline double p_metric(const std::vector<double>& depths,
                       const std::vector<bool>& labels) {
  if (depths.size() != labels.size()) {
    throw DimensionMismatch("p_metric: label size mismatch");
  }
  const double threshold = threshold_detect_all(depths, labels);
  std::int64_t flagged = 0;
  std::int64_t anomalies = 0;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    flagged += depths[i] < threshold;
    anomalies += labels[i];
  }
  return static_cast<double>(anomalies) / static_cast<double>(flagged);
}

/// Scoring method for benchmark runs: a notion, its search budget, and the
/// training-subsample fraction the depths are computed against.
struct MethodConfig {
  DepthNotion notion = DepthNotion::projection;
  SearchBudget budget;
  double subsample_fraction = 1.0;
};

namespace detail {

struct RepetitionData {
  std::vector<double> depths;
  std::vector<bool> labels;
  double millis = 0.0;
};

// One repetition: draw the scenario with seed XOR rep, score every training
// point against the (possibly subsampled) sample with per-point seeds,
// return the depth vector.
inline RepetitionData run_repetition(const Scenario& scenario,
                                     const MethodConfig& method,
                                     std::int64_t rep, int workers) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario seeded =
      scenario.with_seed(scenario.seed ^ static_cast<std::uint64_t>(rep));
  LabeledSample sample = generate(seeded);
  const SearchBudget budget =
      method.budget.with_seed(method.budget.seed ^ static_cast<std::uint64_t>(rep));
  const double subsample_rows =
      std::ceil(method.subsample_fraction * static_cast<double>(sample.data.n()));
  if (subsample_rows < static_cast<double>(sample.data.dim() + 1)) {
    throw BadScenario("subsample would keep fewer than d + 1 observations");
  }
  const DepthModel model = detail::make_scoring_model(
      sample.data, method.notion, budget, method.subsample_fraction);
  RepetitionData out;
  out.depths = training_depths(model, sample.data, workers);
  out.labels = std::move(sample.labels);
  out.millis = std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
                   .count();
  return out;
}

}  // namespace detail

/// Per-repetition metric values plus a five-number summary and timings.
struct RepetitionSummary {
  std::vector<double> p_values;
  std::vector<double> millis;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

namespace detail {

inline void fill_five_number_summary(RepetitionSummary& summary) {
  std::vector<double> sorted = summary.p_values;
  std::sort(sorted.begin(), sorted.end());
  summary.min = sorted.front();
  summary.max = sorted.back();
  summary.q1 = sorted_quantile_lower(sorted, 0.25);
  summary.q3 = sorted_quantile_lower(sorted, 0.75);
  summary.median = median(sorted);
}

}  // namespace detail

/// Runs `reps` independent repetitions; repetition r draws the scenario with
/// seed XOR r and the method with budget seed XOR r.
inline RepetitionSummary run_repetitions(const Scenario& scenario,
                                         const MethodConfig& method,
                                         std::int64_t reps, int workers = 1) {
  if (reps < 1) throw BadScenario("reps must be >= 1");
  RepetitionSummary summary;
  summary.p_values.reserve(static_cast<std::size_t>(reps));
  summary.millis.reserve(static_cast<std::size_t>(reps));
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    detail::RepetitionData data =
        detail::run_repetition(scenario, method, rep, workers);
    summary.p_values.push_back(p_metric(data.depths, data.labels));
    summary.millis.push_back(data.millis);
  }
  detail::fill_five_number_summary(summary);
  return summary;
}

/// Summary grid over (subsample fraction, direction budget) pairs. The
/// fraction-1.0 column reproduces run_repetitions exactly under matched
/// seeds because both go through the same repetition path.
struct SubsampleCell {
  double fraction = 1.0;
  std::int64_t n_directions = 0;
  RepetitionSummary summary;
};

inline std::vector<SubsampleCell> subsample_study(
    const Scenario& scenario, const MethodConfig& base,
    const std::vector<double>& fractions,
    const std::vector<std::int64_t>& budgets, std::int64_t reps,
    int workers = 1) {
  if (fractions.empty() || budgets.empty()) {
    throw BadScenario("subsample_study needs fractions and budgets");
  }
  std::vector<SubsampleCell> grid;
  grid.reserve(fractions.size() * budgets.size());
  for (double fraction : fractions) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
      throw BadScenario("fractions must lie in (0, 1]");
    }
    for (std::int64_t budget : budgets) {
      MethodConfig method = base;
      method.subsample_fraction = fraction;
      method.budget.n_directions = budget;
      grid.push_back(
          {fraction, budget, run_repetitions(scenario, method, reps, workers)});
    }
  }
  return grid;
}

}  // namespace depth
