#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "depth/core.hpp"
#include "depth/depths.hpp"
#include "depth/optimize.hpp"
#include "depth/parallel.hpp"
#include "depth/rng.hpp"

namespace depth {

/// Trained detector state. Parametric notions keep only the location/scatter
/// estimate; nonparametric notions keep the (possibly subsampled) training
/// rows. The threshold separates anomalies (depth < threshold) from normal
/// observations.
struct DepthModel {
  DepthNotion notion = DepthNotion::projection;
  std::optional<DataMatrix> stored_sample;
  std::optional<LocationScatter> ls;
  SearchBudget budget;
  double threshold = 0.0;
  double subsample_fraction = 1.0;

  Index dim() const {
    if (ls.has_value()) return ls->dim();
    if (stored_sample.has_value()) return stored_sample->dim();
    throw DepthError("model holds neither a sample nor parameters");
  }
};

/// Per-point scoring outcome.
struct DepthReport {
  DepthValue depth;
  bool is_anomaly = false;
  std::optional<UnitDirection> direction;
};

struct ThresholdSpec {
  enum class Kind { quantile, fixed, detect_all };
  Kind kind = Kind::quantile;
  double alpha = 0.05;  // quantile level
  double value = 0.0;   // fixed threshold

  static ThresholdSpec quantile(double alpha) {
    return {Kind::quantile, alpha, 0.0};
  }
  static ThresholdSpec fixed(double value) {
    return {Kind::fixed, 0.05, value};
  }
  static ThresholdSpec detect_all() { return {Kind::detect_all, 0.05, 0.0}; }
};

namespace detail {

// Lower-interpolation empirical quantile of a sorted vector; p in [0, 1].
inline double sorted_quantile_lower(const std::vector<double>& sorted,
                                    double p) {
  const auto n = static_cast<std::int64_t>(sorted.size());
  std::int64_t rank = static_cast<std::int64_t>(
      std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::int64_t>(rank, 1, n);
  return sorted[static_cast<std::size_t>(rank - 1)];
}

}  // namespace detail

/// Empirical alpha-quantile (lower interpolation) of training depths.
inline double threshold_quantile(std::vector<double> depths, double alpha) {
  if (depths.empty()) throw EmptyData("threshold_quantile: no depths");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DepthError("threshold_quantile: alpha must lie in (0, 1)");
  }
  std::sort(depths.begin(), depths.end());
  return detail::sorted_quantile_lower(depths, alpha);
}

// Additive margin placing the detect-all threshold just above the deepest
// anomaly, comfortably above double-precision noise on depths in [0, 1].
inline constexpr double kDetectAllEpsilon = 1e-12;

/// Smallest threshold flagging every anomaly: max anomaly depth + epsilon.
inline double threshold_detect_all(const std::vector<double>& depths,
                                   const std::vector<bool>& anomaly_mask) {
  if (depths.size() != anomaly_mask.size()) {
    throw DimensionMismatch("threshold_detect_all: mask size mismatch");
  }
  double max_anomaly_depth = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (anomaly_mask[i]) {
      any = true;
      max_anomaly_depth = std::max(max_anomaly_depth, depths[i]);
    }
  }
  if (!any) throw NoAnomalies("threshold_detect_all: no anomalies in mask");
  return max_anomaly_depth + kDetectAllEpsilon;
}

/// Per-dimension validation band rule; bounds are empirical quantiles at
/// levels (1 -/+ coverage) / 2.
struct BoxRule {
  std::vector<std::pair<double, double>> bounds;  // (lower, upper) per axis
};

inline BoxRule box_rule_fit(const DataMatrix& data, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw DepthError("box_rule_fit: coverage must lie in (0, 1]");
  }
  BoxRule rule;
  rule.bounds.reserve(static_cast<std::size_t>(data.dim()));
  std::vector<double> column(static_cast<std::size_t>(data.n()));
  for (Index j = 0; j < data.dim(); ++j) {
    for (Index i = 0; i < data.n(); ++i) {
      column[static_cast<std::size_t>(i)] = data.values()(i, j);
    }
    std::sort(column.begin(), column.end());
    rule.bounds.emplace_back(
        detail::sorted_quantile_lower(column, (1.0 - coverage) / 2.0),
        detail::sorted_quantile_lower(column, (1.0 + coverage) / 2.0));
  }
  return rule;
}

/// True (anomaly) when any coordinate falls outside its validation band.
inline bool box_rule_apply(const BoxRule& rule, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != rule.bounds.size()) {
    throw DimensionMismatch("box_rule_apply: dimension mismatch");
  }
  for (Index j = 0; j < x.size(); ++j) {
    const auto& [lower, upper] = rule.bounds[static_cast<std::size_t>(j)];
    if (x(j) < lower || x(j) > upper) return true;
  }
  return false;
}

namespace detail {

inline constexpr std::uint64_t kSubsampleSalt = 0x53554253414d504cULL;

// Uniform draw of ceil(fraction * n) distinct row indices, without
// replacement, returned in ascending order. fraction == 1 keeps the
// original rows untouched so that the subsampled and plain code paths agree
// bit for bit.
inline std::vector<Index> subsample_indices(Index n, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DepthError("subsample fraction must lie in (0, 1]");
  }
  std::vector<Index> indices(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) indices[static_cast<std::size_t>(i)] = i;
  if (fraction == 1.0) return indices;
  const auto k = static_cast<Index>(std::min<double>(
      static_cast<double>(n),
      std::ceil(fraction * static_cast<double>(n))));
  Rng rng(mix_seed(seed ^ kSubsampleSalt));
  for (Index i = 0; i < k; ++i) {
    const auto j =
        i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(indices[static_cast<std::size_t>(i)],
              indices[static_cast<std::size_t>(j)]);
  }
  indices.resize(static_cast<std::size_t>(k));
  std::sort(indices.begin(), indices.end());
  return indices;
}

inline DataMatrix select_rows(const DataMatrix& data,
                              const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), data.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Index>(r)) = data.values().row(rows[r]);
  }
  return DataMatrix(std::move(out));
}

// Builds the scoring state (sample / parameters) without a threshold.
inline DepthModel make_scoring_model(const DataMatrix& data,
                                     DepthNotion notion,
                                     const SearchBudget& budget,
                                     double subsample_fraction) {
  DepthModel model;
  model.notion = notion;
  model.budget = budget;
  model.subsample_fraction = subsample_fraction;
  const std::vector<Index> rows =
      subsample_indices(data.n(), subsample_fraction, budget.seed);
  DataMatrix sample = subsample_fraction == 1.0 ? data : select_rows(data, rows);
  if (notion == DepthNotion::mahalanobis) {
    model.ls = moment_estimates(sample);
  } else if (notion == DepthNotion::simplicial_volume_affine_invariant) {
    model.ls = moment_estimates(sample);
    model.stored_sample = std::move(sample);
  } else {
    model.stored_sample = std::move(sample);
  }
  return model;
}

}  // namespace detail

/// Depth of x with respect to the model's stored state. Exact algorithms are
/// used whenever available (Mahalanobis; halfspace in d <= 2; projection in
/// d = 1; combinatorial depths within the enumeration budget); otherwise the
/// model's search budget drives the approximation, reseeded with `seed`.
inline DepthValue model_depth_at(
    const DepthModel& model, const Vector& x, std::uint64_t seed,
    std::optional<UnitDirection>* direction_out = nullptr) {
  if (direction_out != nullptr) direction_out->reset();
  if (x.size() != model.dim()) {
    throw DimensionMismatch("score: query dimension does not match model");
  }

  switch (model.notion) {
    case DepthNotion::mahalanobis:
      return mahalanobis_depth(x, *model.ls);

    case DepthNotion::halfspace: {
      const DataMatrix& sample = *model.stored_sample;
      if (sample.dim() == 1) {
        UnivariateSample s(static_cast<std::size_t>(sample.n()));
        for (Index i = 0; i < sample.n(); ++i) {
          s[static_cast<std::size_t>(i)] = sample.values()(i, 0);
        }
        return {univariate_halfspace_depth(x(0), s), DepthNotion::halfspace,
                Exactness::exact};
      }
      if (sample.dim() == 2) return halfspace_depth_2d(x, sample);
      return approx_depth(x, sample, model.notion, model.budget.with_seed(seed))
          .value;
    }

    case DepthNotion::projection:
    case DepthNotion::projection_asymmetric: {
      const DataMatrix& sample = *model.stored_sample;
      const bool asymmetric =
          model.notion == DepthNotion::projection_asymmetric;
      if (sample.dim() == 1) {
        if (direction_out != nullptr) {
          UnivariateSample s(static_cast<std::size_t>(sample.n()));
          for (Index i = 0; i < sample.n(); ++i) {
            s[static_cast<std::size_t>(i)] = sample.values()(i, 0);
          }
          Vector u(1);
          u << (x(0) >= median(s) ? 1.0 : -1.0);
          *direction_out = UnitDirection(u);
        }
        return projection_depth_1d(x, sample, asymmetric);
      }
      ApproxDepthResult result =
          approx_depth(x, sample, model.notion, model.budget.with_seed(seed));
      if (direction_out != nullptr) *direction_out = result.best_direction;
      return result.value;
    }

    case DepthNotion::simplicial: {
      const DataMatrix& sample = *model.stored_sample;
      if (binomial_count(sample.n(), sample.dim() + 1) <=
          kCombinatorialBudget) {
        return simplicial_depth(x, sample);
      }
      return monte_carlo_simplex_depth(
          x, sample, DepthNotion::simplicial,
          std::max<std::int64_t>(1000, model.budget.n_directions), seed);
    }

    case DepthNotion::simplicial_volume:
    case DepthNotion::simplicial_volume_affine_invariant: {
      const DataMatrix& sample = *model.stored_sample;
      const bool affine_invariant =
          model.notion == DepthNotion::simplicial_volume_affine_invariant;
      if (binomial_count(sample.n(), sample.dim()) <= kCombinatorialBudget) {
        return simplicial_volume_depth(
            x, sample, affine_invariant,
            affine_invariant ? &*model.ls : nullptr);
      }
      DepthValue mc = monte_carlo_simplex_depth(
          x, sample, DepthNotion::simplicial_volume,
          std::max<std::int64_t>(1000, model.budget.n_directions), seed);
      if (affine_invariant) {
        const double mean_volume = 1.0 / mc.value - 1.0;
        mc.value = 1.0 / (1.0 + mean_volume / std::sqrt(model.ls->sigma_det));
        mc.notion = DepthNotion::simplicial_volume_affine_invariant;
      }
      return mc;
    }
  }
  throw DepthError("unknown depth notion");
}

/// Scores one point with the model's embedded seed.
inline DepthReport score(const DepthModel& model, const Vector& x) {
  DepthReport report;
  std::optional<UnitDirection> direction;
  report.depth = model_depth_at(model, x, model.budget.seed, &direction);
  report.is_anomaly = report.depth.value < model.threshold;
  report.direction = std::move(direction);
  return report;
}

/// Scores a batch; point i is evaluated with seed = budget.seed XOR i, so
/// results do not depend on the worker count.
inline std::vector<DepthReport> score_all(const DepthModel& model,
                                          const DataMatrix& queries,
                                          int workers = 1) {
  if (queries.dim() != model.dim()) {
    throw DimensionMismatch("score_all: query dimension does not match model");
  }
  std::vector<DepthReport> reports(static_cast<std::size_t>(queries.n()));
  parallel_for(queries.n(), workers, [&](std::int64_t i) {
    DepthReport report;
    std::optional<UnitDirection> direction;
    report.depth = model_depth_at(
        model, queries.row(i),
        model.budget.seed ^ static_cast<std::uint64_t>(i), &direction);
    report.is_anomaly = report.depth.value < model.threshold;
    report.direction = std::move(direction);
    reports[static_cast<std::size_t>(i)] = std::move(report);
  });
  return reports;
}

/// Depth values only, same seeding contract as score_all.
inline std::vector<double> training_depths(const DepthModel& model,
                                           const DataMatrix& queries,
                                           int workers = 1) {
  std::vector<double> depths(static_cast<std::size_t>(queries.n()));
  parallel_for(queries.n(), workers, [&](std::int64_t i) {
    depths[static_cast<std::size_t>(i)] =
        model_depth_at(model, queries.row(i),
                       model.budget.seed ^ static_cast<std::uint64_t>(i))
            .value;
  });
  return depths;
}

/// Trains a detector: stores the sample and/or parameters (optionally a
/// seeded uniform subsample) and sets the threshold per policy. The
/// detect-all policy needs anomaly labels for the training rows.
inline DepthModel fit(const DataMatrix& data, DepthNotion notion,
                      const SearchBudget& budget, const ThresholdSpec& policy,
                      double subsample_fraction = 1.0,
                      const std::vector<bool>* labels = nullptr,
                      int workers = 1) {
  DepthModel model =
      detail::make_scoring_model(data, notion, budget, subsample_fraction);
  switch (policy.kind) {
    case ThresholdSpec::Kind::fixed:
      if (!(policy.value >= 0.0 && policy.value <= 1.0)) {
        throw DepthError("fixed threshold must lie in [0, 1]");
      }
      model.threshold = policy.value;
      break;
    case ThresholdSpec::Kind::quantile:
      model.threshold =
          threshold_quantile(training_depths(model, data, workers),
                             policy.alpha);
      break;
    case ThresholdSpec::Kind::detect_all: {
      if (labels == nullptr ||
          labels->size() != static_cast<std::size_t>(data.n())) {
        throw NoAnomalies("detect-all policy needs training labels");
      }
      model.threshold =
          threshold_detect_all(training_depths(model, data, workers), *labels);
      break;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Persistence: versioned JSON document, UTF-8, numbers serialized losslessly.

inline constexpr int kModelFormatVersion = 1;

inline std::string save_model(const DepthModel& model) {
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["notion"] = to_string(model.notion);
  doc["threshold"] = model.threshold;
  doc["subsample_fraction"] = model.subsample_fraction;
  doc["budget"] = {
      {"strategy", to_string(model.budget.strategy)},
      {"n_directions", model.budget.n_directions},
      {"seed", model.budget.seed},
      {"restarts", model.budget.restarts},
      {"rrs_rounds", model.budget.rrs_rounds},
      {"rrs_initial_cap", model.budget.rrs_initial_cap},
      {"rrs_shrink", model.budget.rrs_shrink},
  };
  if (model.ls.has_value()) {
    nlohmann::json mu = nlohmann::json::array();
    for (Index i = 0; i < model.ls->mu.size(); ++i) mu.push_back(model.ls->mu(i));
    nlohmann::json sigma = nlohmann::json::array();
    for (Index i = 0; i < model.ls->sigma.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Index j = 0; j < model.ls->sigma.cols(); ++j) {
        row.push_back(model.ls->sigma(i, j));
      }
      sigma.push_back(std::move(row));
    }
    doc["ls"] = {{"mu", std::move(mu)}, {"sigma", std::move(sigma)}};
  } else {
    doc["ls"] = nullptr;
  }
  if (model.stored_sample.has_value()) {
    nlohmann::json sample = nlohmann::json::array();
    for (Index i = 0; i < model.stored_sample->n(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Index j = 0; j < model.stored_sample->dim(); ++j) {
        row.push_back(model.stored_sample->values()(i, j));
      }
      sample.push_back(std::move(row));
    }
    doc["sample"] = std::move(sample);
  } else {
    doc["sample"] = nullptr;
  }
  return doc.dump(1);
}

inline DepthModel load_model(const std::string& bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model document is not valid JSON: ") +
                      e.what());
  }
  try {
    if (!doc.contains("format_version") ||
        doc["format_version"].get<int>() != kModelFormatVersion) {
      throw FormatError("unsupported model format version");
    }
    DepthModel model;
    model.notion = parse_notion(doc["notion"].get<std::string>());
    model.threshold = doc["threshold"].get<double>();
    model.subsample_fraction = doc["subsample_fraction"].get<double>();
    const auto& budget = doc["budget"];
    model.budget.strategy = parse_strategy(budget["strategy"].get<std::string>());
    model.budget.n_directions = budget["n_directions"].get<std::int64_t>();
    model.budget.seed = budget["seed"].get<std::uint64_t>();
    model.budget.restarts = budget["restarts"].get<int>();
    model.budget.rrs_rounds = budget["rrs_rounds"].get<int>();
    model.budget.rrs_initial_cap = budget["rrs_initial_cap"].get<double>();
    model.budget.rrs_shrink = budget["rrs_shrink"].get<double>();
    if (!doc["ls"].is_null()) {
      const auto& ls = doc["ls"];
      const auto& mu_json = ls["mu"];
      const Index d = static_cast<Index>(mu_json.size());
      Vector mu(d);
      for (Index i = 0; i < d; ++i) {
        mu(i) = mu_json[static_cast<std::size_t>(i)].get<double>();
      }
      Matrix sigma(d, d);
      const auto& sigma_json = ls["sigma"];
      if (static_cast<Index>(sigma_json.size()) != d) {
        throw FormatError("scatter matrix has inconsistent shape");
      }
      for (Index i = 0; i < d; ++i) {
        const auto& row = sigma_json[static_cast<std::size_t>(i)];
        if (static_cast<Index>(row.size()) != d) {
          throw FormatError("scatter matrix has inconsistent shape");
        }
        for (Index j = 0; j < d; ++j) {
          sigma(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
      }
      model.ls = detail::location_scatter_from(std::move(mu), std::move(sigma));
    }
    if (!doc["sample"].is_null()) {
      const auto& sample_json = doc["sample"];
      if (sample_json.empty()) throw FormatError("stored sample is empty");
      const Index n = static_cast<Index>(sample_json.size());
      const Index d = static_cast<Index>(sample_json.front().size());
      Matrix sample(n, d);
      for (Index i = 0; i < n; ++i) {
        const auto& row = sample_json[static_cast<std::size_t>(i)];
        if (static_cast<Index>(row.size()) != d) {
          throw FormatError("stored sample has ragged rows");
        }
        for (Index j = 0; j < d; ++j) {
          sample(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
      }
      model.stored_sample = DataMatrix(std::move(sample));
    }
    if (!model.ls.has_value() && !model.stored_sample.has_value()) {
      throw FormatError("model document has neither sample nor parameters");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace depth
