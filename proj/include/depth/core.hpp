#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace depth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct DepthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : DepthError {
  using DepthError::DepthError;
};
struct SingularScatter : DepthError {
  using DepthError::DepthError;
};
struct BudgetExceeded : DepthError {
  using DepthError::DepthError;
};
struct EmptyData : DepthError {
  using DepthError::DepthError;
};
struct NoAnomalies : DepthError {
  using DepthError::DepthError;
};
struct BadScenario : DepthError {
  using DepthError::DepthError;
};
struct FormatError : DepthError {
  using DepthError::DepthError;
};
// Raised by CSV ingestion; carries "file:line" in the message.
struct CsvError : FormatError {
  using FormatError::FormatError;
};
struct AmbiguousDirection : DepthError {
  using DepthError::DepthError;
};
struct UnsupportedNotion : DepthError {
  using DepthError::DepthError;
};

/// n x d table of observations, one observation per row.
/// Entries are validated to be finite at construction; instances are
/// immutable afterwards and safe to share across threads.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw EmptyData("DataMatrix requires at least one row and one column");
    }
    if (!values_.allFinite()) {
      throw DepthError("DataMatrix entries must be finite");
    }
  }

  static DataMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw EmptyData("DataMatrix requires at least one row");
    const Index d = static_cast<Index>(rows.front().size());
    Matrix m(static_cast<Index>(rows.size()), d);
    for (Index i = 0; i < m.rows(); ++i) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != d) {
        throw DimensionMismatch("ragged row in DataMatrix::from_rows");
      }
      for (Index j = 0; j < d; ++j) {
        m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    return DataMatrix(std::move(m));
  }

  Index n() const { return values_.rows(); }
  Index dim() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  Vector row(Index i) const { return values_.row(i).transpose(); }

 private:
  Matrix values_;
};

/// Unit vector on the sphere S^{d-1}; the constructor rejects vectors whose
/// Euclidean norm deviates from 1 by more than 1e-9.
struct UnitDirection {
  Vector coords;

  explicit UnitDirection(Vector c) : coords(std::move(c)) {
    if (coords.size() < 1 || std::abs(coords.norm() - 1.0) > 1e-9) {
      throw DepthError("UnitDirection must have unit Euclidean norm");
    }
  }

  static UnitDirection normalized(const Vector& v) {
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DepthError("cannot normalize a zero or non-finite vector");
    }
    return UnitDirection(v / norm);
  }

  Index dim() const { return coords.size(); }
};

enum class DepthNotion {
  mahalanobis,
  halfspace,
  projection,
  projection_asymmetric,
  simplicial,
  simplicial_volume,
  simplicial_volume_affine_invariant,
};

inline const char* to_string(DepthNotion n) {
  switch (n) {
    case DepthNotion::mahalanobis: return "mahalanobis";
    case DepthNotion::halfspace: return "halfspace";
    case DepthNotion::projection: return "projection";
    case DepthNotion::projection_asymmetric: return "projection_asymmetric";
    case DepthNotion::simplicial: return "simplicial";
    case DepthNotion::simplicial_volume: return "simplicial_volume";
    case DepthNotion::simplicial_volume_affine_invariant:
      return "simplicial_volume_affine_invariant";
  }
  throw DepthError("unknown depth notion");
}

inline DepthNotion parse_notion(const std::string& s) {
  if (s == "mahalanobis") return DepthNotion::mahalanobis;
  if (s == "halfspace") return DepthNotion::halfspace;
  if (s == "projection") return DepthNotion::projection;
  if (s == "projection_asymmetric") return DepthNotion::projection_asymmetric;
  if (s == "simplicial") return DepthNotion::simplicial;
  if (s == "simplicial_volume") return DepthNotion::simplicial_volume;
  if (s == "simplicial_volume_affine_invariant") {
    return DepthNotion::simplicial_volume_affine_invariant;
  }
  throw FormatError("unknown depth notion: " + s);
}

/// Notions whose evaluation produces a witness direction on the sphere.
inline bool notion_has_directions(DepthNotion n) {
  return n == DepthNotion::projection || n == DepthNotion::projection_asymmetric;
}

/// Notions evaluated through univariate projections (searchable over S^{d-1}).
inline bool notion_is_projective(DepthNotion n) {
  return n == DepthNotion::halfspace || n == DepthNotion::projection ||
         n == DepthNotion::projection_asymmetric;
}

/// Location vector plus symmetric positive-definite scatter, with the inverse
/// and determinant cached.
struct LocationScatter {
  Vector mu;
  Matrix sigma;
  Matrix sigma_inv;
  double sigma_det = 0.0;

  Index dim() const { return mu.size(); }
};

namespace detail {

// Relative condition-number cutoff separating "singular" from merely
// ill-conditioned scatter matrices.
inline constexpr double kScatterConditionLimit = 1e12;

inline LocationScatter location_scatter_from(Vector mu, Matrix sigma) {
  const Index d = mu.size();
  sigma = ((sigma + sigma.transpose()) / 2.0).eval();  // kill roundoff skew
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  if (es.info() != Eigen::Success) {
    throw SingularScatter("scatter eigendecomposition failed");
  }
  const Vector& ev = es.eigenvalues();
  const double lambda_min = ev(0);
  const double lambda_max = ev(d - 1);
  if (!(lambda_min > 0.0) || lambda_max / lambda_min > kScatterConditionLimit) {
    throw SingularScatter("scatter matrix is singular or too ill-conditioned");
  }
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularScatter("scatter matrix is not positive definite");
  }
  LocationScatter ls;
  ls.mu = std::move(mu);
  ls.sigma = std::move(sigma);
  ls.sigma_inv = llt.solve(Matrix::Identity(d, d));
  ls.sigma_det = ev.prod();
  return ls;
}

}  // namespace detail

/// Sample mean and unbiased (1/(n-1), centered) covariance of the data,
/// with cached inverse and determinant.
inline LocationScatter moment_estimates(const DataMatrix& data) {
  const Index n = data.n();
  const Index d = data.dim();
  if (n <= d) {
    throw SingularScatter("need more observations than dimensions");
  }
  Vector mu = data.values().colwise().mean().transpose();
  Matrix centered = data.values().rowwise() - mu.transpose();
  Matrix sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return detail::location_scatter_from(std::move(mu), std::move(sigma));
}

/// Maps every observation x to L (x - mu) where L^T L = Sigma^{-1}
/// (L is the inverse of the lower Cholesky factor of Sigma), so the whitened
/// sample has mean 0 and covariance I when ls = moment_estimates(data).
inline DataMatrix whiten(const DataMatrix& data, const LocationScatter& ls) {
  if (data.dim() != ls.dim()) {
    throw DimensionMismatch("whiten: data and scatter dimensions differ");
  }
  Eigen::LLT<Matrix> llt(ls.sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularScatter("whiten: scatter is not positive definite");
  }
  Matrix centered = data.values().rowwise() - ls.mu.transpose();
  Matrix whitened =
      llt.matrixL().solve(centered.transpose()).transpose();
  return DataMatrix(std::move(whitened));
}

}  // namespace depth
