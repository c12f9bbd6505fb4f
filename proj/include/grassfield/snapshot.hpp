#pragma once

#include "grassfield/errors.hpp"
#include "grassfield/grassmann.hpp"
#include "grassfield/linalg.hpp"

#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace grassfield {

/// Full response matrix at one parameter point.
struct FieldSnapshot {
  Matrix field;
  Vector params;

  void validate() const {
    if (field.rows() < 1 || field.cols() < 1) {
      throw Error(ErrorCode::MalformedSnapshot, "field must be at least 1x1");
    }
    if (!field.allFinite()) throw Error(ErrorCode::NonFinite, "field has non-finite entries");
  }
};

/// Rank-truncated thin SVD F ~ left * diag(singular_values) * right^T.
struct SnapshotDecomposition {
  SubspacePoint left;
  Vector singular_values;
  SubspacePoint right;

  Eigen::Index rank() const noexcept { return singular_values.size(); }
  Eigen::Index rows() const noexcept { return left.ambient_dim(); }
  Eigen::Index cols() const noexcept { return right.ambient_dim(); }

  /// Leading k singular triplets.
  SnapshotDecomposition truncated(Eigen::Index k) const {
    return {left.leading(k), Vector(singular_values.head(k)), right.leading(k)};
  }

  void validate() const {
    if (left.rank() != right.rank() || left.rank() != singular_values.size()) {
      throw Error(ErrorCode::RankMismatch, "decomposition factors disagree on rank");
    }
    for (Eigen::Index k = 0; k < singular_values.size(); ++k) {
      if (!(singular_values(k) > 0.0)) {
        throw Error(ErrorCode::NonPositiveSingular, "singular value " + std::to_string(k) +
                                                        " is not positive");
      }
      if (k > 0 && singular_values(k) > singular_values(k - 1)) {
        throw Error(ErrorCode::NonPositiveSingular, "singular values are not nonincreasing");
      }
    }
  }
};

struct GlobalRank {
  Eigen::Index rank = 1;
};

/// Keep sigma_k > scale * max(sigma) * n_f * eps. scale = 1 is the
/// machine-precision rule; larger values prescribe a looser tolerance.
struct ToleranceRank {
  double scale = 1.0;
};

using RankPolicy = std::variant<GlobalRank, ToleranceRank>;

inline bool uses_global_rank(const RankPolicy& p) { return std::holds_alternative<GlobalRank>(p); }

inline double rank_tolerance(const Vector& sigma, Eigen::Index n_f, double scale) {
  const double smax = sigma.size() > 0 ? sigma.maxCoeff() : 0.0;
  return scale * smax * static_cast<double>(n_f) * std::numeric_limits<double>::epsilon();
}

inline SnapshotDecomposition decompose(const FieldSnapshot& snapshot, const RankPolicy& policy) {
  snapshot.validate();
  const Matrix& f = snapshot.field;
  auto svd = linalg::thin_svd(f);
  const Eigen::Index full = svd.s.size();
  if (full == 0 || svd.s(0) <= 0.0) {
    throw Error(ErrorCode::DegenerateField, "field is the zero matrix");
  }

  const double scale =
      std::holds_alternative<ToleranceRank>(policy) ? std::get<ToleranceRank>(policy).scale : 1.0;
  const double tol = rank_tolerance(svd.s, f.rows(), scale);
  Eigen::Index numerical_rank = 0;
  while (numerical_rank < full && svd.s(numerical_rank) > tol) ++numerical_rank;

  Eigen::Index keep = std::max<Eigen::Index>(numerical_rank, 1);
  if (const auto* g = std::get_if<GlobalRank>(&policy)) {
    if (g->rank < 1) throw Error(ErrorCode::ConfigError, "global rank must be >= 1");
    if (numerical_rank < g->rank) {
      throw Error(ErrorCode::InsufficientRank,
                  "field has numerical rank " + std::to_string(numerical_rank) +
                      " < requested " + std::to_string(g->rank));
    }
    keep = g->rank;
  }

  return {SubspacePoint(Matrix(svd.u.leftCols(keep))), Vector(svd.s.head(keep)),
          SubspacePoint(Matrix(svd.v.leftCols(keep)))};
}

inline Matrix reconstruct(const SnapshotDecomposition& dec) {
  return dec.left.basis() * dec.singular_values.asDiagonal() * dec.right.basis().transpose();
}

/// Row-major reshape of a flat response vector into an n_f x m_f field.
inline Matrix reshape_row_major(std::span<const double> values, Eigen::Index n_f,
                                Eigen::Index m_f) {
  if (n_f < 1 || m_f < 1 || static_cast<Eigen::Index>(values.size()) != n_f * m_f) {
    throw Error(ErrorCode::MalformedSnapshot, "cannot reshape " + std::to_string(values.size()) +
                                                  " values into " + std::to_string(n_f) + "x" +
                                                  std::to_string(m_f));
  }
  Matrix out(n_f, m_f);
  for (Eigen::Index i = 0; i < n_f; ++i)
    for (Eigen::Index j = 0; j < m_f; ++j) out(i, j) = values[static_cast<std::size_t>(i * m_f + j)];
  return out;
}

}  // namespace grassfield
