#pragma once

// Subspace geometry on G(p, n) and on the doubly infinite Grassmannian:
// principal angles, the three angle-based distances, and the log/exp charts
// used for tangent-space interpolation.

#include "grassfield/errors.hpp"
#include "grassfield/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace grassfield {

/// Numerical thresholds for the geometry kernel. Defaults are the engine
/// defaults; every field may be overridden by callers.
struct GeometryTolerances {
  double orthonormality = 1e-10;
  double singularity = 1e-12;
  double tangency = 1e-8;
};

/// A point on G(r, n) held through an orthonormal n x r representative.
class SubspacePoint {
 public:
  SubspacePoint() = default;

  explicit SubspacePoint(Matrix basis, const GeometryTolerances& tol = {})
      : basis_(std::move(basis)) {
    if (basis_.cols() < 1 || basis_.rows() < basis_.cols()) {
      throw Error(ErrorCode::NonOrthonormal,
                  "basis must satisfy 1 <= r <= n, got " + std::to_string(basis_.rows()) + "x" +
                      std::to_string(basis_.cols()));
    }
    if (!basis_.allFinite()) throw Error(ErrorCode::NonFinite, "basis has non-finite entries");
    const double defect = linalg::orthonormality_defect(basis_);
    if (defect > tol.orthonormality) {
      throw Error(ErrorCode::NonOrthonormal,
                  "basis^T basis deviates from identity by " + std::to_string(defect));
    }
  }

  /// Orthonormalizes an arbitrary full-column-rank matrix (thin QR) first.
  static SubspacePoint from_span(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    return SubspacePoint(std::move(q));
  }

  const Matrix& basis() const noexcept { return basis_; }
  Eigen::Index ambient_dim() const noexcept { return basis_.rows(); }
  Eigen::Index rank() const noexcept { return basis_.cols(); }

  /// First k columns, a point on G(k, n).
  SubspacePoint leading(Eigen::Index k) const {
    return SubspacePoint(Matrix(basis_.leftCols(k)));
  }

 private:
  Matrix basis_;
};

/// An element of the tangent space at `origin`: origin^T * matrix == 0.
struct TangentVector {
  Matrix matrix;
  SubspacePoint origin;

  double norm() const { return matrix.norm(); }
};

/// Principal angles in radians, nondecreasing, each in [0, pi/2].
struct PrincipalAngleSet {
  std::vector<double> angles;

  std::size_t size() const noexcept { return angles.size(); }
};

enum class MetricKind { Grassmann, Chordal, Procrustes };

/// Equal-rank Procrustes distance exists in two normalizations. The
/// canonical one matches the unequal-rank formula so the two reduce to each
/// other; the other carries an extra factor of two.
enum class ProcrustesConvention { Canonical, Factor2 };

inline std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Grassmann: return "grassmann";
    case MetricKind::Chordal: return "chordal";
    case MetricKind::Procrustes: return "procrustes";
  }
  return "grassmann";
}

inline MetricKind parse_metric(std::string_view name) {
  if (name == "grassmann") return MetricKind::Grassmann;
  if (name == "chordal") return MetricKind::Chordal;
  if (name == "procrustes") return MetricKind::Procrustes;
  throw Error(ErrorCode::ConfigError, "unknown metric '" + std::string(name) + "'");
}

namespace detail {

inline void require_same_ambient(const SubspacePoint& a, const SubspacePoint& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw Error(ErrorCode::AmbientMismatch, "ambient dimensions " + std::to_string(a.ambient_dim()) +
                                                " and " + std::to_string(b.ambient_dim()));
  }
}

inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

inline double angle_term(MetricKind kind, double theta) {
  switch (kind) {
    case MetricKind::Grassmann: return theta * theta;
    case MetricKind::Chordal: {
      const double s = std::sin(theta);
      return s * s;
    }
    case MetricKind::Procrustes: {
      const double s = std::sin(0.5 * theta);
      return s * s;
    }
  }
  return 0.0;
}

}  // namespace detail

/// Principal angles between span(a) and span(b).
///
/// Cosines come from the singular values of a^T b (clamped to [0, 1]). Angles
/// below pi/4 are taken from the sines instead, i.e. from the singular
/// values of the component of the lower-rank basis orthogonal to the other
/// one; arccos alone loses half the significant digits near zero.
inline PrincipalAngleSet principal_angles(const SubspacePoint& a, const SubspacePoint& b) {
  detail::require_same_ambient(a, b);
  const bool a_small = a.rank() <= b.rank();
  const Matrix& small = a_small ? a.basis() : b.basis();
  const Matrix& big = a_small ? b.basis() : a.basis();
  const Eigen::Index k = small.cols();
  if (a.rank() == b.rank() && small == big) {
    return {std::vector<double>(static_cast<std::size_t>(k), 0.0)};
  }

  const Matrix cross = big.transpose() * small;
  Vector cosines = linalg::singular_values(cross);  // nonincreasing
  const Matrix residual = small - big * cross;
  Vector sines = linalg::singular_values(residual);  // nonincreasing

  PrincipalAngleSet out;
  out.angles.resize(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    // i-th smallest angle pairs with the i-th largest cosine and the i-th
    // smallest sine.
    const double c = detail::clamp_unit(cosines(i));
    const double s = detail::clamp_unit(sines(k - 1 - i));
    const double theta = (s * s < 0.5) ? std::asin(s) : std::acos(c);
    out.angles[static_cast<std::size_t>(i)] = std::clamp(theta, 0.0, std::numbers::pi / 2);
  }
  std::sort(out.angles.begin(), out.angles.end());
  return out;
}

/// Table-1 style distance between equal-rank subspaces.
inline double distance_equidim(MetricKind kind, const SubspacePoint& a, const SubspacePoint& b,
                               ProcrustesConvention convention = ProcrustesConvention::Canonical) {
  detail::require_same_ambient(a, b);
  if (a.rank() != b.rank()) {
    throw Error(ErrorCode::RankMismatch, "ranks " + std::to_string(a.rank()) + " and " +
                                             std::to_string(b.rank()) +
                                             "; use distance_infinite");
  }
  const auto angles = principal_angles(a, b);
  double sum = 0.0;
  for (double t : angles.angles) sum += detail::angle_term(kind, t);
  double d = std::sqrt(sum);
  if (kind == MetricKind::Procrustes && convention == ProcrustesConvention::Factor2) d *= 2.0;
  return d;
}

/// Distance on G(inf, inf): the missing |r_a - r_b| angles count as pi/2
/// for Grassmann and contribute a unit term for Chordal and Procrustes.
inline double distance_infinite(MetricKind kind, const SubspacePoint& a, const SubspacePoint& b) {
  detail::require_same_ambient(a, b);
  const auto angles = principal_angles(a, b);
  const double gap = static_cast<double>(std::abs(a.rank() - b.rank()));
  double sum = kind == MetricKind::Grassmann ? gap * std::numbers::pi * std::numbers::pi / 4.0 : gap;
  for (double t : angles.angles) sum += detail::angle_term(kind, t);
  return std::sqrt(sum);
}

namespace detail {

struct LogFactors {
  Matrix u;  // n x r
  Vector s;  // r, the tan of the angles
  Matrix v;  // r x r
};

inline LogFactors log_factors(const SubspacePoint& origin, const SubspacePoint& target,
                              const GeometryTolerances& tol) {
  require_same_ambient(origin, target);
  if (origin.rank() != target.rank()) {
    throw Error(ErrorCode::RankMismatch, "log map needs equal ranks");
  }
  const Matrix& o = origin.basis();
  const Matrix& t = target.basis();
  const Matrix product = o.transpose() * t;
  Eigen::JacobiSVD<Matrix> svd(product);
  const double smallest = svd.singularValues()(svd.singularValues().size() - 1);
  if (smallest < tol.singularity) {
    throw Error(ErrorCode::SingularProduct,
                "origin^T target has smallest singular value " + std::to_string(smallest));
  }
  const Matrix complement = t - o * product;
  // M = complement * product^{-1}, via a solve on the transposed system.
  const Matrix m = product.transpose().partialPivLu().solve(complement.transpose()).transpose();
  auto f = linalg::thin_svd(m);
  return {std::move(f.u), std::move(f.s), std::move(f.v)};
}

}  // namespace detail

/// Logarithmic map of `target` at `origin`.
inline TangentVector log_map(const SubspacePoint& origin, const SubspacePoint& target,
                             const GeometryTolerances& tol = {}) {
  const auto f = detail::log_factors(origin, target, tol);
  Vector atans = f.s.unaryExpr([](double x) { return std::atan(x); });
  Matrix gamma = f.u * atans.asDiagonal() * f.v.transpose();
  return {std::move(gamma), origin};
}

/// Exponential map of a tangent vector at `origin`. The returned
/// representative is (origin V cos S + U sin S) V^T, projected to the
/// nearest orthonormal matrix to remove rounding drift.
inline SubspacePoint exp_map(const SubspacePoint& origin, const TangentVector& gamma,
                             const GeometryTolerances& tol = {}) {
  if (gamma.matrix.rows() != origin.ambient_dim() || gamma.matrix.cols() != origin.rank()) {
    throw Error(ErrorCode::TangencyViolation, "tangent shape does not match origin");
  }
  const double off = (origin.basis().transpose() * gamma.matrix).cwiseAbs().maxCoeff();
  if (off > tol.tangency * std::max(1.0, gamma.matrix.norm())) {
    throw Error(ErrorCode::TangencyViolation,
                "origin^T gamma has magnitude " + std::to_string(off));
  }
  const auto f = linalg::thin_svd(gamma.matrix);
  const Vector c = f.s.array().cos();
  const Vector s = f.s.array().sin();
  const Matrix y =
      (origin.basis() * f.v * c.asDiagonal() + f.u * s.asDiagonal()) * f.v.transpose();
  return SubspacePoint(linalg::polar_orthonormalize(y), tol);
}

/// Point at parameter z on the geodesic from a (z = 0) to b (z = 1).
inline SubspacePoint geodesic(const SubspacePoint& a, const SubspacePoint& b, double z,
                              const GeometryTolerances& tol = {}) {
  if (!(z >= 0.0 && z <= 1.0)) {
    throw Error(ErrorCode::DomainError, "geodesic parameter must lie in [0, 1]");
  }
  const auto f = detail::log_factors(a, b, tol);
  const Vector angles = f.s.unaryExpr([z](double x) { return z * std::atan(x); });
  const Vector c = angles.array().cos();
  const Vector s = angles.array().sin();
  const Matrix y = (a.basis() * f.v * c.asDiagonal() + f.u * s.asDiagonal()) * f.v.transpose();
  return SubspacePoint(linalg::polar_orthonormalize(y), tol);
}

}  // namespace grassfield
