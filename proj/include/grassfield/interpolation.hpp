#pragma once

// Tangent-space interpolation of snapshot decompositions inside one element.
//
// All vertex decompositions are truncated to the smallest vertex rank and
// lifted to the tangent spaces at the origin vertex's left and right
// subspaces. A prediction is the exponential map of the barycentric mix of
// the lifted tangents.
//
// The exponential of a lifted vertex returns that vertex's subspace, but in
// a basis rotated toward the origin. Each vertex therefore also stores its
// r x r core expressed in that rotated basis (identical to diag(sigma) when
// no rotation occurs), and the predicted core is the weighted mix of those.

#include "grassfield/errors.hpp"
#include "grassfield/grassmann.hpp"
#include "grassfield/snapshot.hpp"

#include <span>
#include <string>
#include <vector>

namespace grassfield {

enum class SingularValueMode {
  AlignedCore,  // mix cores in origin-aligned bases, then re-diagonalize
  DirectMean,   // mix the sorted singular values directly
};

struct ElementChart {
  std::size_t origin_index = 0;
  Eigen::Index common_rank = 0;
  SubspacePoint left_origin;
  SubspacePoint right_origin;
  std::vector<TangentVector> left_tangents;
  std::vector<TangentVector> right_tangents;
  std::vector<Vector> vertex_singulars;
  std::vector<Matrix> vertex_cores;

  std::size_t size() const noexcept { return left_tangents.size(); }
};

/// Raised when a vertex cannot be lifted to the origin's tangent space.
class ChartError : public Error {
 public:
  ChartError(std::size_t vertex, const Error& cause)
      : Error(cause.code(), "vertex " + std::to_string(vertex) + ": " + cause.what()),
        vertex_(vertex) {}

  std::size_t vertex() const noexcept { return vertex_; }

 private:
  std::size_t vertex_;
};

/// Vertex with the largest rank, lowest index on ties.
inline std::size_t default_origin(std::span<const SnapshotDecomposition> decomps) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < decomps.size(); ++i)
    if (decomps[i].rank() > decomps[best].rank()) best = i;
  return best;
}

inline ElementChart build_chart(std::span<const SnapshotDecomposition> decomps,
                                std::size_t origin_index, const GeometryTolerances& tol = {}) {
  if (decomps.empty() || origin_index >= decomps.size()) {
    throw Error(ErrorCode::DomainError, "origin index out of range");
  }
  Eigen::Index r = decomps[0].rank();
  for (const auto& d : decomps) {
    if (d.rows() != decomps[0].rows() || d.cols() != decomps[0].cols()) {
      throw Error(ErrorCode::AmbientMismatch, "vertex fields differ in shape");
    }
    r = std::min(r, d.rank());
  }

  ElementChart chart;
  chart.origin_index = origin_index;
  chart.common_rank = r;
  const auto origin = decomps[origin_index].truncated(r);
  chart.left_origin = origin.left;
  chart.right_origin = origin.right;

  for (std::size_t i = 0; i < decomps.size(); ++i) {
    const auto v = decomps[i].truncated(r);
    chart.vertex_singulars.push_back(v.singular_values);
    if (i == origin_index) {
      chart.left_tangents.push_back({Matrix::Zero(v.rows(), r), chart.left_origin});
      chart.right_tangents.push_back({Matrix::Zero(v.cols(), r), chart.right_origin});
      chart.vertex_cores.push_back(v.singular_values.asDiagonal());
      continue;
    }
    try {
      auto gl = log_map(chart.left_origin, v.left, tol);
      auto gr = log_map(chart.right_origin, v.right, tol);
      const Matrix left_aligned = exp_map(chart.left_origin, gl, tol).basis();
      const Matrix right_aligned = exp_map(chart.right_origin, gr, tol).basis();
      chart.vertex_cores.push_back((left_aligned.transpose() * v.left.basis()) *
                                   v.singular_values.asDiagonal() *
                                   (v.right.basis().transpose() * right_aligned));
      chart.left_tangents.push_back(std::move(gl));
      chart.right_tangents.push_back(std::move(gr));
    } catch (const Error& e) {
      throw ChartError(i, e);
    }
  }
  return chart;
}

inline ElementChart build_chart(std::span<const SnapshotDecomposition> decomps,
                                const GeometryTolerances& tol = {}) {
  return build_chart(decomps, default_origin(decomps), tol);
}

namespace detail {

inline void check_weights(const ElementChart& chart, const Vector& w) {
  if (static_cast<std::size_t>(w.size()) != chart.size()) {
    throw Error(ErrorCode::DomainError, "expected " + std::to_string(chart.size()) + " weights");
  }
  if (!w.allFinite() || w.minCoeff() < -1e-10 || std::abs(w.sum() - 1.0) > 1e-10) {
    throw Error(ErrorCode::DomainError, "weights must be nonnegative and sum to one");
  }
}

}  // namespace detail

inline SnapshotDecomposition interpolate_decomposition(
    const ElementChart& chart, const Vector& weights,
    SingularValueMode mode = SingularValueMode::AlignedCore, const GeometryTolerances& tol = {}) {
  detail::check_weights(chart, weights);
  const auto r = chart.common_rank;
  Matrix gl = Matrix::Zero(chart.left_origin.ambient_dim(), r);
  Matrix gr = Matrix::Zero(chart.right_origin.ambient_dim(), r);
  for (std::size_t i = 0; i < chart.size(); ++i) {
    const double w = weights(static_cast<Eigen::Index>(i));
    gl += w * chart.left_tangents[i].matrix;
    gr += w * chart.right_tangents[i].matrix;
  }
  const Matrix left = exp_map(chart.left_origin, {gl, chart.left_origin}, tol).basis();
  const Matrix right = exp_map(chart.right_origin, {gr, chart.right_origin}, tol).basis();

  SnapshotDecomposition out;
  if (mode == SingularValueMode::DirectMean) {
    Vector sigma = Vector::Zero(r);
    for (std::size_t i = 0; i < chart.size(); ++i)
      sigma += weights(static_cast<Eigen::Index>(i)) * chart.vertex_singulars[i];
    out = {SubspacePoint(left, tol), sigma, SubspacePoint(right, tol)};
  } else {
    Matrix core = Matrix::Zero(r, r);
    for (std::size_t i = 0; i < chart.size(); ++i)
      core += weights(static_cast<Eigen::Index>(i)) * chart.vertex_cores[i];
    const auto f = linalg::thin_svd(core);
    out = {SubspacePoint(linalg::polar_orthonormalize(left * f.u), tol), f.s,
           SubspacePoint(linalg::polar_orthonormalize(right * f.v), tol)};
  }
  for (Eigen::Index k = 0; k < r; ++k) {
    if (!(out.singular_values(k) > 0.0)) {
      throw Error(ErrorCode::NonPositiveSingular, "interpolated singular value " +
                                                      std::to_string(k) + " is not positive");
    }
  }
  return out;
}

inline Matrix interpolate_field(const ElementChart& chart, const Vector& weights,
                                SingularValueMode mode = SingularValueMode::AlignedCore,
                                const GeometryTolerances& tol = {}) {
  return reconstruct(interpolate_decomposition(chart, weights, mode, tol));
}

}  // namespace grassfield
