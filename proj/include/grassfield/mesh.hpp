#pragma once

// Delaunay discretization of the unit hypercube [0, 1]^d, 1 <= d <= 6.
//
// Points are appended and never moved; simplices are stored with sorted
// vertex indices and are replaced wholesale around each inserted point
// (Bowyer-Watson). The hull is the cube itself from the start, so no
// bounding super-simplex is needed.

#include "grassfield/errors.hpp"
#include "grassfield/linalg.hpp"
#include "grassfield/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace grassfield {

using ParamPoint = Vector;

struct Simplex {
  std::vector<std::size_t> vertices;  // sorted ascending, size d + 1

  friend bool operator==(const Simplex&, const Simplex&) = default;
  friend auto operator<=>(const Simplex&, const Simplex&) = default;
};

inline constexpr int kMaxMeshDims = 6;

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Columns q_i - q_0 for i = 1..k.
inline Matrix edge_matrix(const std::vector<const ParamPoint*>& q) {
  const auto d = q.front()->size();
  Matrix e(d, static_cast<Eigen::Index>(q.size()) - 1);
  for (std::size_t i = 1; i < q.size(); ++i) e.col(static_cast<Eigen::Index>(i) - 1) = *q[i] - *q[0];
  return e;
}

inline double signed_det(const std::vector<const ParamPoint*>& q) {
  const Matrix e = edge_matrix(q);
  if (e.rows() == 1) return e(0, 0);
  return e.partialPivLu().determinant();
}

// Product of edge lengths; the scale against which a determinant counts as zero.
inline double edge_scale(const std::vector<const ParamPoint*>& q) {
  double s = 1.0;
  for (std::size_t i = 1; i < q.size(); ++i) s *= (*q[i] - *q[0]).norm();
  return s;
}

struct Circumsphere {
  Vector center;
  double radius_sq = 0.0;
};

inline Circumsphere circumsphere(const std::vector<const ParamPoint*>& q) {
  const auto d = q.front()->size();
  Matrix a(d, d);
  Vector b(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const ParamPoint& v = *q[static_cast<std::size_t>(i) + 1];
    a.row(i) = 2.0 * (v - *q[0]).transpose();
    b(i) = v.squaredNorm() - q[0]->squaredNorm();
  }
  Circumsphere c;
  c.center = a.partialPivLu().solve(b);
  c.radius_sq = (*q[0] - c.center).squaredNorm();
  return c;
}

using FacetKey = std::vector<std::size_t>;

inline FacetKey facet_without(const Simplex& s, std::size_t drop) {
  FacetKey f;
  f.reserve(s.vertices.size() - 1);
  for (std::size_t j = 0; j < s.vertices.size(); ++j)
    if (j != drop) f.push_back(s.vertices[j]);
  return f;
}

}  // namespace detail

class SimplexMesh {
 public:
  explicit SimplexMesh(int dims) : dims_(dims) {
    if (dims < 1 || dims > kMaxMeshDims) {
      throw Error(ErrorCode::DimensionUnsupported,
                  "parameter dimension " + std::to_string(dims) + " outside [1, 6]");
    }
  }

  int dims() const noexcept { return dims_; }
  const std::vector<ParamPoint>& points() const noexcept { return points_; }
  const std::vector<Simplex>& simplices() const noexcept { return simplices_; }
  const ParamPoint& point(std::size_t i) const { return points_.at(i); }

  std::vector<const ParamPoint*> vertex_points(const Simplex& s) const {
    std::vector<const ParamPoint*> q;
    q.reserve(s.vertices.size());
    for (auto v : s.vertices) q.push_back(&points_.at(v));
    return q;
  }

  /// Builds a mesh from points plus an explicit triangulation; used for the
  /// initial cube split and for tests with hand-made elements.
  static SimplexMesh from_triangulation(int dims, std::vector<ParamPoint> points,
                                        std::vector<Simplex> simplices) {
    SimplexMesh m(dims);
    m.points_ = std::move(points);
    for (auto& s : simplices) {
      if (s.vertices.size() != static_cast<std::size_t>(dims) + 1) {
        throw Error(ErrorCode::DomainError, "simplex needs n_d + 1 vertices");
      }
      for (auto v : s.vertices)
        if (v >= m.points_.size()) throw Error(ErrorCode::DomainError, "simplex vertex index out of range");
      std::sort(s.vertices.begin(), s.vertices.end());
      m.add_simplex(std::move(s));
    }
    return m;
  }

  /// Inserts p and restores the Delaunay property. Returns the new index.
  std::size_t insert(const ParamPoint& p);

  /// Index of a simplex whose closure contains p, preferring the one with
  /// the largest minimum barycentric weight. nullopt if p lies outside all.
  std::optional<std::size_t> locate(const ParamPoint& p, double tol = 1e-8) const;

  const detail::Circumsphere& sphere(std::size_t simplex_id) const { return spheres_.at(simplex_id); }

 private:
  void add_simplex(Simplex s) {
    spheres_.push_back(detail::circumsphere(vertex_points(s)));
    simplices_.push_back(std::move(s));
  }

  int dims_;
  std::vector<ParamPoint> points_;
  std::vector<Simplex> simplices_;
  std::vector<detail::Circumsphere> spheres_;
};

inline double simplex_volume(const std::vector<const ParamPoint*>& q) {
  const int d = static_cast<int>(q.size()) - 1;
  return std::abs(detail::signed_det(q)) / detail::factorial(d);
}

/// (1/d!) |det[v1 - v0, ..., vd - v0]|.
inline double simplex_volume(const SimplexMesh& mesh, const Simplex& s) {
  return simplex_volume(mesh.vertex_points(s));
}

inline double total_volume(const SimplexMesh& mesh) {
  double v = 0.0;
  for (const auto& s : mesh.simplices()) v += simplex_volume(mesh, s);
  return v;
}

/// Signed barycentric weights of p: the volume ratio with vertex i replaced
/// by p. No clamping or range check.
inline Vector raw_barycentric(const std::vector<const ParamPoint*>& q, const ParamPoint& p) {
  const double whole = detail::signed_det(q);
  Vector w(static_cast<Eigen::Index>(q.size()));
  if (whole == 0.0) {
    w.setConstant(std::numeric_limits<double>::quiet_NaN());
    return w;
  }
  auto r = q;
  for (std::size_t i = 0; i < q.size(); ++i) {
    r[i] = &p;
    w(static_cast<Eigen::Index>(i)) = detail::signed_det(r) / whole;
    r[i] = q[i];
  }
  return w;
}

/// Barycentric weights of p in s: nonnegative and summing to one. Weights
/// down to -1e-8 are treated as rounding and clipped.
inline Vector barycentric_weights(const SimplexMesh& mesh, const Simplex& s, const ParamPoint& p) {
  Vector w = raw_barycentric(mesh.vertex_points(s), p);
  if (!w.allFinite() || w.minCoeff() < -1e-8) {
    throw Error(ErrorCode::OutsideSimplex, "point lies outside the simplex");
  }
  w = w.cwiseMax(0.0);
  return w / w.sum();
}

/// Contraction of a k-simplex about its centroid. For k >= 2 the vertices
/// become the face centers (vertex l = mean of the other k vertices); a
/// segment has no useful face-center simplex and is halved instead.
inline std::vector<ParamPoint> face_center_simplex(const std::vector<ParamPoint>& verts) {
  const auto k = static_cast<double>(verts.size()) - 1.0;
  ParamPoint centroid = ParamPoint::Zero(verts.front().size());
  for (const auto& v : verts) centroid += v;
  centroid /= static_cast<double>(verts.size());
  std::vector<ParamPoint> out;
  out.reserve(verts.size());
  if (verts.size() <= 2) {
    for (const auto& v : verts) out.push_back(centroid + 0.5 * (v - centroid));
    return out;
  }
  ParamPoint sum = ParamPoint::Zero(verts.front().size());
  for (const auto& v : verts) sum += v;
  for (const auto& v : verts) out.push_back((sum - v) / k);
  return out;
}

inline std::vector<ParamPoint> sub_simplex(const SimplexMesh& mesh, const Simplex& s) {
  std::vector<ParamPoint> verts;
  for (auto v : s.vertices) verts.push_back(mesh.point(v));
  return face_center_simplex(verts);
}

/// A facet of s lying in a face {x_axis = value} of the cube.
struct BoundaryFacet {
  std::size_t dropped_vertex;  // local index of the vertex not on the facet
  int axis;
  double value;                // 0 or 1
};

inline std::vector<BoundaryFacet> boundary_facets(const SimplexMesh& mesh, const Simplex& s) {
  std::vector<BoundaryFacet> out;
  const std::size_t n = s.vertices.size();
  if (n < 2) return out;
  for (std::size_t drop = 0; drop < n; ++drop) {
    for (int axis = 0; axis < mesh.dims(); ++axis) {
      for (double value : {0.0, 1.0}) {
        bool on = true;
        for (std::size_t j = 0; j < n && on; ++j) {
          if (j == drop) continue;
          on = std::abs(mesh.point(s.vertices[j])(axis) - value) <= 1e-14;
        }
        if (on) out.push_back({drop, axis, value});
      }
    }
  }
  return out;
}

/// Uniform point in the simplex spanned by `verts` (flat Dirichlet weights).
inline ParamPoint uniform_in_simplex(const std::vector<ParamPoint>& verts, Rng& rng) {
  std::vector<double> g(verts.size());
  double total = 0.0;
  for (auto& x : g) total += (x = rng.exponential());
  ParamPoint p = ParamPoint::Zero(verts.front().size());
  for (std::size_t i = 0; i < verts.size(); ++i) p += (g[i] / total) * verts[i];
  return p;
}

struct SamplingOptions {
  double boundary_probability = 0.5;
};

/// New sample for refining s. If s touches the cube boundary, with
/// probability `boundary_probability` the point is drawn on one of its
/// boundary facets (uniformly chosen, contracted like the sub-simplex);
/// otherwise it is drawn uniformly inside sub_simplex(s).
///
/// In one dimension the boundary is the two corner points, which are always
/// sampled already, so the boundary branch never fires there.
inline ParamPoint sample_refinement_point(const SimplexMesh& mesh, const Simplex& s, Rng& rng,
                                          const SamplingOptions& opts = {}) {
  if (mesh.dims() >= 2) {
    const auto facets = boundary_facets(mesh, s);
    if (!facets.empty() && rng.uniform() < opts.boundary_probability) {
      const auto& f = facets[rng.index(facets.size())];
      std::vector<ParamPoint> verts;
      for (std::size_t j = 0; j < s.vertices.size(); ++j)
        if (j != f.dropped_vertex) verts.push_back(mesh.point(s.vertices[j]));
      ParamPoint p = uniform_in_simplex(face_center_simplex(verts), rng);
      p(f.axis) = f.value;
      return p.cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  ParamPoint p = uniform_in_simplex(sub_simplex(mesh, s), rng);
  return p.cwiseMax(0.0).cwiseMin(1.0);
}

inline std::optional<std::size_t> SimplexMesh::locate(const ParamPoint& p, double tol) const {
  std::optional<std::size_t> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < simplices_.size(); ++i) {
    const Vector w = raw_barycentric(vertex_points(simplices_[i]), p);
    if (!w.allFinite()) continue;
    const double m = w.minCoeff();
    if (m > best_min) {
      best_min = m;
      best = i;
    }
  }
  if (!best || best_min < -tol) return std::nullopt;
  return best;
}

inline std::size_t SimplexMesh::insert(const ParamPoint& p) {
  if (p.size() != dims_) {
    throw Error(ErrorCode::DomainError, "point has dimension " + std::to_string(p.size()));
  }
  if (!p.allFinite() || p.minCoeff() < 0.0 || p.maxCoeff() > 1.0) {
    throw Error(ErrorCode::DomainError, "point lies outside the unit cube");
  }
  for (const auto& q : points_) {
    if ((q - p).norm() <= 1e-9) throw Error(ErrorCode::DuplicatePoint, "point coincides with a vertex");
  }

  const std::size_t n_e = simplices_.size();
  std::map<detail::FacetKey, std::vector<std::size_t>> owners;
  for (std::size_t i = 0; i < n_e; ++i)
    for (std::size_t j = 0; j < simplices_[i].vertices.size(); ++j)
      owners[detail::facet_without(simplices_[i], j)].push_back(i);
  auto neighbor = [&](std::size_t simplex, const detail::FacetKey& f) -> std::optional<std::size_t> {
    for (auto o : owners.at(f))
      if (o != simplex) return o;
    return std::nullopt;
  };

  // Seeds: every simplex whose closure holds p.
  std::vector<char> in_sphere(n_e, 0), in_cavity(n_e, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n_e; ++i) {
    const auto& c = spheres_[i];
    in_sphere[i] = c.radius_sq - (p - c.center).squaredNorm() > 1e-12 * c.radius_sq;
    const Vector w = raw_barycentric(vertex_points(simplices_[i]), p);
    if (w.allFinite() && w.minCoeff() >= -1e-12) {
      in_cavity[i] = 1;
      stack.push_back(i);
    }
  }
  if (stack.empty()) throw Error(ErrorCode::OutsideSimplex, "point is not inside the mesh");

  // Grow through neighbors whose circumsphere strictly contains p.
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < simplices_[i].vertices.size(); ++j) {
      const auto nb = neighbor(i, detail::facet_without(simplices_[i], j));
      if (nb && !in_cavity[*nb] && in_sphere[*nb]) {
        in_cavity[*nb] = 1;
        stack.push_back(*nb);
      }
    }
  }

  // The cavity must be star-shaped from p. Rounding near cospherical
  // configurations can violate that; absorb the offending neighbor and retry.
  struct NewFacet {
    detail::FacetKey facet;
  };
  std::vector<NewFacet> fresh;
  for (bool changed = true; changed;) {
    changed = false;
    fresh.clear();
    for (std::size_t i = 0; i < n_e && !changed; ++i) {
      if (!in_cavity[i]) continue;
      const auto& s = simplices_[i];
      for (std::size_t j = 0; j < s.vertices.size(); ++j) {
        auto f = detail::facet_without(s, j);
        const auto nb = neighbor(i, f);
        if (nb && in_cavity[*nb]) continue;

        std::vector<const ParamPoint*> q;
        for (auto v : f) q.push_back(&points_[v]);
        q.push_back(&points_[s.vertices[j]]);
        const double side_opposite = detail::signed_det(q);
        q.back() = &p;
        const double side_p = detail::signed_det(q);
        const bool flat = std::abs(side_p) <= 1e-12 * detail::edge_scale(q);
        if (!flat && (side_p > 0) == (side_opposite > 0)) {
          fresh.push_back({std::move(f)});
        } else if (flat && !nb) {
          // p sits on this hull facet; nothing to build on it.
        } else if (nb) {
          in_cavity[*nb] = 1;
          changed = true;
          break;
        } else {
          throw Error(ErrorCode::OutsideSimplex, "point lies beyond a hull facet");
        }
      }
    }
  }

  const std::size_t pid = points_.size();
  points_.push_back(p);
  std::vector<Simplex> kept;
  std::vector<detail::Circumsphere> kept_spheres;
  kept.reserve(n_e + fresh.size());
  for (std::size_t i = 0; i < n_e; ++i) {
    if (in_cavity[i]) continue;
    kept.push_back(std::move(simplices_[i]));
    kept_spheres.push_back(std::move(spheres_[i]));
  }
  simplices_ = std::move(kept);
  spheres_ = std::move(kept_spheres);
  for (auto& nf : fresh) {
    Simplex s{std::move(nf.facet)};
    s.vertices.push_back(pid);
    std::sort(s.vertices.begin(), s.vertices.end());
    add_simplex(std::move(s));
  }
  return pid;
}

inline SimplexMesh insert_point(SimplexMesh mesh, const ParamPoint& p) {
  mesh.insert(p);
  return mesh;
}

/// Corners of [0, 1]^d in the order of their binary index (first
/// coordinate is the most significant bit), followed by one interior point.
inline SimplexMesh initial_design(int dims, std::optional<ParamPoint> interior = std::nullopt) {
  if (dims < 1 || dims > kMaxMeshDims) {
    throw Error(ErrorCode::DimensionUnsupported,
                "parameter dimension " + std::to_string(dims) + " outside [1, 6]");
  }
  const std::size_t n_corners = std::size_t{1} << dims;
  std::vector<ParamPoint> corners;
  for (std::size_t c = 0; c < n_corners; ++c) {
    ParamPoint x(dims);
    for (int j = 0; j < dims; ++j) x(j) = static_cast<double>((c >> (dims - 1 - j)) & 1u);
    corners.push_back(x);
  }
  // Kuhn split of the cube: one simplex per axis ordering, walking from the
  // origin corner to the opposite one. All corners are cospherical, so any
  // split of the cube alone is Delaunay.
  std::vector<int> order(static_cast<std::size_t>(dims));
  std::iota(order.begin(), order.end(), 0);
  std::vector<Simplex> kuhn;
  do {
    Simplex s;
    std::size_t c = 0;
    s.vertices.push_back(c);
    for (int axis : order) {
      c |= std::size_t{1} << (dims - 1 - axis);
      s.vertices.push_back(c);
    }
    kuhn.push_back(std::move(s));
  } while (std::next_permutation(order.begin(), order.end()));

  auto mesh = SimplexMesh::from_triangulation(dims, std::move(corners), std::move(kuhn));
  mesh.insert(interior.value_or(ParamPoint::Constant(dims, 0.5)));
  return mesh;
}

/// Count of (simplex, point) pairs where the point lies strictly inside the
/// simplex's circumsphere, with relative slack `tol`. Zero means Delaunay.
inline std::size_t delaunay_violations(const SimplexMesh& mesh, double tol = 1e-9) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < mesh.simplices().size(); ++i) {
    const auto& s = mesh.simplices()[i];
    const auto& c = mesh.sphere(i);
    for (std::size_t k = 0; k < mesh.points().size(); ++k) {
      if (std::binary_search(s.vertices.begin(), s.vertices.end(), k)) continue;
      if ((mesh.point(k) - c.center).squaredNorm() < c.radius_sq * (1.0 - tol)) ++bad;
    }
  }
  return bad;
}

}  // namespace grassfield
