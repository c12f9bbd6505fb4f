#pragma once

#include "grassfield/errors.hpp"
#include "grassfield/mesh.hpp"
#include "grassfield/snapshot.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace grassfield {

/// Anything that maps a point of [0, 1]^d to a full-field snapshot.
/// Implementations must be safe to call from several threads at once.
class Model {
 public:
  virtual ~Model() = default;
  virtual int dims() const = 0;
  virtual FieldSnapshot evaluate(const ParamPoint& xi) const = 0;
};

/// Raised for any failure inside a model evaluation; carries the point.
class ModelError : public Error {
 public:
  ModelError(ParamPoint xi, const std::string& what)
      : Error(ErrorCode::ModelFailure, what + " at xi = " + format(xi)), xi_(std::move(xi)) {}

  const ParamPoint& xi() const noexcept { return xi_; }

  static std::string format(const ParamPoint& xi) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(xi(i));
    }
    return s + ")";
  }

 private:
  ParamPoint xi_;
};

/// Low-rank analytic field family
///
///   F(xi)_ab = sum_q c_q(xi) sin(pi w_q(xi) (a + 1/2) / n_f) sin(pi w_q(xi) (b + 1/2) / m_f)
///
/// with c_q = amplitude (1 + amplitude_slope * mean(xi)) / q and mode
/// frequencies w_q = q + drift * mean(xi) + jump * sigmoid((xi_2 - g(xi_1)) / width),
/// g(x) = curve_intercept + curve_slope * x. Integer frequencies give
/// mutually orthogonal modes; a fractional shift rotates the left and right
/// subspaces continuously. `jump` = 0 gives the smooth family; a nonzero
/// jump adds a sharp subspace change across the curve xi_2 = g(xi_1).
struct SyntheticParams {
  Eigen::Index n_f = 40;
  Eigen::Index m_f = 30;
  int modes = 3;
  double amplitude = 1.0;
  double amplitude_slope = 0.0;
  double drift = 0.0;
  double jump = 0.0;
  double width = 0.02;
  double curve_intercept = 0.4;
  double curve_slope = 0.2;
  double band_half_width = 0.1;

  static SyntheticParams smooth_defaults() {
    SyntheticParams p;
    p.amplitude_slope = 0.5;
    p.drift = 0.5;
    return p;
  }

  static SyntheticParams transition_defaults() {
    SyntheticParams p;
    p.amplitude_slope = 0.5;
    p.drift = 4.0;
    p.jump = 0.5;
    return p;
  }

  void validate() const {
    if (n_f < 1 || m_f < 1) throw Error(ErrorCode::ConfigError, "field shape must be positive");
    if (modes < 1 || modes > std::min(n_f, m_f)) {
      throw Error(ErrorCode::ConfigError, "modes must lie in [1, min(n_f, m_f)]");
    }
    if (!(amplitude > 0.0)) throw Error(ErrorCode::ConfigError, "amplitude must be positive");
    if (amplitude_slope <= -1.0) throw Error(ErrorCode::ConfigError, "amplitude_slope must exceed -1");
    if (!(width > 0.0)) throw Error(ErrorCode::ConfigError, "width must be positive");
    if (!(band_half_width > 0.0)) throw Error(ErrorCode::ConfigError, "band_half_width must be positive");
  }
};

class SyntheticModel final : public Model {
 public:
  SyntheticModel(int dims, SyntheticParams params) : dims_(dims), p_(params) {
    if (dims < 1 || dims > kMaxMeshDims) {
      throw Error(ErrorCode::DimensionUnsupported, "model dimension must lie in [1, 6]");
    }
    if (p_.jump != 0.0 && dims < 2) {
      throw Error(ErrorCode::ConfigError, "a transition curve needs at least two parameters");
    }
    p_.validate();
  }

  int dims() const override { return dims_; }
  const SyntheticParams& params() const noexcept { return p_; }

  double curve(double x1) const { return p_.curve_intercept + p_.curve_slope * x1; }

  /// Signed offset of xi from the transition curve along xi_2.
  double offset(const ParamPoint& xi) const { return xi(1) - curve(xi(0)); }

  /// Membership in the band |xi_2 - g(xi_1)| < band_half_width.
  bool in_transition_band(const ParamPoint& xi) const {
    return dims_ >= 2 && std::abs(offset(xi)) < p_.band_half_width;
  }

  std::vector<double> frequencies(const ParamPoint& xi) const {
    const double mean = xi.mean();
    double shift = p_.drift * mean;
    if (p_.jump != 0.0) shift += p_.jump / (1.0 + std::exp(-offset(xi) / p_.width));
    std::vector<double> w(static_cast<std::size_t>(p_.modes));
    for (int q = 0; q < p_.modes; ++q) w[static_cast<std::size_t>(q)] = q + 1 + shift;
    return w;
  }

  std::vector<double> coefficients(const ParamPoint& xi) const {
    const double scale = p_.amplitude * (1.0 + p_.amplitude_slope * xi.mean());
    std::vector<double> c(static_cast<std::size_t>(p_.modes));
    for (int q = 0; q < p_.modes; ++q) c[static_cast<std::size_t>(q)] = scale / (q + 1);
    return c;
  }

  /// Upper bound on ||F(xi)||_F over the unit cube.
  double field_bound() const {
    double s = 0.0;
    for (int q = 0; q < p_.modes; ++q) s += 1.0 / (q + 1);
    return p_.amplitude * (1.0 + std::max(0.0, p_.amplitude_slope)) * s *
           std::sqrt(static_cast<double>(p_.n_f * p_.m_f));
  }

  FieldSnapshot evaluate(const ParamPoint& xi) const override {
    if (xi.size() != dims_) throw ModelError(xi, "wrong parameter dimension");
    const auto w = frequencies(xi);
    const auto c = coefficients(xi);
    Matrix f = Matrix::Zero(p_.n_f, p_.m_f);
    Vector x(p_.n_f), y(p_.m_f);
    for (std::size_t q = 0; q < w.size(); ++q) {
      for (Eigen::Index a = 0; a < p_.n_f; ++a)
        x(a) = std::sin(std::numbers::pi * w[q] * (static_cast<double>(a) + 0.5) / p_.n_f);
      for (Eigen::Index b = 0; b < p_.m_f; ++b)
        y(b) = std::sin(std::numbers::pi * w[q] * (static_cast<double>(b) + 0.5) / p_.m_f);
      f.noalias() += c[q] * x * y.transpose();
    }
    return {std::move(f), xi};
  }

 private:
  int dims_;
  SyntheticParams p_;
};

/// Per-dimension affine map from the unit cube to physical parameters.
struct ParamMap {
  Vector lo;
  Vector hi;

  ParamMap(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw Error(ErrorCode::ConfigError, "lo/hi length mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(hi(i) > lo(i))) throw Error(ErrorCode::ConfigError, "need hi > lo in every dimension");
  }
};

inline Vector map_params(const ParamMap& map, const ParamPoint& xi) {
  if (xi.size() != map.lo.size()) throw Error(ErrorCode::DomainError, "dimension mismatch");
  return map.lo + (map.hi - map.lo).cwiseProduct(xi);
}

}  // namespace grassfield
