#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace grassfield {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Thin SVD A = U diag(s) V^T with singular values nonincreasing.
struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

// Flip each singular pair so the largest-magnitude entry of the left vector
// is nonnegative. Ties resolve to the lowest row index.
inline void apply_sign_convention(ThinSvd& f) {
  for (Eigen::Index k = 0; k < f.u.cols(); ++k) {
    Eigen::Index arg = 0;
    f.u.col(k).cwiseAbs().maxCoeff(&arg);
    if (f.u(arg, k) < 0.0) {
      f.u.col(k) *= -1.0;
      f.v.col(k) *= -1.0;
    }
  }
}

inline ThinSvd thin_svd(const Matrix& a) {
  ThinSvd f;
  if (a.rows() <= 16 && a.cols() <= 16) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.u = svd.matrixU();
    f.s = svd.singularValues();
    f.v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.u = svd.matrixU();
    f.s = svd.singularValues();
    f.v = svd.matrixV();
  }
  apply_sign_convention(f);
  return f;
}

inline Vector singular_values(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return Vector();
  return Eigen::JacobiSVD<Matrix>(a).singularValues();
}

inline double orthonormality_defect(const Matrix& basis) {
  const auto r = basis.cols();
  return (basis.transpose() * basis - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
}

/// Nearest matrix with orthonormal columns (polar factor). Keeps the
/// representative when the input is already close to orthonormal.
inline Matrix polar_orthonormalize(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

}  // namespace linalg
}  // namespace grassfield
