#pragma once

#include <qisolve/types.hpp>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace qisolve {

template <typename Scalar>
struct ThinSvd {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  RVector values;  // the numerically nonzero singular values, non-increasing
  Matrix u;        // rows x r
  Matrix v;        // cols x r
  Index rank() const noexcept { return static_cast<Index>(values.size()); }
};

/**
 * Thin SVD restricted to the numerical rank. A column-pivoted QR first splits off the
 * numerically zero part (pivots at or below `threshold` times the largest), then the
 * r x n factor is decomposed. Exactly rank-deficient inputs with many zero singular
 * values are where divide-and-conquer SVD alone is fragile; after the split the
 * remaining factor has none.
 */
template <typename Derived>
ThinSvd<typename Derived::Scalar> thin_svd(const Eigen::MatrixBase<Derived>& a, double threshold = -1.0) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  ThinSvd<Scalar> out;
  const Eigen::Index rows = a.rows(), cols = a.cols();
  if (threshold < 0.0) {
    threshold = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(threshold);
  const Eigen::Index r = qr.rank();
  out.u.resize(rows, r);
  out.v.resize(cols, r);
  if (r == 0) return out;
  const Matrix q = qr.householderQ() * Matrix::Identity(rows, r);
  const Matrix upper = qr.matrixR().topRows(r).template triangularView<Eigen::Upper>();
  const Matrix top = upper * qr.colsPermutation().transpose();
  const auto opts = Eigen::ComputeThinU | Eigen::ComputeThinV;
  if (r <= 64) {
    Eigen::JacobiSVD<Matrix> svd(top, opts);
    out.values = svd.singularValues();
    out.u = q * svd.matrixU();
    out.v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> svd(top, opts);
    out.values = svd.singularValues();
    out.u = q * svd.matrixU();
    out.v = svd.matrixV();
  }
  return out;
}

}  // namespace qisolve
