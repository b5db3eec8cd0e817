#pragma once

// Dense O(n^3) reference computations used as ground truth by tests, the acceptance
// suite and the CLI `exact` subcommand. Not part of any sublinear code path.

#include <qisolve/linalg.hpp>
#include <qisolve/types.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace qisolve::oracle {

inline constexpr Index kMaxDenseDim = 5000;

inline void require_dense_size(Index rows, Index cols, Index cap = kMaxDenseDim) {
  if (rows > cap || cols > cap) {
    throw Error(ErrorKind::DimensionTooLarge, "dense oracle capped at " + std::to_string(cap) +
                                                  ", got " + std::to_string(rows) + "x" +
                                                  std::to_string(cols));
  }
}

template <typename Derived>
using PlainMatrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Derived>
using PlainVector = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;

/// Singular values at or below sigma_1 * max(m, n) * machine-epsilon count as zero.
inline double singular_cutoff(double sigma_max, Index rows, Index cols) {
  return sigma_max * static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon();
}

namespace detail {

template <typename Derived>
ThinSvd<typename Derived::Scalar> nonzero_svd(const Eigen::MatrixBase<Derived>& a) {
  auto svd = thin_svd(a);
  if (svd.rank() == 0) return svd;
  const double cut = singular_cutoff(svd.values(0), static_cast<Index>(a.rows()), static_cast<Index>(a.cols()));
  Eigen::Index r = 0;
  while (r < svd.values.size() && svd.values(r) > cut) ++r;
  svd.values.conservativeResize(r);
  svd.u.conservativeResize(Eigen::NoChange, r);
  svd.v.conservativeResize(Eigen::NoChange, r);
  return svd;
}

}  // namespace detail

/// Moore-Penrose pseudo-inverse sum_i sigma_i^{-1} v_i u_i^dagger over nonzero singular triples.
template <typename Derived>
PlainMatrix<Derived> pseudo_inverse(const Eigen::MatrixBase<Derived>& a) {
  require_dense_size(static_cast<Index>(a.rows()), static_cast<Index>(a.cols()));
  const auto svd = detail::nonzero_svd(a);
  return svd.v * svd.values.cwiseInverse().asDiagonal() * svd.u.adjoint();
}

/// A^{-1} b with A^{-1} the Moore-Penrose pseudo-inverse; zero matrix gives zero.
template <typename DerivedA, typename DerivedB>
PlainVector<DerivedA> pinv_solve(const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.size()) throw Error(ErrorKind::Config, "pinv_solve: dimension mismatch");
  require_dense_size(static_cast<Index>(a.rows()), static_cast<Index>(a.cols()));
  const auto svd = detail::nonzero_svd(a);
  return svd.v * (svd.values.cwiseInverse().asDiagonal() * (svd.u.adjoint() * b));
}

/// Singular values above the pseudo-inverse cutoff.
template <typename Derived>
RVector nonzero_singular_values(const Eigen::MatrixBase<Derived>& a) {
  return detail::nonzero_svd(a).values;
}

/// D_x(i) = |x(i)|^2 / ||x||^2.
template <typename Derived>
RVector exact_distribution(const Eigen::MatrixBase<Derived>& x) {
  RVector p = x.cwiseAbs2().template cast<double>();
  const double total = p.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::ZeroNormSample, "distribution of a zero vector");
  return p / total;
}

/// Half the l1 distance between two probability vectors.
inline double exact_tv(const RVector& p, const RVector& q) {
  if (p.size() != q.size()) throw Error(ErrorKind::Config, "exact_tv: length mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

/// TV distance between an empirical histogram (counts) and a probability vector.
inline double empirical_tv(std::span<const std::uint64_t> counts, const RVector& p) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  double tv = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    tv += std::abs(static_cast<double>(counts[static_cast<std::size_t>(i)]) / total - p(i));
  }
  return 0.5 * tv;
}

/// Eigenvalues of a Hermitian matrix; throws NotPSD if it is not Hermitian PSD within tolerance.
template <typename Derived>
RVector psd_eigenvalues(const Eigen::MatrixBase<Derived>& x, double rel_tol = 1e-10) {
  using M = PlainMatrix<Derived>;
  if (x.rows() != x.cols()) throw Error(ErrorKind::NotPSD, "matrix is not square");
  const double scale = std::max(1.0, static_cast<double>(x.norm()));
  if ((x - x.adjoint()).norm() > rel_tol * scale) throw Error(ErrorKind::NotPSD, "matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<M> es(M(x), Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();
  const double top = ev.size() ? std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))) : 0.0;
  if (ev.size() && ev(0) < -rel_tol * std::max(top, 1e-300)) {
    throw Error(ErrorKind::NotPSD, "matrix has a negative eigenvalue " + std::to_string(ev(0)));
  }
  return ev;
}

namespace detail {

inline double rank_cutoff(const RVector& ev, Index dim) {
  const double top = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  return top * static_cast<double>(dim) * std::numeric_limits<double>::epsilon() * 10.0;
}

}  // namespace detail

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// ||X - Y||_F <= (2k)^{1/4} ||X^2 - Y^2||_F^{1/2} for PSD X, Y of max rank k.
template <typename DX, typename DY>
BoundCheck sqrt_bound(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  const RVector ex = psd_eigenvalues(x);
  const RVector ey = psd_eigenvalues(y);
  const Index dim = static_cast<Index>(x.rows());
  const auto rank = [&](const RVector& ev) {
    const double cut = detail::rank_cutoff(ev, dim);
    return static_cast<double>((ev.array() > cut).count());
  };
  const double k = std::max(rank(ex), rank(ey));
  BoundCheck out;
  out.lhs = (x - y).norm();
  out.rhs = std::pow(2.0 * k, 0.25) * std::sqrt((x * x - y * y).norm());
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-10) + 1e-12;
  return out;
}

template <typename DX, typename DY>
bool check_sqrt_bound(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  return sqrt_bound(x, y).holds;
}

/// ||X^+ - Y^+||_F <= 3 ||X - Y||_F / sigma_min^2 with sigma_min the smaller of the two
/// minimum nonzero eigenvalues.
template <typename DX, typename DY>
BoundCheck inverse_bound(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  const RVector ex = psd_eigenvalues(x);
  const RVector ey = psd_eigenvalues(y);
  const Index dim = static_cast<Index>(x.rows());
  const auto min_nonzero = [&](const RVector& ev) {
    const double cut = detail::rank_cutoff(ev, dim);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) > cut) best = std::min(best, ev(i));
    }
    return best;
  };
  const double smin = std::min(min_nonzero(ex), min_nonzero(ey));
  BoundCheck out;
  out.lhs = (pseudo_inverse(x) - pseudo_inverse(y)).norm();
  out.rhs = std::isfinite(smin) ? 3.0 * (x - y).norm() / (smin * smin) : 0.0;
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-8) + 1e-9;
  return out;
}

template <typename DX, typename DY>
bool check_inverse_bound(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  return inverse_bound(x, y).holds;
}

}  // namespace qisolve::oracle
