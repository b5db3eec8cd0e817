#pragma once

#include <qisolve/sampled_matrix.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace qisolve {

// ---------------------------------------------------------------------------
// Access contracts
// ---------------------------------------------------------------------------

/// Query-only access to a vector.
class QueryAccess {
 public:
  virtual ~QueryAccess() = default;
  virtual Index size() const = 0;
  virtual Complex query(Index i) const = 0;
};

/// Query access plus exact sampling from D_x and knowledge of ||x||^2.
class VectorAccess : public QueryAccess {
 public:
  virtual Index sample(Rng& rng) const = 0;
  virtual double norm_sq() const = 0;
};

/// Entry access to a matrix with known Frobenius norm.
class EntryAccess {
 public:
  virtual ~EntryAccess() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual Complex entry(Index i, Index j) const = 0;
  virtual double frobenius_sq() const = 0;
};

/// Counted access over a SampledVector (every call goes through its ledger).
class SampledVectorAccess final : public VectorAccess {
 public:
  explicit SampledVectorAccess(const ComplexSampledVector& v) : v_(&v) {}
  Index size() const override { return v_->size(); }
  Complex query(Index i) const override { return v_->read(i); }
  Index sample(Rng& rng) const override { return v_->sample(rng); }
  double norm_sq() const override { return v_->norm_sq(); }

 private:
  const ComplexSampledVector* v_;
};

/// Dense in-memory vector with exact D_x sampling. Test and oracle helper.
class DenseVectorAccess final : public VectorAccess {
 public:
  explicit DenseVectorAccess(CVector v);
  Index size() const override { return static_cast<Index>(v_.size()); }
  Complex query(Index i) const override;
  Index sample(Rng& rng) const override;
  double norm_sq() const override { return norm_sq_; }

 private:
  CVector v_;
  double norm_sq_;
  mutable std::discrete_distribution<Index> dist_;
};

/// A's entries through a SampledMatrix (counted).
class MatrixEntries final : public EntryAccess {
 public:
  explicit MatrixEntries(const ComplexSampledMatrix& a) : a_(&a) {}
  Index rows() const override { return a_->rows(); }
  Index cols() const override { return a_->cols(); }
  Complex entry(Index i, Index j) const override { return a_->entry(i, j); }
  double frobenius_sq() const override { return a_->frobenius_sq(); }

 private:
  const ComplexSampledMatrix* a_;
};

/// A-dagger's entries through a SampledMatrix holding A: entry(i, j) = conj(A(j, i)).
class AdjointEntries final : public EntryAccess {
 public:
  explicit AdjointEntries(const ComplexSampledMatrix& a) : a_(&a) {}
  Index rows() const override { return a_->cols(); }
  Index cols() const override { return a_->rows(); }
  Complex entry(Index i, Index j) const override { return std::conj(a_->entry(j, i)); }
  double frobenius_sq() const override { return a_->frobenius_sq(); }

 private:
  const ComplexSampledMatrix* a_;
};

// ---------------------------------------------------------------------------
// Median-of-means estimators
// ---------------------------------------------------------------------------

struct EstimatorParams {
  double epsilon = 0.1;
  double delta = 0.1;
  std::size_t groups = 1;      // number of group means whose median is returned
  std::size_t group_size = 1;  // samples per group

  std::size_t total_samples() const noexcept { return groups * group_size; }

  /// ceil(8 ln(1/delta)).
  static std::size_t groups_for(double delta);

  /// Inner-product estimator: additive error epsilon*||x||*||y||, q = ceil(4 / epsilon^2).
  static EstimatorParams inner(double epsilon, double delta);

  /// Bilinear estimator: additive error epsilon, q = ceil(4 ||x||^2 ||y||^2 ||A||_F^2 / epsilon^2).
  static EstimatorParams bilinear(double epsilon, double delta, double x_norm_sq, double y_norm_sq,
                                  double frobenius_sq);

  void validate() const;
};

struct Estimate {
  Complex value{0.0, 0.0};
  std::size_t draws = 0;       // accepted samples of Z
  std::size_t guard_hits = 0;  // draws discarded because a sampled entry was exactly zero
};

/// Median taken separately over real and imaginary parts.
Complex componentwise_median(std::span<const Complex> values);

/**
 * Estimates <x, y> = sum_i conj(x(i)) y(i) from samples i ~ D_x with
 * Z = ||x||^2 y(i) / x(i); returns the median of `groups` means of `group_size` Z's.
 * Group g draws from its own child stream of one seed taken from `rng`, so the
 * result does not depend on the order groups are evaluated in.
 */
Estimate estimate_inner(const VectorAccess& x, const QueryAccess& y, const EstimatorParams& params,
                        Rng& rng);

/**
 * Estimates x^dagger A y from i ~ D_x, j ~ D_y and
 * Z = ||x||^2 ||y||^2 A(i, j) / (x(i) conj(y(j))), with E[Z] = x^dagger A y.
 * Throws NonfiniteSample if a Z overflows.
 */
Estimate estimate_bilinear(const VectorAccess& x, const EntryAccess& a, const VectorAccess& y,
                           const EstimatorParams& params, Rng& rng);

// ---------------------------------------------------------------------------
// Rejection sampling from D_{Mv} for a thin M
// ---------------------------------------------------------------------------

/// Column-wise sampling access to an n x k matrix.
class ThinMatrixAccess {
 public:
  virtual ~ThinMatrixAccess() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual double column_norm_sq(Index j) const = 0;
  virtual Index sample_in_column(Index j, Rng& rng) const = 0;
  virtual Complex entry(Index i, Index j) const = 0;
};

/// Dense thin matrix with exact per-column sampling. Test helper.
class DenseThinMatrix final : public ThinMatrixAccess {
 public:
  explicit DenseThinMatrix(CMatrix m);
  Index rows() const override { return static_cast<Index>(m_.rows()); }
  Index cols() const override { return static_cast<Index>(m_.cols()); }
  double column_norm_sq(Index j) const override;
  Index sample_in_column(Index j, Rng& rng) const override;
  Complex entry(Index i, Index j) const override;
  const CMatrix& matrix() const noexcept { return m_; }

 private:
  CMatrix m_;
  mutable std::vector<std::discrete_distribution<Index>> columns_;
};

struct RejectionStats {
  std::uint64_t trials = 0;
  std::uint64_t accepted = 0;
  double acceptance_sum = 0.0;  // sum of acceptance probabilities over all proposals

  double acceptance_rate() const noexcept {
    return trials ? static_cast<double>(accepted) / static_cast<double>(trials) : 0.0;
  }
};

struct RejectionOptions {
  std::uint64_t cap = 0;     // 0: derive as 100 * k * max(1, c_estimate)
  double c_estimate = 1.0;   // caller's estimate of C(M, v)
};

namespace detail {

struct RowTerms {
  Complex value;       // (Mv)(i)
  double weighted_sq;  // sum_j |v(j) M(i, j)|^2
};

std::uint64_t rejection_cap(Index k, const RejectionOptions& opts);

/**
 * Rejection loop shared by every D_{Mv} sampler: `propose` draws i from
 * sum_j |v_j|^2 |M(i,j)|^2 / sum_j |v_j|^2 ||M(., j)||^2 and `terms` evaluates row i;
 * the proposal is accepted with probability |(Mv)(i)|^2 / (k * sum_j |v_j M(i,j)|^2).
 */
template <typename Propose, typename Terms>
Index rejection_sample(Propose&& propose, Terms&& terms, double k, std::uint64_t cap, Rng& rng,
                       RejectionStats* stats) {
  for (std::uint64_t trial = 0; trial < cap; ++trial) {
    const Index i = propose(rng);
    const RowTerms t = terms(i);
    double accept = t.weighted_sq > 0.0 ? std::norm(t.value) / (k * t.weighted_sq) : 0.0;
    if (accept > 1.0) accept = 1.0;  // rounding only; Cauchy-Schwarz bounds it by 1
    const bool ok = uniform01(rng) < accept;
    if (stats) {
      ++stats->trials;
      stats->acceptance_sum += accept;
      if (ok) ++stats->accepted;
    }
    if (ok) return i;
  }
  throw Error(ErrorKind::IterationCapExceeded,
              "rejection sampler exceeded " + std::to_string(cap) + " trials");
}

}  // namespace detail

/// Prepared sampler for D_{Mv}; reuse it when drawing many samples from one (M, v).
class ThinProductSampler {
 public:
  ThinProductSampler(const ThinMatrixAccess& m, std::span<const Complex> v, RejectionOptions opts = {});

  Index sample(Rng& rng, RejectionStats* stats = nullptr) const;

  /// C(M, v) numerator: sum_j |v_j|^2 ||M(., j)||^2.
  double proposal_mass() const noexcept { return mass_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  const ThinMatrixAccess* m_;
  std::vector<Complex> v_;
  double mass_ = 0.0;
  std::uint64_t cap_ = 0;
  mutable std::discrete_distribution<Index> column_;
};

/// One sample from D_{Mv} by rejection sampling; expected trials k * C(M, v).
Index sample_thin_product(const ThinMatrixAccess& m, std::span<const Complex> v, Rng& rng,
                          RejectionOptions opts = {}, RejectionStats* stats = nullptr);

/// Cap for M within Frobenius distance alpha < 1 of an isometry:
/// C(M, v) <= (1 + alpha)^2 / (1 - alpha)^2.
std::uint64_t isometry_rejection_cap(Index k, double alpha);

/// sample_thin_product with its iteration cap derived from the distortion bound alpha.
Index sample_thin_product_isometry(const ThinMatrixAccess& m, std::span<const Complex> v, Rng& rng,
                                   double alpha, RejectionStats* stats = nullptr);

/// Exact ||D_x - D_y||_TV; the inequality TV <= 2||x - y|| / ||x|| is a test property.
double tv_distance_bound_check(const CVector& x, const CVector& y);

}  // namespace qisolve
