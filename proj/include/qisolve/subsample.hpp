#pragma once

#include <qisolve/estimators.hpp>
#include <qisolve/sampled_matrix.hpp>

#include <json.hpp>

#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace qisolve {

/// p rows drawn i.i.d. from P_i = ||A(i,.)||^2 / ||A||_F^2, with S(t,.) = A(i_t,.) * scale_t.
struct RowSketch {
  std::vector<Index> indices;
  std::vector<double> scales;   // 1 / sqrt(p P_{i_t})
  std::vector<double> norm_sq;  // ||A(i_t,.)||^2
  double frobenius_sq = 0.0;

  Index size() const noexcept { return indices.size(); }
};

RowSketch sample_rows(const ComplexSampledMatrix& a, Index p, Rng& rng);

/**
 * Output of the row/column sketch of A: the p sampled rows and their scales, the p
 * sampled columns and their scales, and the top-k singular pairs (sigma_hat, u_hat) of
 * the p x p matrix W. Together these define, without materializing anything of size n,
 *   V(., i) = S^dagger u_hat_i / sigma_hat_i,   D = diag(sigma_hat),
 * and hence the rank-k approximations V D^2 V^dagger of A^dagger A and V D^-2 V^dagger
 * of its pseudo-inverse.
 */
struct SuccinctDescription {
  static constexpr int kFormatVersion = 1;

  Index rows = 0;  // m
  Index cols = 0;  // n
  Index p = 0;
  Index k = 0;
  std::vector<Index> row_indices;
  std::vector<double> row_scales;
  std::vector<double> row_norm_sq;
  std::vector<Index> col_indices;
  std::vector<double> col_scales;  // 1 / sqrt(p P'_{j_t})
  double frobenius_sq = 0.0;
  RVector sigma_hat;  // k, non-increasing
  CMatrix u_hat;      // p x k, orthonormal columns
  std::uint64_t seed = 0;
  std::uint64_t digest = 0;

  double sigma_max() const { return sigma_hat(0); }
  double sigma_min() const { return sigma_hat(static_cast<Eigen::Index>(k) - 1); }
  double kappa_hat() const { return sigma_max() / sigma_min(); }
};

/// p = max(20 k, k * ceil(ln(m n))).
Index suggested_sketch_size(Index k, Index m, Index n);

/// The worst-case analysis' sample count 1e7 k^11 kappa^20 / (epsilon^4 ||A||_F^4); display only.
double worst_case_sketch_size(Index k, double kappa, double epsilon, double frobenius_sq);

/// Runs the sketch with independent row and column streams. Throws RankDeficientSketch when
/// sigma_hat_k <= max(p, k) * machine-epsilon * sigma_hat_1.
SuccinctDescription subsample(const ComplexSampledMatrix& a, Index k, Index p, Rng& row_rng,
                              Rng& col_rng);

/// Seeded form: rows and columns come from the "rows" and "cols" streams of `seed`.
SuccinctDescription subsample(const ComplexSampledMatrix& a, Index k, Index p, std::uint64_t seed);

/// All singular values of W for one seeded sketch; lets users pick k.
RVector sketch_spectrum(const ComplexSampledMatrix& a, Index p, std::uint64_t seed);

// Dense reconstructions of the implicit factors. Oracle side; O(p n) memory.
CMatrix dense_s(const SuccinctDescription& d, const CMatrix& a);
CMatrix dense_w(const SuccinctDescription& d, const CMatrix& a);
CMatrix dense_v(const SuccinctDescription& d, const CMatrix& a);

struct SketchReport {
  double gram_error = 0.0;          // ||A^dag A - S^dag S||_F
  double sketch_gram_error = 0.0;   // ||S S^dag - W W^dag||_F
  double approx_error = 0.0;        // ||A^dag A - V D^2 V^dag||_F
  double inverse_error = 0.0;       // ||(A^dag A)^+ - V D^-2 V^dag||_F
  double isometry_defect = 0.0;     // ||V^dag V - I||_F
  double sigma_k_w = 0.0;           // k-th singular value of W
  double sigma_1_w = 0.0;
  double s_over_a = 0.0;            // ||S||_F / ||A||_F
  double w_over_s = 0.0;            // ||W||_F / ||S||_F
  double frobenius = 0.0;           // ||A||_F
  double spectral = 0.0;            // ||A||
  double svd_residual = 0.0;        // ||W - sum_i sigma_i u_i v_i^dag||_F / ||W||_F for the top k
};

/// Full dense property panel for one description. Throws DimensionTooLarge above the oracle cap.
SketchReport verify_sketch(const SuccinctDescription& d, const CMatrix& a);

/// ||V^dagger V - I||_F alone, in O(p^2 n).
double isometry_defect(const SuccinctDescription& d, const CMatrix& a);

nlohmann::json to_json(const SuccinctDescription& d);
SuccinctDescription description_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SketchReport& r);

// ---------------------------------------------------------------------------
// Implicit access to V
// ---------------------------------------------------------------------------

/// One row of V together with the per-column proposal weights the rejection samplers need.
struct FactorRow {
  CVector values;       // V(l, i), i < k
  RVector weighted_sq;  // sum_t |conj(S(t, l)) u_hat_i(t)|^2 / sigma_hat_i^2
};

/**
 * Entry and row access to V = S^dagger U_hat D^-1 through counted entry queries of A.
 * A row costs p entry queries; with `memo` rows are cached after the first fetch, so the
 * ledger then counts distinct rows only. Thread-safe.
 */
class FactorView {
 public:
  FactorView(const ComplexSampledMatrix& a, const SuccinctDescription& d, bool memo = true);

  Index rows() const noexcept { return n_; }
  Index rank() const noexcept { return k_; }
  Index sketch_size() const noexcept { return p_; }
  bool memo() const noexcept { return memo_; }
  std::size_t cached_rows() const;

  FactorRow row(Index l) const;

  /// Calls f(const FactorRow&) on row l without copying it out of the cache.
  template <typename F>
  decltype(auto) visit_row(Index l, F&& f) const {
    detail::check_index(l, n_, "row of V");
    if (!memo_) return f(static_cast<const FactorRow&>(fetch(l)));
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(l);
      if (it != cache_.end()) return f(static_cast<const FactorRow&>(it->second));
    }
    FactorRow fresh = fetch(l);
    std::lock_guard lock(mutex_);
    return f(static_cast<const FactorRow&>(cache_.emplace(l, std::move(fresh)).first->second));
  }

  Complex entry(Index l, Index i) const {
    return visit_row(l, [i](const FactorRow& r) { return r.values(static_cast<Eigen::Index>(i)); });
  }

  /// Proposal for column i: t with probability |u_hat_i(t)|^2, then a column of A drawn from row i_t.
  Index propose(Index i, Rng& rng) const;

  /// ||A||_F^2 / sigma_hat_i^2; expected rejection trials for column i divided by ||V(., i)||^2.
  double proposal_scale(Index i) const { return frob_sq_ / (sigma_(static_cast<Eigen::Index>(i)) * sigma_(static_cast<Eigen::Index>(i))); }

  const ComplexSampledMatrix& matrix() const noexcept { return *a_; }

 private:
  FactorRow fetch(Index l) const;

  const ComplexSampledMatrix* a_;
  Index n_, k_, p_;
  std::vector<Index> sampled_rows_;
  CMatrix coef_;  // coef(t, i) = u_hat_i(t) * row_scale_t / sigma_hat_i
  RVector sigma_;
  double frob_sq_;
  std::vector<std::vector<double>> proposals_;  // cumulative |u_hat_i(t)|^2 per column
  bool memo_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<Index, FactorRow> cache_;
};

/// How VColumnAccess reports ||V(., i)||^2.
enum class NormMode {
  Sampled,  // (||A||_F^2 / sigma_hat_i^2) * mean acceptance probability over every proposal so far
  Unit,     // 1, the value the sketch itself gives (u_hat^dag W W^dag u_hat / sigma_hat^2)
};

/**
 * Sampling access to column i of V. Samples are exact draws from D_{V(., i)} by rejection
 * from S^dagger with coefficients u_hat_i / sigma_hat_i. The norm estimate starts from a
 * pilot batch of proposals and keeps refining with every later proposal. Not thread-safe.
 */
class VColumnAccess final : public VectorAccess {
 public:
  VColumnAccess(const FactorView& f, Index i, Rng& pilot_rng, std::size_t pilot = 4096,
                NormMode mode = NormMode::Sampled, std::uint64_t cap = 0);

  Index size() const override { return f_->rows(); }
  Complex query(Index l) const override { return f_->entry(l, column_); }
  Index sample(Rng& rng) const override;
  double norm_sq() const override;

  const RejectionStats& stats() const noexcept { return stats_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  const FactorView* f_;
  Index column_;
  NormMode mode_;
  std::uint64_t cap_;
  mutable RejectionStats stats_;
};

}  // namespace qisolve
