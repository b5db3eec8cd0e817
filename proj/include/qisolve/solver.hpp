#pragma once

#include <qisolve/subsample.hpp>

#include <json.hpp>

#include <memory>
#include <vector>

namespace qisolve {

struct SolverConfig {
  Index k = 1;
  Index p = 0;             // 0: suggested_sketch_size(k, m, n)
  double epsilon = 0.1;    // additive target on entries of the solution
  double delta = 0.1;
  std::size_t groups = 0;       // 0: ceil(8 ln((k + 1) / delta))
  std::size_t group_size = 0;   // 0: from the a-priori variance bound
  std::size_t max_samples = 0;  // per-estimate cap on groups * group_size; 0: none
  std::uint64_t rejection_cap = 0;  // 0: derived per sampler
  double isometry_alpha = 0.5;      // assumed ||V - U||_F bound for the solution sampler's cap
  double tau_b = 0.1;
  std::uint64_t seed = 0;
  bool memo = true;
  std::size_t norm_pilot = 4096;
  NormMode norm_mode = NormMode::Sampled;

  void validate() const;
};

struct PhaseTimes {
  double sketch = 0.0;
  double estimate = 0.0;
};

struct SolveState {
  SuccinctDescription description;
  CVector w;                  // w(i) ~ V(., i)^dag A^dag b   (or V(., i)^dag b for the PSD variant)
  CVector w_prime;            // D^-exponent w
  RVector column_norm_sq;     // estimates of ||V(., i)||^2 used by the estimators
  int exponent = 2;           // 2: general systems, 1: PSD variant
  double component_target = 0.0;  // additive target used for each w(i)
  std::vector<EstimatorParams> params;
  bool clamped = false;       // some estimate ran with fewer samples than its bound asks for
  std::size_t guard_hits = 0;
  LedgerCounts ledger;        // accesses to A and b issued during prepare
  PhaseTimes times;
  SolverConfig config;

  /// ||w'|| at or below this means there is nothing to sample.
  double zero_threshold() const;
};

/**
 * A prepared solve: the state plus the implicit V it refers to. Entry queries and samples
 * of the approximate solution V w' go through the same FactorView, so its row cache (when
 * enabled) is shared between them. Concurrent query / sample calls are safe.
 */
class Solution {
 public:
  Solution(std::shared_ptr<const SolveState> state, std::shared_ptr<const FactorView> view);

  const SolveState& state() const noexcept { return *state_; }
  const FactorView& factors() const noexcept { return *view_; }
  const ComplexSampledMatrix& matrix() const noexcept { return view_->matrix(); }
  Index size() const noexcept { return view_->rows(); }

  /// V(j, .) w'.
  Complex query(Index j) const;

  /// One index from D_{V w'} by rejection over the columns of V.
  /// Throws ZeroSolution when ||w'|| <= zero_threshold().
  Index sample(Rng& rng, RejectionStats* stats = nullptr) const;

 private:
  Index sample_column(Index i, Rng& rng) const;

  std::shared_ptr<const SolveState> state_;
  std::shared_ptr<const FactorView> view_;
  std::vector<double> column_weights_;  // |w'(i)|^2 ||V(., i)||^2
  std::vector<std::uint64_t> column_caps_;
  std::uint64_t cap_ = 0;
};

/// Sketch A, then estimate w(i) = V(., i)^dag A^dag b for every i and set w' = D^-2 w.
Solution prepare(const ComplexSampledMatrix& a, const ComplexSampledVector& b, const SolverConfig& cfg);

Complex query_entry(const Solution& s, Index j);
Index sample_solution(const Solution& s, Rng& rng, RejectionStats* stats = nullptr);

/// b^dag A V D^-2 V^dag A^dag b = sum_i |V(., i)^dag A^dag b|^2 / sigma_hat_i^2, with fresh
/// estimates of each term made with `params`. Real part only.
double overlap_estimate(const Solution& s, const ComplexSampledVector& b, const EstimatorParams& params,
                        Rng& rng);

/// PSD variant: b is query-only. w(i) = V(., i)^dag b by the inner-product estimator and
/// w' = D^-1 w. Here epsilon is relative to ||b||, which the solver cannot see. With
/// `verify`, A is checked to be Hermitian PSD when it fits the dense oracle.
Solution solve_psd(const ComplexSampledMatrix& a, const QueryAccess& b, const SolverConfig& cfg,
                   bool verify = true);

/// Per-estimate budget actually used for one bilinear / inner estimate.
EstimatorParams budget_params(const SolverConfig& cfg, EstimatorParams derived, bool* clamped);

nlohmann::json report_json(const Solution& s);
nlohmann::json to_json(const SolverConfig& cfg);
nlohmann::json to_json(const LedgerCounts& c);

}  // namespace qisolve
