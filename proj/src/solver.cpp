#include <qisolve/oracle.hpp>
#include <qisolve/solver.hpp>

#include <chrono>
#include <cmath>

namespace qisolve {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::json complex_array(const CVector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

nlohmann::json real_array(const RVector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

struct Prepared {
  std::shared_ptr<SolveState> state;
  std::shared_ptr<FactorView> view;
  RandomStreams streams{0};
  double delta_each = 0.0;
};

Prepared sketch(const ComplexSampledMatrix& a, const SolverConfig& cfg) {
  cfg.validate();
  const Index p = cfg.p ? cfg.p : suggested_sketch_size(cfg.k, a.rows(), a.cols());
  Prepared out;
  out.streams = RandomStreams(cfg.seed);
  out.state = std::make_shared<SolveState>();
  out.state->config = cfg;
  out.state->config.p = p;
  const auto t0 = Clock::now();
  out.state->description = subsample(a, cfg.k, p, cfg.seed);
  out.state->times.sketch = seconds_since(t0);
  out.view = std::make_shared<FactorView>(a, out.state->description, cfg.memo);
  // One share for the sketch event and one per estimated coordinate.
  out.delta_each = cfg.delta / static_cast<double>(cfg.k + 1);
  return out;
}

}  // namespace

void SolverConfig::validate() const {
  if (k == 0) throw Error(ErrorKind::Config, "k must be at least 1");
  if (p != 0 && p < k) throw Error(ErrorKind::Config, "p must be at least k");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::Config, "delta must lie in (0, 1)");
  if (!(tau_b >= 0.0 && tau_b <= 1.0)) throw Error(ErrorKind::Config, "tau_b must lie in [0, 1]");
  if (!(isometry_alpha >= 0.0 && isometry_alpha < 1.0)) {
    throw Error(ErrorKind::Config, "isometry_alpha must lie in [0, 1)");
  }
}

double SolveState::zero_threshold() const {
  return config.epsilon / std::pow(description.sigma_max(), exponent);
}

EstimatorParams budget_params(const SolverConfig& cfg, EstimatorParams derived, bool* clamped) {
  if (cfg.groups) derived.groups = cfg.groups;
  if (cfg.group_size) derived.group_size = cfg.group_size;
  if (cfg.max_samples && derived.total_samples() > cfg.max_samples) {
    derived.group_size = std::max<std::size_t>(1, cfg.max_samples / derived.groups);
    if (clamped) *clamped = true;
  }
  return derived;
}

Solution prepare(const ComplexSampledMatrix& a, const ComplexSampledVector& b, const SolverConfig& cfg) {
  if (b.size() != a.rows()) throw Error(ErrorKind::Config, "b must have one entry per row of A");
  const LedgerCounts before = a.ledger().snapshot() + b.ledger().snapshot();
  Prepared prep = sketch(a, cfg);
  SolveState& st = *prep.state;
  const SuccinctDescription& d = st.description;
  const auto k = static_cast<Eigen::Index>(d.k);

  const auto t0 = Clock::now();
  const SampledVectorAccess y(b);
  const AdjointEntries adjoint(a);
  const double b_norm_sq = y.norm_sq();
  st.component_target = cfg.epsilon * d.sigma_min() * d.sigma_min() / std::sqrt(static_cast<double>(d.k));
  st.w.resize(k);
  st.column_norm_sq.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const std::string tag = "estimator-w" + std::to_string(i);
    Rng pilot = prep.streams.stream("norm-w" + std::to_string(i));
    Rng rng = prep.streams.stream(tag);
    const VColumnAccess x(*prep.view, static_cast<Index>(i), pilot, cfg.norm_pilot, cfg.norm_mode,
                          cfg.rejection_cap);
    const EstimatorParams params = budget_params(
        cfg,
        EstimatorParams::bilinear(st.component_target, prep.delta_each, x.norm_sq(), b_norm_sq,
                                  d.frobenius_sq),
        &st.clamped);
    const Estimate est = estimate_bilinear(x, adjoint, y, params, rng);
    st.w(i) = est.value;
    st.guard_hits += est.guard_hits;
    st.column_norm_sq(i) = x.norm_sq();
    st.params.push_back(params);
  }
  st.exponent = 2;
  st.w_prime = st.w.cwiseQuotient(d.sigma_hat.cwiseAbs2().cast<Complex>());
  st.times.estimate = seconds_since(t0);
  st.ledger = a.ledger().snapshot() + b.ledger().snapshot() - before;
  return Solution(prep.state, prep.view);
}

Solution solve_psd(const ComplexSampledMatrix& a, const QueryAccess& b, const SolverConfig& cfg, bool verify) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::NotPSD, "matrix is not square");
  if (b.size() != a.rows()) throw Error(ErrorKind::Config, "b must have one entry per row of A");
  if (verify && a.rows() <= oracle::kMaxDenseDim) oracle::psd_eigenvalues(a.to_dense());
  const LedgerCounts before = a.ledger().snapshot();
  Prepared prep = sketch(a, cfg);
  SolveState& st = *prep.state;
  const SuccinctDescription& d = st.description;
  const auto k = static_cast<Eigen::Index>(d.k);

  const auto t0 = Clock::now();
  st.component_target = cfg.epsilon * d.sigma_min() / std::sqrt(static_cast<double>(d.k));
  st.w.resize(k);
  st.column_norm_sq.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Rng pilot = prep.streams.stream("norm-w" + std::to_string(i));
    Rng rng = prep.streams.stream("estimator-w" + std::to_string(i));
    const VColumnAccess x(*prep.view, static_cast<Index>(i), pilot, cfg.norm_pilot, cfg.norm_mode,
                          cfg.rejection_cap);
    const EstimatorParams params = budget_params(
        cfg, EstimatorParams::inner(st.component_target / std::sqrt(x.norm_sq()), prep.delta_each),
        &st.clamped);
    const Estimate est = estimate_inner(x, b, params, rng);
    st.w(i) = est.value;
    st.guard_hits += est.guard_hits;
    st.column_norm_sq(i) = x.norm_sq();
    st.params.push_back(params);
  }
  st.exponent = 1;
  st.w_prime = st.w.cwiseQuotient(d.sigma_hat.cast<Complex>());
  st.times.estimate = seconds_since(t0);
  st.ledger = a.ledger().snapshot() - before;
  return Solution(prep.state, prep.view);
}

// ---------------------------------------------------------------------------

Solution::Solution(std::shared_ptr<const SolveState> state, std::shared_ptr<const FactorView> view)
    : state_(std::move(state)), view_(std::move(view)) {
  const SolveState& st = *state_;
  const SolverConfig& cfg = st.config;
  const Index k = st.description.k;
  const double p = static_cast<double>(st.description.p);
  column_weights_.resize(k);
  column_caps_.resize(k);
  for (Index i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double norm = st.column_norm_sq(ii);
    column_weights_[i] = std::norm(st.w_prime(ii)) * norm;
    const double c = norm > 0.0 ? view_->proposal_scale(i) / (p * norm) : 1.0;
    column_caps_[i] = cfg.rejection_cap ? cfg.rejection_cap
                                        : detail::rejection_cap(st.description.p, RejectionOptions{0, c});
  }
  cap_ = cfg.rejection_cap ? cfg.rejection_cap : isometry_rejection_cap(k, cfg.isometry_alpha);
}

Complex Solution::query(Index j) const {
  return view_->visit_row(j, [&](const FactorRow& row) { return row.values.cwiseProduct(state_->w_prime).sum(); });
}

Index Solution::sample_column(Index i, Rng& rng) const {
  const auto ii = static_cast<Eigen::Index>(i);
  return detail::rejection_sample(
      [&](Rng& r) { return view_->propose(i, r); },
      [&](Index l) {
        return view_->visit_row(l, [ii](const FactorRow& row) {
          return detail::RowTerms{row.values(ii), row.weighted_sq(ii)};
        });
      },
      static_cast<double>(state_->description.p), column_caps_[i], rng, nullptr);
}

Index Solution::sample(Rng& rng, RejectionStats* stats) const {
  const SolveState& st = *state_;
  const double norm = st.w_prime.norm();
  if (!(norm > st.zero_threshold())) {
    throw Error(ErrorKind::ZeroSolution, "||w'|| = " + std::to_string(norm) + " is at or below " +
                                             std::to_string(st.zero_threshold()));
  }
  std::discrete_distribution<Index> pick(column_weights_.begin(), column_weights_.end());
  const auto k = static_cast<Eigen::Index>(st.description.k);
  return detail::rejection_sample(
      [&](Rng& r) { return sample_column(pick(r), r); },
      [&](Index l) {
        return view_->visit_row(l, [&](const FactorRow& row) {
          detail::RowTerms t{Complex(0.0), 0.0};
          for (Eigen::Index i = 0; i < k; ++i) {
            const Complex term = row.values(i) * st.w_prime(i);
            t.value += term;
            t.weighted_sq += std::norm(term);
          }
          return t;
        });
      },
      static_cast<double>(k), cap_, rng, stats);
}

Complex query_entry(const Solution& s, Index j) { return s.query(j); }

Index sample_solution(const Solution& s, Rng& rng, RejectionStats* stats) { return s.sample(rng, stats); }

double overlap_estimate(const Solution& s, const ComplexSampledVector& b, const EstimatorParams& params,
                        Rng& rng) {
  const SolveState& st = s.state();
  if (b.size() != s.matrix().rows()) throw Error(ErrorKind::Config, "b must have one entry per row of A");
  const SampledVectorAccess y(b);
  const AdjointEntries adjoint(s.matrix());
  double total = 0.0;
  const std::uint64_t base = rng();
  for (Index i = 0; i < st.description.k; ++i) {
    Rng pilot = child_stream(base, 2 * i);
    Rng draw = child_stream(base, 2 * i + 1);
    const VColumnAccess x(s.factors(), i, pilot, st.config.norm_pilot, st.config.norm_mode,
                          st.config.rejection_cap);
    const Complex wi = estimate_bilinear(x, adjoint, y, params, draw).value;
    const double sigma = st.description.sigma_hat(static_cast<Eigen::Index>(i));
    total += std::norm(wi) / (sigma * sigma);
  }
  return total;
}

nlohmann::json to_json(const LedgerCounts& c) {
  return {{"entry_queries", c.entry_queries},
          {"norm_queries", c.norm_queries},
          {"samples", c.samples},
          {"total", c.total()}};
}

nlohmann::json to_json(const SolverConfig& cfg) {
  return {{"k", cfg.k},
          {"p", cfg.p},
          {"epsilon", cfg.epsilon},
          {"delta", cfg.delta},
          {"groups", cfg.groups},
          {"group_size", cfg.group_size},
          {"max_samples", cfg.max_samples},
          {"rejection_cap", cfg.rejection_cap},
          {"isometry_alpha", cfg.isometry_alpha},
          {"tau_b", cfg.tau_b},
          {"seed", cfg.seed},
          {"memo", cfg.memo},
          {"norm_pilot", cfg.norm_pilot},
          {"norm_mode", cfg.norm_mode == NormMode::Sampled ? "sampled" : "unit"}};
}

nlohmann::json report_json(const Solution& s) {
  const SolveState& st = s.state();
  const SuccinctDescription& d = st.description;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : st.params) {
    params.push_back({{"epsilon", p.epsilon}, {"delta", p.delta}, {"groups", p.groups}, {"group_size", p.group_size}});
  }
  return {{"digest", d.digest},
          {"rows", d.rows},
          {"cols", d.cols},
          {"config", to_json(st.config)},
          {"sigma_hat", real_array(d.sigma_hat)},
          {"sigma_max", d.sigma_max()},
          {"kappa_hat", d.kappa_hat()},
          {"exponent", st.exponent},
          {"component_target", st.component_target},
          {"estimators", std::move(params)},
          {"clamped", st.clamped},
          {"guard_hits", st.guard_hits},
          {"column_norm_sq", real_array(st.column_norm_sq)},
          {"w", complex_array(st.w)},
          {"w_prime", complex_array(st.w_prime)},
          {"ledger", to_json(st.ledger)},
          {"seconds", {{"sketch", st.times.sketch}, {"estimate", st.times.estimate}}}};
}

}  // namespace qisolve
