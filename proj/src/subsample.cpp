#include <qisolve/oracle.hpp>
#include <qisolve/subsample.hpp>

#include <qisolve/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qisolve {

namespace {

struct ColumnSketch {
  std::vector<Index> indices;
  std::vector<double> scales;
  CMatrix w;
};

// Column draws: t uniform over the sampled rows, then j ~ D_{A(i_t, .)}. P'_j is the
// exact average of D_{A(i_t, .)}(j) over the p rows; the p entries read to get it are
// the ones W(., t) needs, so each distinct column costs p entry queries once.
ColumnSketch sample_columns(const ComplexSampledMatrix& a, const RowSketch& rows, Rng& rng) {
  const Index p = rows.size();
  ColumnSketch out;
  out.indices.resize(p);
  std::uniform_int_distribution<Index> pick(0, p - 1);
  for (Index t = 0; t < p; ++t) {
    out.indices[t] = a.sample_in_row(rows.indices[pick(rng)], rng);
  }

  std::unordered_map<Index, std::pair<CVector, double>> seen;
  out.scales.resize(p);
  out.w.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (Index t = 0; t < p; ++t) {
    const Index j = out.indices[t];
    auto it = seen.find(j);
    if (it == seen.end()) {
      CVector col(static_cast<Eigen::Index>(p));
      double prob = 0.0;
      for (Index s = 0; s < p; ++s) {
        const Complex v = a.entry(rows.indices[s], j);
        col(static_cast<Eigen::Index>(s)) = v * rows.scales[s];
        prob += std::norm(v) / rows.norm_sq[s];
      }
      it = seen.emplace(j, std::make_pair(std::move(col), prob / static_cast<double>(p))).first;
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(p) * it->second.second);
    out.scales[t] = scale;
    out.w.col(static_cast<Eigen::Index>(t)) = it->second.first * scale;
  }
  return out;
}

void fix_phase(CMatrix& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index arg = 0;
    u.col(c).cwiseAbs2().maxCoeff(&arg);
    const Complex lead = u(arg, c);
    if (std::abs(lead) > 0.0) u.col(c) *= std::conj(lead) / std::abs(lead);
    u(arg, c) = std::abs(u(arg, c));
  }
}

}  // namespace

RowSketch sample_rows(const ComplexSampledMatrix& a, Index p, Rng& rng) {
  if (p == 0) throw Error(ErrorKind::Config, "sketch size must be positive");
  RowSketch out;
  out.frobenius_sq = a.frobenius_sq();
  if (!(out.frobenius_sq > 0.0)) throw Error(ErrorKind::ZeroNormSample, "sketching a zero matrix");
  out.indices.resize(p);
  out.scales.resize(p);
  out.norm_sq.resize(p);
  for (Index t = 0; t < p; ++t) {
    const Index i = a.sample_row(rng);
    const double r = a.row_norm_sq(i);
    out.indices[t] = i;
    out.norm_sq[t] = r;
    out.scales[t] = 1.0 / std::sqrt(static_cast<double>(p) * r / out.frobenius_sq);
  }
  return out;
}

Index suggested_sketch_size(Index k, Index m, Index n) {
  const double logs = std::ceil(std::log(static_cast<double>(m) * static_cast<double>(n)));
  return std::max<Index>(20 * k, k * static_cast<Index>(std::max(1.0, logs)));
}

double worst_case_sketch_size(Index k, double kappa, double epsilon, double frobenius_sq) {
  const double kk = static_cast<double>(k);
  return 1e7 * std::pow(kk, 11) * std::pow(kappa, 20) /
         (std::pow(epsilon, 4) * frobenius_sq * frobenius_sq);
}

SuccinctDescription subsample(const ComplexSampledMatrix& a, Index k, Index p, Rng& row_rng,
                              Rng& col_rng) {
  if (k == 0) throw Error(ErrorKind::Config, "rank k must be at least 1");
  if (p < k) throw Error(ErrorKind::Config, "sketch size p must be at least k");
  const RowSketch rows = sample_rows(a, p, row_rng);
  ColumnSketch cols = sample_columns(a, rows, col_rng);

  const double eps = std::numeric_limits<double>::epsilon();
  const auto svd = thin_svd(cols.w, static_cast<double>(std::max(p, k)) * eps);
  const double top = svd.rank() ? svd.values(0) : 0.0;
  const double tau = static_cast<double>(std::max(p, k)) * eps * top;
  const double sigma_k = svd.rank() >= k ? svd.values(static_cast<Eigen::Index>(k) - 1) : 0.0;
  if (!(sigma_k > tau)) {
    throw Error(ErrorKind::RankDeficientSketch,
                "sigma_" + std::to_string(k) + "(W) = " + std::to_string(sigma_k) +
                    " is at or below the degeneracy threshold " + std::to_string(tau) + " (numerical rank " +
                    std::to_string(svd.rank()) + ")");
  }

  SuccinctDescription d;
  d.rows = a.rows();
  d.cols = a.cols();
  d.p = p;
  d.k = k;
  d.row_indices = rows.indices;
  d.row_scales = rows.scales;
  d.row_norm_sq = rows.norm_sq;
  d.col_indices = std::move(cols.indices);
  d.col_scales = std::move(cols.scales);
  d.frobenius_sq = rows.frobenius_sq;
  d.sigma_hat = svd.values.head(static_cast<Eigen::Index>(k));
  d.u_hat = svd.u.leftCols(static_cast<Eigen::Index>(k));
  fix_phase(d.u_hat);
  d.digest = a.digest();
  return d;
}

SuccinctDescription subsample(const ComplexSampledMatrix& a, Index k, Index p, std::uint64_t seed) {
  const RandomStreams streams(seed);
  Rng rows = streams.stream("rows");
  Rng cols = streams.stream("cols");
  SuccinctDescription d = subsample(a, k, p, rows, cols);
  d.seed = seed;
  return d;
}

RVector sketch_spectrum(const ComplexSampledMatrix& a, Index p, std::uint64_t seed) {
  const RandomStreams streams(seed);
  Rng row_rng = streams.stream("rows");
  Rng col_rng = streams.stream("cols");
  const RowSketch rows = sample_rows(a, p, row_rng);
  const ColumnSketch cols = sample_columns(a, rows, col_rng);
  RVector s = RVector::Zero(static_cast<Eigen::Index>(p));
  const auto svd = thin_svd(cols.w);
  s.head(svd.values.size()) = svd.values;
  return s;
}

CMatrix dense_s(const SuccinctDescription& d, const CMatrix& a) {
  CMatrix s(static_cast<Eigen::Index>(d.p), a.cols());
  for (Index t = 0; t < d.p; ++t) {
    s.row(static_cast<Eigen::Index>(t)) = a.row(static_cast<Eigen::Index>(d.row_indices[t])) * d.row_scales[t];
  }
  return s;
}

CMatrix dense_w(const SuccinctDescription& d, const CMatrix& a) {
  const CMatrix s = dense_s(d, a);
  CMatrix w(s.rows(), static_cast<Eigen::Index>(d.p));
  for (Index t = 0; t < d.p; ++t) {
    w.col(static_cast<Eigen::Index>(t)) = s.col(static_cast<Eigen::Index>(d.col_indices[t])) * d.col_scales[t];
  }
  return w;
}

CMatrix dense_v(const SuccinctDescription& d, const CMatrix& a) {
  const CMatrix s = dense_s(d, a);
  return s.adjoint() * d.u_hat * d.sigma_hat.cwiseInverse().asDiagonal();
}

double isometry_defect(const SuccinctDescription& d, const CMatrix& a) {
  const CMatrix v = dense_v(d, a);
  const auto k = static_cast<Eigen::Index>(d.k);
  return (v.adjoint() * v - CMatrix::Identity(k, k)).norm();
}

SketchReport verify_sketch(const SuccinctDescription& d, const CMatrix& a) {
  oracle::require_dense_size(static_cast<Index>(a.rows()), static_cast<Index>(a.cols()));
  if (static_cast<Index>(a.rows()) != d.rows || static_cast<Index>(a.cols()) != d.cols) {
    throw Error(ErrorKind::Config, "verify_sketch: matrix does not match the description");
  }
  const CMatrix s = dense_s(d, a);
  const CMatrix w = dense_w(d, a);
  const CMatrix v = dense_v(d, a);
  const auto k = static_cast<Eigen::Index>(d.k);
  const CMatrix gram = a.adjoint() * a;
  const RVector sig2 = d.sigma_hat.cwiseAbs2();
  const CMatrix approx = v * sig2.asDiagonal() * v.adjoint();
  const CMatrix approx_inv = v * sig2.cwiseInverse().asDiagonal() * v.adjoint();

  const auto wsvd = thin_svd(w);
  const Eigen::Index kk = std::min<Eigen::Index>(k, wsvd.values.size());
  RVector ws = RVector::Zero(std::max<Eigen::Index>(k, wsvd.values.size()));
  ws.head(wsvd.values.size()) = wsvd.values;
  const CMatrix w_k = wsvd.u.leftCols(kk) * wsvd.values.head(kk).asDiagonal() * wsvd.v.leftCols(kk).adjoint();

  SketchReport r;
  r.gram_error = (gram - s.adjoint() * s).norm();
  r.sketch_gram_error = (s * s.adjoint() - w * w.adjoint()).norm();
  r.approx_error = (gram - approx).norm();
  r.inverse_error = (oracle::pseudo_inverse(gram) - approx_inv).norm();
  r.isometry_defect = (v.adjoint() * v - CMatrix::Identity(k, k)).norm();
  r.sigma_k_w = ws(k - 1);
  r.sigma_1_w = ws(0);
  r.frobenius = a.norm();
  const RVector sa = oracle::nonzero_singular_values(a);
  r.spectral = sa.size() ? sa(0) : 0.0;
  r.s_over_a = r.frobenius > 0.0 ? s.norm() / r.frobenius : 0.0;
  r.w_over_s = s.norm() > 0.0 ? w.norm() / s.norm() : 0.0;
  r.svd_residual = w.norm() > 0.0 ? (w - w_k).norm() / w.norm() : 0.0;
  return r;
}

nlohmann::json to_json(const SuccinctDescription& d) {
  nlohmann::json j;
  j["version"] = SuccinctDescription::kFormatVersion;
  j["rows"] = d.rows;
  j["cols"] = d.cols;
  j["p"] = d.p;
  j["k"] = d.k;
  j["seed"] = d.seed;
  j["digest"] = d.digest;
  j["frobenius_sq"] = d.frobenius_sq;
  j["row_indices"] = d.row_indices;
  j["row_scales"] = d.row_scales;
  j["row_norm_sq"] = d.row_norm_sq;
  j["col_indices"] = d.col_indices;
  j["col_scales"] = d.col_scales;
  j["sigma_hat"] = std::vector<double>(d.sigma_hat.data(), d.sigma_hat.data() + d.sigma_hat.size());
  nlohmann::json u = nlohmann::json::array();
  for (Eigen::Index c = 0; c < d.u_hat.cols(); ++c) {
    nlohmann::json col = nlohmann::json::array();
    for (Eigen::Index r = 0; r < d.u_hat.rows(); ++r) col.push_back({d.u_hat(r, c).real(), d.u_hat(r, c).imag()});
    u.push_back(std::move(col));
  }
  j["u_hat"] = std::move(u);
  return j;
}

SuccinctDescription description_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != SuccinctDescription::kFormatVersion) {
      throw Error(ErrorKind::Parse, "unsupported description version");
    }
    SuccinctDescription d;
    d.rows = j.at("rows").get<Index>();
    d.cols = j.at("cols").get<Index>();
    d.p = j.at("p").get<Index>();
    d.k = j.at("k").get<Index>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.digest = j.at("digest").get<std::uint64_t>();
    d.frobenius_sq = j.at("frobenius_sq").get<double>();
    d.row_indices = j.at("row_indices").get<std::vector<Index>>();
    d.row_scales = j.at("row_scales").get<std::vector<double>>();
    d.row_norm_sq = j.at("row_norm_sq").get<std::vector<double>>();
    d.col_indices = j.at("col_indices").get<std::vector<Index>>();
    d.col_scales = j.at("col_scales").get<std::vector<double>>();
    const auto sig = j.at("sigma_hat").get<std::vector<double>>();
    d.sigma_hat = Eigen::Map<const RVector>(sig.data(), static_cast<Eigen::Index>(sig.size()));
    const auto& u = j.at("u_hat");
    d.u_hat.resize(static_cast<Eigen::Index>(d.p), static_cast<Eigen::Index>(d.k));
    if (u.size() != d.k || d.row_indices.size() != d.p || d.col_indices.size() != d.p ||
        d.sigma_hat.size() != static_cast<Eigen::Index>(d.k)) {
      throw Error(ErrorKind::Parse, "description field sizes are inconsistent");
    }
    for (Index c = 0; c < d.k; ++c) {
      if (u[c].size() != d.p) throw Error(ErrorKind::Parse, "u_hat column has the wrong length");
      for (Index r = 0; r < d.p; ++r) {
        d.u_hat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            Complex(u[c][r][0].get<double>(), u[c][r][1].get<double>());
      }
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("description: ") + e.what());
  }
}

nlohmann::json to_json(const SketchReport& r) {
  return {{"gram_error", r.gram_error},
          {"sketch_gram_error", r.sketch_gram_error},
          {"approx_error", r.approx_error},
          {"inverse_error", r.inverse_error},
          {"isometry_defect", r.isometry_defect},
          {"sigma_k_w", r.sigma_k_w},
          {"sigma_1_w", r.sigma_1_w},
          {"s_over_a", r.s_over_a},
          {"w_over_s", r.w_over_s},
          {"frobenius", r.frobenius},
          {"spectral", r.spectral},
          {"svd_residual", r.svd_residual}};
}

// ---------------------------------------------------------------------------

FactorView::FactorView(const ComplexSampledMatrix& a, const SuccinctDescription& d, bool memo)
    : a_(&a),
      n_(d.cols),
      k_(d.k),
      p_(d.p),
      sampled_rows_(d.row_indices),
      sigma_(d.sigma_hat),
      frob_sq_(d.frobenius_sq),
      memo_(memo) {
  if (a.rows() != d.rows || a.cols() != d.cols) {
    throw Error(ErrorKind::Config, "factor view: matrix does not match the description");
  }
  coef_ = d.u_hat * d.sigma_hat.cwiseInverse().asDiagonal();
  for (Index t = 0; t < p_; ++t) coef_.row(static_cast<Eigen::Index>(t)) *= d.row_scales[t];
  proposals_.reserve(k_);
  for (Index i = 0; i < k_; ++i) {
    std::vector<double> cumulative(p_);
    double run = 0.0;
    for (Index t = 0; t < p_; ++t) {
      run += std::norm(d.u_hat(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)));
      cumulative[t] = run;
    }
    proposals_.push_back(std::move(cumulative));
  }
}

std::size_t FactorView::cached_rows() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

FactorRow FactorView::fetch(Index l) const {
  const auto k = static_cast<Eigen::Index>(k_);
  FactorRow out{CVector::Zero(k), RVector::Zero(k)};
  for (Index t = 0; t < p_; ++t) {
    const Complex a = std::conj(a_->entry(sampled_rows_[t], l));
    if (a == Complex(0.0)) continue;
    const auto row = coef_.row(static_cast<Eigen::Index>(t));
    for (Eigen::Index i = 0; i < k; ++i) {
      const Complex term = a * row(i);
      out.values(i) += term;
      out.weighted_sq(i) += std::norm(term);
    }
  }
  return out;
}

FactorRow FactorView::row(Index l) const {
  return visit_row(l, [](const FactorRow& r) { return r; });
}

Index FactorView::propose(Index i, Rng& rng) const {
  detail::check_index(i, k_, "column of V");
  const auto& cumulative = proposals_[i];
  const double u = uniform01(rng) * cumulative.back();
  const auto t = std::min<Index>(
      static_cast<Index>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()), p_ - 1);
  return a_->sample_in_row(sampled_rows_[t], rng);
}

// ---------------------------------------------------------------------------

VColumnAccess::VColumnAccess(const FactorView& f, Index i, Rng& pilot_rng, std::size_t pilot,
                             NormMode mode, std::uint64_t cap)
    : f_(&f), column_(i), mode_(mode) {
  detail::check_index(i, f.rank(), "column of V");
  const auto ii = static_cast<Eigen::Index>(i);
  for (std::size_t s = 0; s < pilot; ++s) {
    const double accept = f.visit_row(f.propose(i, pilot_rng), [&](const FactorRow& r) {
      const double w = r.weighted_sq(ii);
      return w > 0.0 ? std::norm(r.values(ii)) / (static_cast<double>(f.sketch_size()) * w) : 0.0;
    });
    ++stats_.trials;
    stats_.acceptance_sum += std::min(accept, 1.0);
  }
  if (pilot > 0 && !(stats_.acceptance_sum > 0.0)) {
    throw Error(ErrorKind::ZeroNormSample, "column of V has no detectable mass");
  }
  if (cap) {
    cap_ = cap;
  } else {
    // Expected trials are ||A||_F^2 / (sigma_hat_i^2 ||V(., i)||^2) = p * C(S^dag, u_hat_i / sigma_hat_i).
    const double norm = mode_ == NormMode::Unit || pilot == 0 ? 1.0 : norm_sq();
    const double c = f.proposal_scale(i) / (static_cast<double>(f.sketch_size()) * norm);
    cap_ = detail::rejection_cap(f.sketch_size(), RejectionOptions{0, c});
  }
}

Index VColumnAccess::sample(Rng& rng) const {
  const auto ii = static_cast<Eigen::Index>(column_);
  return detail::rejection_sample(
      [&](Rng& r) { return f_->propose(column_, r); },
      [&](Index l) {
        return f_->visit_row(l, [ii](const FactorRow& row) {
          return detail::RowTerms{row.values(ii), row.weighted_sq(ii)};
        });
      },
      static_cast<double>(f_->sketch_size()), cap_, rng, &stats_);
}

double VColumnAccess::norm_sq() const {
  if (mode_ == NormMode::Unit || stats_.trials == 0) return 1.0;
  return f_->proposal_scale(column_) * stats_.acceptance_sum / static_cast<double>(stats_.trials);
}

}  // namespace qisolve
