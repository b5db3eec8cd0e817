#include <qisolve/estimators.hpp>
#include <qisolve/oracle.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

namespace qisolve {

namespace {

std::vector<double> abs2_weights(const CVector& v) {
  std::vector<double> w(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) w[static_cast<std::size_t>(i)] = std::norm(v(i));
  return w;
}

double median_of(std::vector<double>& xs) {
  const std::size_t n = xs.size();
  const std::size_t mid = n / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  double hi = xs[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

constexpr std::size_t kMaxConsecutiveGuards = 1000;

// Shared median-of-means driver. `draw` returns the (unscaled) Z for one sample or
// nullopt when a guard fired.
template <typename Draw>
Estimate median_of_means(const EstimatorParams& params, Rng& rng, Draw&& draw) {
  params.validate();
  const std::uint64_t base = rng();
  std::vector<Complex> means(params.groups);
  Estimate out;
  for (std::size_t g = 0; g < params.groups; ++g) {
    Rng group_rng = child_stream(base, g);
    Complex sum{0.0, 0.0};
    std::size_t taken = 0;
    std::size_t guards = 0;
    while (taken < params.group_size) {
      auto z = draw(group_rng);
      if (!z) {
        ++out.guard_hits;
        if (++guards > kMaxConsecutiveGuards) {
          throw Error(ErrorKind::ZeroNormSample, "sampled entries are repeatedly zero");
        }
        continue;
      }
      guards = 0;
      if (!std::isfinite(z->real()) || !std::isfinite(z->imag())) {
        throw Error(ErrorKind::NonfiniteSample, "estimator sample overflowed");
      }
      sum += *z;
      ++taken;
    }
    means[g] = sum / static_cast<double>(params.group_size);
    out.draws += taken;
  }
  out.value = componentwise_median(means);
  return out;
}

}  // namespace

DenseVectorAccess::DenseVectorAccess(CVector v) : v_(std::move(v)), norm_sq_(v_.squaredNorm()) {
  if (v_.size() == 0) throw Error(ErrorKind::EmptyVector, "empty dense vector");
  auto w = abs2_weights(v_);
  if (norm_sq_ > 0.0) dist_ = std::discrete_distribution<Index>(w.begin(), w.end());
}

Complex DenseVectorAccess::query(Index i) const {
  detail::check_index(i, size(), "vector");
  return v_(static_cast<Eigen::Index>(i));
}

Index DenseVectorAccess::sample(Rng& rng) const {
  if (!(norm_sq_ > 0.0)) throw Error(ErrorKind::ZeroNormSample, "sampling from a zero vector");
  return dist_(rng);
}

std::size_t EstimatorParams::groups_for(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::Config, "delta must lie in (0, 1)");
  return static_cast<std::size_t>(std::max(1.0, std::ceil(8.0 * std::log(1.0 / delta))));
}

EstimatorParams EstimatorParams::inner(double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  EstimatorParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.groups = groups_for(delta);
  p.group_size = static_cast<std::size_t>(std::max(1.0, std::ceil(4.0 / (epsilon * epsilon))));
  return p;
}

EstimatorParams EstimatorParams::bilinear(double epsilon, double delta, double x_norm_sq,
                                          double y_norm_sq, double frobenius_sq) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  EstimatorParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.groups = groups_for(delta);
  const double q = std::ceil(4.0 * x_norm_sq * y_norm_sq * frobenius_sq / (epsilon * epsilon));
  if (!std::isfinite(q) || q > 1e15) {
    throw Error(ErrorKind::EstimatorFailure, "bilinear group size is not representable");
  }
  p.group_size = static_cast<std::size_t>(std::max(1.0, q));
  return p;
}

void EstimatorParams::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::Config, "delta must lie in (0, 1)");
  if (groups == 0 || group_size == 0) throw Error(ErrorKind::Config, "empty estimator batch");
}

Complex componentwise_median(std::span<const Complex> values) {
  if (values.empty()) throw Error(ErrorKind::Config, "median of nothing");
  std::vector<double> re(values.size()), im(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    re[i] = values[i].real();
    im[i] = values[i].imag();
  }
  return {median_of(re), median_of(im)};
}

Estimate estimate_inner(const VectorAccess& x, const QueryAccess& y, const EstimatorParams& params,
                        Rng& rng) {
  if (x.size() != y.size()) throw Error(ErrorKind::Config, "estimate_inner: length mismatch");
  if (!(x.norm_sq() > 0.0)) throw Error(ErrorKind::ZeroNormSample, "estimate_inner: x is zero");
  Estimate est = median_of_means(params, rng, [&](Rng& r) -> std::optional<Complex> {
    const Index i = x.sample(r);
    const Complex xi = x.query(i);
    if (xi == Complex(0.0)) return std::nullopt;
    return y.query(i) / xi;
  });
  // ||x||^2 is a common positive factor, so it commutes with mean and median.
  est.value *= x.norm_sq();
  return est;
}

Estimate estimate_bilinear(const VectorAccess& x, const EntryAccess& a, const VectorAccess& y,
                           const EstimatorParams& params, Rng& rng) {
  if (a.rows() != x.size() || a.cols() != y.size()) {
    throw Error(ErrorKind::Config, "estimate_bilinear: dimension mismatch");
  }
  if (!(x.norm_sq() > 0.0) || !(y.norm_sq() > 0.0)) {
    throw Error(ErrorKind::ZeroNormSample, "estimate_bilinear: zero vector");
  }
  Estimate est = median_of_means(params, rng, [&](Rng& r) -> std::optional<Complex> {
    const Index i = x.sample(r);
    const Index j = y.sample(r);
    const Complex xi = x.query(i);
    const Complex yj = y.query(j);
    if (xi == Complex(0.0) || yj == Complex(0.0)) return std::nullopt;
    return a.entry(i, j) / (xi * std::conj(yj));
  });
  const double scale = x.norm_sq() * y.norm_sq();
  est.value *= scale;
  if (!std::isfinite(est.value.real()) || !std::isfinite(est.value.imag())) {
    throw Error(ErrorKind::NonfiniteSample, "estimator result overflowed");
  }
  return est;
}

DenseThinMatrix::DenseThinMatrix(CMatrix m) : m_(std::move(m)) {
  columns_.reserve(static_cast<std::size_t>(m_.cols()));
  for (Eigen::Index j = 0; j < m_.cols(); ++j) {
    auto w = abs2_weights(m_.col(j));
    if (m_.col(j).squaredNorm() > 0.0) {
      columns_.emplace_back(w.begin(), w.end());
    } else {
      columns_.emplace_back();
    }
  }
}

double DenseThinMatrix::column_norm_sq(Index j) const {
  detail::check_index(j, cols(), "column");
  return m_.col(static_cast<Eigen::Index>(j)).squaredNorm();
}

Index DenseThinMatrix::sample_in_column(Index j, Rng& rng) const {
  if (!(column_norm_sq(j) > 0.0)) throw Error(ErrorKind::ZeroNormSample, "zero column");
  return columns_[j](rng);
}

Complex DenseThinMatrix::entry(Index i, Index j) const {
  detail::check_index(i, rows(), "row");
  detail::check_index(j, cols(), "column");
  return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

std::uint64_t detail::rejection_cap(Index k, const RejectionOptions& opts) {
  if (opts.cap) return opts.cap;
  const double c = std::max(1.0, opts.c_estimate);
  return static_cast<std::uint64_t>(std::ceil(100.0 * static_cast<double>(k) * c));
}

ThinProductSampler::ThinProductSampler(const ThinMatrixAccess& m, std::span<const Complex> v,
                                       RejectionOptions opts)
    : m_(&m), v_(v.begin(), v.end()) {
  if (v_.size() != m.cols()) throw Error(ErrorKind::Config, "thin product: length mismatch");
  std::vector<double> weights(v_.size());
  for (Index j = 0; j < v_.size(); ++j) {
    weights[j] = std::norm(v_[j]) * m.column_norm_sq(j);
    mass_ += weights[j];
  }
  if (!(mass_ > 0.0)) throw Error(ErrorKind::ZeroNormSample, "thin product: Mv has no mass");
  column_ = std::discrete_distribution<Index>(weights.begin(), weights.end());
  cap_ = detail::rejection_cap(m.cols(), opts);
}

Index ThinProductSampler::sample(Rng& rng, RejectionStats* stats) const {
  const Index k = v_.size();
  return detail::rejection_sample(
      [&](Rng& r) { return m_->sample_in_column(column_(r), r); },
      [&](Index i) {
        detail::RowTerms t{Complex(0.0), 0.0};
        for (Index j = 0; j < k; ++j) {
          if (v_[j] == Complex(0.0)) continue;
          const Complex term = v_[j] * m_->entry(i, j);
          t.value += term;
          t.weighted_sq += std::norm(term);
        }
        return t;
      },
      static_cast<double>(k), cap_, rng, stats);
}

Index sample_thin_product(const ThinMatrixAccess& m, std::span<const Complex> v, Rng& rng,
                          RejectionOptions opts, RejectionStats* stats) {
  return ThinProductSampler(m, v, opts).sample(rng, stats);
}

std::uint64_t isometry_rejection_cap(Index k, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::Config, "isometry distortion bound must lie in [0, 1)");
  }
  const double c = (1.0 + alpha) * (1.0 + alpha) / ((1.0 - alpha) * (1.0 - alpha));
  return detail::rejection_cap(k, RejectionOptions{0, c});
}

Index sample_thin_product_isometry(const ThinMatrixAccess& m, std::span<const Complex> v, Rng& rng,
                                   double alpha, RejectionStats* stats) {
  RejectionOptions opts;
  opts.cap = isometry_rejection_cap(m.cols(), alpha);
  return ThinProductSampler(m, v, opts).sample(rng, stats);
}

double tv_distance_bound_check(const CVector& x, const CVector& y) {
  return oracle::exact_tv(oracle::exact_distribution(x), oracle::exact_distribution(y));
}

}  // namespace qisolve
