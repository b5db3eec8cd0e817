#include <qisolve/instance.hpp>

#include <Eigen/QR>

#include <cmath>

namespace qisolve {

void InstanceSpec::validate() const {
  if (m == 0 || n == 0) throw Error(ErrorKind::Config, "instance dimensions must be positive");
  if (k == 0 || k > std::min(m, n)) throw Error(ErrorKind::Config, "k must lie in [1, min(m, n)]");
  if (!(kappa >= 1.0)) throw Error(ErrorKind::Config, "kappa must be at least 1");
  if (k == 1 && kappa != 1.0) throw Error(ErrorKind::Config, "a rank-1 matrix has kappa = 1");
  if (!(norm > 0.0)) throw Error(ErrorKind::Config, "norm must be positive");
  const double c = b.weight();
  if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorKind::Config, "b-mode weight must lie in [0, 1]");
  if (c < 1.0 && k == m) throw Error(ErrorKind::Config, "no room for an orthogonal part of b when k = m");
  if (psd && m != n) throw Error(ErrorKind::Config, "a PSD instance must be square");
}

RVector singular_profile(Index k, double kappa, double norm, Profile profile) {
  RVector s(static_cast<Eigen::Index>(k));
  for (Index r = 0; r < k; ++r) {
    const double f = k == 1 ? 0.0 : static_cast<double>(r) / static_cast<double>(k - 1);
    s(static_cast<Eigen::Index>(r)) =
        profile == Profile::Linear ? norm * (1.0 - (1.0 - 1.0 / kappa) * f) : norm * std::pow(kappa, -f);
  }
  s(static_cast<Eigen::Index>(k) - 1) = norm / kappa;
  return s;
}

CMatrix haar_isometry(Index n, Index k, Rng& rng) {
  std::normal_distribution<double> g;
  CMatrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = Complex(g(rng), g(rng));
  }
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(z.rows(), z.cols());
  // Multiply by the phases of diag(R) so the law is exactly Haar.
  const CMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

Instance generate(const InstanceSpec& spec) {
  spec.validate();
  Rng rng = RandomStreams(spec.seed).stream("instance");
  Instance out;
  out.spec = spec;
  out.sigma = singular_profile(spec.k, spec.kappa, spec.norm, spec.profile);
  if (spec.psd) {
    out.left = haar_isometry(spec.n, spec.k, rng);
    out.right = out.left;
  } else {
    out.left = haar_isometry(spec.m, spec.k, rng);
    out.right = haar_isometry(spec.n, spec.k, rng);
  }
  std::normal_distribution<double> g;
  const auto gaussian = [&](Eigen::Index len) {
    CVector v(len);
    for (Eigen::Index i = 0; i < len; ++i) v(i) = Complex(g(rng), g(rng));
    return v;
  };
  const double c = spec.b.weight();
  CVector in = out.left * gaussian(out.left.cols());
  in.normalize();
  CVector b = std::sqrt(c) * in;
  if (c < 1.0) {
    CVector h = gaussian(out.left.rows());
    h -= out.left * (out.left.adjoint() * h);
    h -= out.left * (out.left.adjoint() * h);
    h.normalize();
    b += std::sqrt(1.0 - c) * h;
  }
  out.b = std::move(b);
  return out;
}

Complex Instance::entry(Index i, Index j) const {
  Complex s{0.0, 0.0};
  for (Eigen::Index r = 0; r < sigma.size(); ++r) {
    s += left(static_cast<Eigen::Index>(i), r) * sigma(r) * std::conj(right(static_cast<Eigen::Index>(j), r));
  }
  return s;
}

CMatrix Instance::dense() const { return left * sigma.cast<Complex>().asDiagonal() * right.adjoint(); }

CVector Instance::solution() const {
  return right * (sigma.cwiseInverse().cast<Complex>().asDiagonal() * (left.adjoint() * b));
}

ComplexSampledMatrix Instance::sampled(bool with_transpose) const {
  return ComplexSampledMatrix::from_function(
      static_cast<Index>(left.rows()), static_cast<Index>(right.rows()),
      [this](Index i, Index j) { return entry(i, j); }, with_transpose);
}

Profile parse_profile(const std::string& s) {
  if (s == "linear") return Profile::Linear;
  if (s == "geometric") return Profile::Geometric;
  throw Error(ErrorKind::Config, "unknown singular-value profile '" + s + "'");
}

BMode parse_bmode(const std::string& s) {
  if (s == "in-range") return BMode::in_range();
  if (s == "orthogonal") return BMode::orthogonal();
  if (s.rfind("mixed", 0) == 0 && s.size() > 6) {
    std::string num = s.substr(6);
    if (!num.empty() && num.back() == ')') num.pop_back();
    try {
      std::size_t used = 0;
      const double c = std::stod(num, &used);
      if (used == num.size()) return BMode::mixed(c);
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorKind::Config, "unknown b-mode '" + s + "'");
}

std::string to_string(Profile p) { return p == Profile::Linear ? "linear" : "geometric"; }

std::string to_string(const BMode& b) {
  switch (b.kind) {
    case BMode::Kind::InRange: return "in-range";
    case BMode::Kind::Orthogonal: return "orthogonal";
    case BMode::Kind::Mixed: break;
  }
  return "mixed(" + std::to_string(b.c) + ")";
}

nlohmann::json to_json(const InstanceSpec& spec) {
  return {{"m", spec.m},         {"n", spec.n},         {"k", spec.k},
          {"kappa", spec.kappa}, {"norm", spec.norm},   {"profile", to_string(spec.profile)},
          {"b_mode", to_string(spec.b)}, {"c", spec.b.weight()}, {"psd", spec.psd},
          {"seed", spec.seed}};
}

}  // namespace qisolve
