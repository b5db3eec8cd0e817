#pragma once

#include <qisolve/sampled_matrix.hpp>

#include <json.hpp>

#include <string>

namespace qisolve {

enum class Profile { Linear, Geometric };

/// How b relates to the column space of A: b = sqrt(c) b_A + sqrt(1 - c) b_perp with unit
/// b_A in col(A) and unit b_perp orthogonal to it. In-range is c = 1, orthogonal is c = 0.
struct BMode {
  enum class Kind { InRange, Mixed, Orthogonal };
  Kind kind = Kind::InRange;
  double c = 1.0;

  double weight() const noexcept {
    return kind == Kind::InRange ? 1.0 : kind == Kind::Orthogonal ? 0.0 : c;
  }
  static BMode in_range() { return {Kind::InRange, 1.0}; }
  static BMode orthogonal() { return {Kind::Orthogonal, 0.0}; }
  static BMode mixed(double c) { return {Kind::Mixed, c}; }
};

struct InstanceSpec {
  Index m = 100;
  Index n = 100;
  Index k = 1;
  double kappa = 1.0;  // sigma_max / smallest nonzero sigma
  double norm = 1.0;   // sigma_max
  Profile profile = Profile::Linear;
  BMode b = BMode::in_range();
  bool psd = false;  // A = U diag(sigma) U^dagger, requires m = n
  std::uint64_t seed = 0;

  void validate() const;
};

/// Low-rank A = U diag(sigma) V^dagger held in factored form, plus b.
struct Instance {
  InstanceSpec spec;
  CMatrix left;   // m x k, orthonormal columns
  CMatrix right;  // n x k, orthonormal columns
  RVector sigma;  // k, non-increasing
  CVector b;      // unit norm unless b is zero

  Complex entry(Index i, Index j) const;
  CMatrix dense() const;
  /// A^+ b from the factors.
  CVector solution() const;
  ComplexSampledMatrix sampled(bool with_transpose = false) const;
  ComplexSampledVector sampled_b() const { return ComplexSampledVector::from_dense(b); }
};

/// Singular values spanning [norm / kappa, norm]: linear or geometric spacing.
RVector singular_profile(Index k, double kappa, double norm, Profile profile);

/// n x k matrix with Haar-distributed orthonormal columns (QR of a complex Gaussian matrix).
CMatrix haar_isometry(Index n, Index k, Rng& rng);

/// Builds the instance from the "instance" stream of spec.seed.
Instance generate(const InstanceSpec& spec);

Profile parse_profile(const std::string& s);
BMode parse_bmode(const std::string& s);  // "in-range", "orthogonal", "mixed(0.25)" or "mixed:0.25"
std::string to_string(Profile p);
std::string to_string(const BMode& b);
nlohmann::json to_json(const InstanceSpec& spec);

}  // namespace qisolve
