#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace qisolve;
using namespace qisolve::testing;

namespace {

CVector unit(Index n, Index i) {
  CVector e = CVector::Zero(static_cast<Eigen::Index>(n));
  e(static_cast<Eigen::Index>(i)) = 1.0;
  return e;
}

// Samples index 0 (a zero entry) on every other draw; otherwise behaves like `inner`.
class FlakyAccess final : public VectorAccess {
 public:
  FlakyAccess(CVector v, bool always_zero) : inner_(std::move(v)), always_zero_(always_zero) {}
  Index size() const override { return inner_.size(); }
  Complex query(Index i) const override { return i == 0 ? Complex(0.0) : inner_.query(i); }
  Index sample(Rng& rng) const override {
    if (always_zero_ || (flip_ = !flip_)) return 0;
    return inner_.sample(rng);
  }
  double norm_sq() const override { return inner_.norm_sq(); }

 private:
  DenseVectorAccess inner_;
  bool always_zero_;
  mutable bool flip_ = false;
};

// Claims unit norm but returns denormal entries, so Z overflows.
class TinyAccess final : public VectorAccess {
 public:
  Index size() const override { return 2; }
  Complex query(Index) const override { return Complex(1e-310); }
  Index sample(Rng&) const override { return 1; }
  double norm_sq() const override { return 1.0; }
};

}  // namespace

TEST(EstimatorParams, Formulas) {
  EXPECT_EQ(EstimatorParams::groups_for(0.05), 24u);  // ceil(8 ln 20)
  EXPECT_EQ(EstimatorParams::groups_for(0.5), 6u);
  EXPECT_EQ(EstimatorParams::inner(0.1, 0.1).group_size, 400u);
  const auto b = EstimatorParams::bilinear(0.5, 0.1, 2.0, 3.0, 4.0);
  EXPECT_EQ(b.group_size, 384u);  // 4 * 24 / 0.25
  EXPECT_EQ(b.groups, 19u);
  EXPECT_EQ(error_kind_of([] { EstimatorParams::groups_for(1.0); }), ErrorKind::Config);
  EXPECT_EQ(error_kind_of([] { EstimatorParams::inner(0.0, 0.1); }), ErrorKind::Config);
  EXPECT_EQ(error_kind_of([] { EstimatorParams::bilinear(1e-12, 0.1, 1e6, 1e6, 1e6); }),
            ErrorKind::EstimatorFailure);
}

TEST(EstimatorParams, ComponentwiseMedian) {
  const std::vector<Complex> xs{{1, 5}, {2, 1}, {3, 3}};
  EXPECT_EQ(componentwise_median(xs), Complex(2, 3));
  const std::vector<Complex> even{{1, 0}, {3, 2}};
  EXPECT_EQ(componentwise_median(even), Complex(2, 1));
}

TEST(EstimateInner, EqualBasisVectorsIsExact) {
  DenseVectorAccess x(unit(4, 0));
  Rng rng(1);
  const auto est = estimate_inner(x, x, EstimatorParams::inner(0.1, 0.1), rng);
  EXPECT_EQ(est.value, Complex(1.0));
}

TEST(EstimateInner, OrthogonalIsZero) {
  DenseVectorAccess x(unit(2, 0));
  DenseVectorAccess y(unit(2, 1));
  Rng rng(2);
  EXPECT_LE(std::abs(estimate_inner(x, y, EstimatorParams::inner(0.1, 0.1), rng).value), 0.1);
}

TEST(EstimateInner, RandomVectorsWithinTarget) {
  const double eps = 0.05;
  const auto params = EstimatorParams::inner(eps, 0.01);
  int within = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Rng gen(100 + t);
    const CVector xv = random_cvector(10, gen);
    const CVector yv = random_cvector(10, gen);
    DenseVectorAccess x(xv), y(yv);
    const Complex exact = xv.dot(yv);  // sum conj(x) y
    const Complex est = estimate_inner(x, y, params, gen).value;
    within += std::abs(est - exact) <= eps * xv.norm() * yv.norm();
  }
  EXPECT_GE(within, 990);
}

TEST(EstimateBilinear, IdentityBasisIsExact) {
  Rng rng(3);
  const auto id = ComplexSampledMatrix::from_dense(CMatrix::Identity(3, 3));
  MatrixEntries a(id);
  DenseVectorAccess e1(unit(3, 0)), e2(unit(3, 1));
  const auto params = EstimatorParams::bilinear(0.1, 0.1, 1.0, 1.0, 3.0);
  EXPECT_EQ(estimate_bilinear(e1, a, e1, params, rng).value, Complex(1.0));
  EXPECT_LE(std::abs(estimate_bilinear(e1, a, e2, params, rng).value), 0.1);
}

TEST(EstimateBilinear, RandomInstancesWithinTarget) {
  int within = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Rng gen(500 + t);
    const CMatrix ad = random_cmatrix(6, 6, gen);
    const CVector xv = random_cvector(6, gen), yv = random_cvector(6, gen);
    const auto sa = ComplexSampledMatrix::from_dense(ad);
    MatrixEntries a(sa);
    DenseVectorAccess x(xv), y(yv);
    const double eps = 0.02 * xv.norm() * yv.norm() * ad.norm();
    const auto params = EstimatorParams::bilinear(eps, 0.01, xv.squaredNorm(), yv.squaredNorm(), ad.squaredNorm());
    const Complex exact = xv.dot(ad * yv);
    within += std::abs(estimate_bilinear(x, a, y, params, gen).value - exact) <= eps;
  }
  EXPECT_GE(within, 198);
}

TEST(EstimateBilinear, ExpectationIsXDaggerAY) {
  // A non-Hermitian, x != y: x^dag A y and y^dag A x differ, the estimate must track the former.
  Rng gen(4);
  const CMatrix ad = random_cmatrix(5, 5, gen);
  const CVector xv = random_cvector(5, gen), yv = random_cvector(5, gen);
  const auto sa = ComplexSampledMatrix::from_dense(ad);
  MatrixEntries a(sa);
  DenseVectorAccess x(xv), y(yv);
  const Complex forward = xv.dot(ad * yv);
  const Complex swapped = yv.dot(ad * xv);
  const double eps = 0.01 * xv.norm() * yv.norm() * ad.norm();
  ASSERT_GT(std::abs(forward - swapped), 3 * eps);
  const auto params = EstimatorParams::bilinear(eps, 0.01, xv.squaredNorm(), yv.squaredNorm(), ad.squaredNorm());
  EXPECT_LE(std::abs(estimate_bilinear(x, a, y, params, gen).value - forward), eps);
}

TEST(EstimateBilinear, SingleDrawMeanIsUnbiased) {
  const std::size_t draws = 1000000;
  EstimatorParams mean_only;
  mean_only.groups = 1;
  mean_only.group_size = draws;
  for (int t = 0; t < 20; ++t) {
    Rng gen(700 + t);
    const Index m = 3 + t % 5, n = 2 + t % 4;
    const CMatrix ad = random_cmatrix(m, n, gen);
    const CVector xv = random_cvector(m, gen), yv = random_cvector(n, gen);
    const auto sa = ComplexSampledMatrix::from_dense(ad);
    MatrixEntries a(sa);
    DenseVectorAccess x(xv), y(yv);
    const Complex exact = xv.dot(ad * yv);
    // E|Z|^2 = ||x||^2 ||y||^2 ||A||_F^2 exactly.
    const double var = xv.squaredNorm() * yv.squaredNorm() * ad.squaredNorm() - std::norm(exact);
    const double se = std::sqrt(var / static_cast<double>(draws));
    EXPECT_LE(std::abs(estimate_bilinear(x, a, y, mean_only, gen).value - exact), 5.0 * se) << "instance " << t;
  }
}

TEST(Estimators, FailureFrequencyAtMostTwiceDelta) {
  const double delta = 0.1;
  int inner_fail = 0, bilinear_fail = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Rng gen(9000 + t);
    const CVector xv = random_cvector(20, gen), yv = random_cvector(20, gen);
    const CMatrix ad = random_cmatrix(20, 20, gen);
    DenseVectorAccess x(xv), y(yv);
    const auto sa = ComplexSampledMatrix::from_dense(ad);
    MatrixEntries a(sa);
    const double eps_in = 0.1;
    inner_fail += std::abs(estimate_inner(x, y, EstimatorParams::inner(eps_in, delta), gen).value - xv.dot(yv)) >
                  eps_in * xv.norm() * yv.norm();
    const double eps_bi = 0.1 * xv.norm() * yv.norm() * ad.norm();
    const auto params = EstimatorParams::bilinear(eps_bi, delta, xv.squaredNorm(), yv.squaredNorm(), ad.squaredNorm());
    bilinear_fail += std::abs(estimate_bilinear(x, a, y, params, gen).value - xv.dot(ad * yv)) > eps_bi;
  }
  EXPECT_LE(inner_fail, 2 * delta * trials);
  EXPECT_LE(bilinear_fail, 2 * delta * trials);
}

TEST(Estimators, DeterministicGivenSeed) {
  Rng gen(5);
  const CVector xv = random_cvector(30, gen), yv = random_cvector(30, gen);
  DenseVectorAccess x(xv), y(yv);
  const auto params = EstimatorParams::inner(0.2, 0.1);
  Rng r1(77), r2(77);
  EXPECT_EQ(estimate_inner(x, y, params, r1).value, estimate_inner(x, y, params, r2).value);
}

TEST(Estimators, GuardResamplesZeroEntries) {
  CVector v(3);
  v << 0.0, 1.0, Complex(0, 2);
  FlakyAccess x(v, false);
  Rng rng(6);
  const auto est = estimate_inner(x, x, EstimatorParams::inner(0.1, 0.1), rng);
  EXPECT_GT(est.guard_hits, 0u);
  EXPECT_NEAR(std::abs(est.value - Complex(5.0)), 0.0, 1e-12);

  FlakyAccess dead(v, true);
  EXPECT_EQ(error_kind_of([&] { estimate_inner(dead, dead, EstimatorParams::inner(0.1, 0.1), rng); }),
            ErrorKind::ZeroNormSample);
}

TEST(Estimators, OverflowIsReported) {
  TinyAccess x;
  CVector big(2);
  big << 1e300, 1e300;
  DenseVectorAccess y(big);
  Rng rng(7);
  EXPECT_EQ(error_kind_of([&] { estimate_inner(x, y, EstimatorParams::inner(0.5, 0.1), rng); }),
            ErrorKind::NonfiniteSample);
}

TEST(Estimators, ZeroVectorRejected) {
  DenseVectorAccess zero(CVector::Zero(3));
  DenseVectorAccess y(unit(3, 0));
  Rng rng(8);
  EXPECT_EQ(error_kind_of([&] { estimate_inner(zero, y, EstimatorParams::inner(0.5, 0.1), rng); }),
            ErrorKind::ZeroNormSample);
}

TEST(ThinProduct, SingleColumnAlwaysAccepts) {
  Rng gen(9);
  DenseThinMatrix m(random_cmatrix(12, 1, gen));
  const std::vector<Complex> v{Complex(1.0)};
  ThinProductSampler s(m, v);
  RejectionStats stats;
  Rng rng(10);
  auto counts = histogram(12, 50000, [&] { return s.sample(rng, &stats); });
  EXPECT_EQ(stats.trials, stats.accepted);
  EXPECT_TRUE(chi_square(counts, oracle::exact_distribution(m.matrix().col(0))).passes());
}

TEST(ThinProduct, IdentityColumns) {
  DenseThinMatrix m(CMatrix::Identity(4, 2));
  const std::vector<Complex> v{3.0, 4.0};
  ThinProductSampler s(m, v);
  Rng rng(11);
  auto counts = histogram(4, 100000, [&] { return s.sample(rng); });
  RVector p(4);
  p << 9.0 / 25.0, 16.0 / 25.0, 0.0, 0.0;
  EXPECT_TRUE(chi_square(counts, p).passes());
}

TEST(ThinProduct, RandomMatchesExactLaw) {
  Rng gen(12);
  DenseThinMatrix m(random_cmatrix(16, 3, gen));
  const CVector vv = random_cvector(3, gen);
  const std::vector<Complex> v(vv.data(), vv.data() + 3);
  const RVector exact = oracle::exact_distribution(m.matrix() * vv);
  Rng rng(13);
  ThinProductSampler s(m, v);
  auto counts = histogram(16, 100000, [&] { return s.sample(rng); });
  EXPECT_LE(oracle::empirical_tv(counts, exact), 0.02);
  EXPECT_TRUE(chi_square(counts, exact).passes());
}

TEST(ThinProduct, AcceptanceProbabilityInUnitInterval) {
  // Enumerate every row of small random instances and evaluate the acceptance formula.
  for (int t = 0; t < 200; ++t) {
    Rng gen(2000 + t);
    const Index n = 3 + t % 6, k = 1 + t % 4;
    const CMatrix m = random_cmatrix(n, k, gen);
    const CVector v = random_cvector(k, gen);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const Complex value = m.row(i) * v;
      const double weighted = m.row(i).transpose().cwiseProduct(v).cwiseAbs2().sum();
      const double accept = std::norm(value) / (static_cast<double>(k) * weighted);
      EXPECT_GE(accept, 0.0);
      EXPECT_LE(accept, 1.0 + 1e-12);
    }
  }
}

TEST(ThinProduct, ZeroProductHitsCap) {
  CMatrix mm(2, 2);
  mm << 1.0, 1.0, 1.0, 1.0;
  DenseThinMatrix m(mm);
  const std::vector<Complex> v{1.0, -1.0};
  Rng rng(14);
  EXPECT_EQ(error_kind_of([&] { sample_thin_product(m, v, rng); }), ErrorKind::IterationCapExceeded);
  const std::vector<Complex> zero{0.0, 0.0};
  EXPECT_EQ(error_kind_of([&] { sample_thin_product(m, zero, rng); }), ErrorKind::ZeroNormSample);
}

TEST(ThinProduct, IsometryCap) {
  EXPECT_EQ(isometry_rejection_cap(2, 0.5), 1800u);  // 100 * 2 * 9
  EXPECT_EQ(isometry_rejection_cap(3, 0.0), 300u);
  EXPECT_EQ(error_kind_of([] { isometry_rejection_cap(2, 1.0); }), ErrorKind::Config);
}

TEST(ThinProduct, IsometrySamplerMatchesPlainOnIsometry) {
  Rng gen(15);
  const CMatrix q = Eigen::HouseholderQR<CMatrix>(random_cmatrix(20, 3, gen)).householderQ() * CMatrix::Identity(20, 3);
  DenseThinMatrix m(q);
  const CVector vv = random_cvector(3, gen);
  const std::vector<Complex> v(vv.data(), vv.data() + 3);
  Rng r1(16), r2(16);
  for (int t = 0; t < 1000; ++t) {
    ASSERT_EQ(sample_thin_product_isometry(m, v, r1, 0.0), sample_thin_product(m, v, r2));
  }
}

TEST(ThinProduct, BasisCoefficientGivesColumnLaw) {
  Rng gen(17);
  DenseThinMatrix m(random_cmatrix(10, 3, gen));
  const std::vector<Complex> v{0.0, 1.0, 0.0};
  Rng rng(18);
  auto counts = histogram(10, 100000, [&] { return sample_thin_product_isometry(m, v, rng, 0.5); });
  EXPECT_TRUE(chi_square(counts, oracle::exact_distribution(m.matrix().col(1))).passes());
}

TEST(ThinProduct, SketchFactorLawMatchesDenseProduct) {
  InstanceSpec spec;
  spec.m = spec.n = 200;
  spec.k = 2;
  spec.kappa = 1.0;
  spec.seed = 19;
  const Instance inst = generate(spec);
  const auto a = inst.sampled();
  const auto d = subsample(a, 2, 400, 20);
  DenseThinMatrix v(dense_v(d, inst.dense()));
  Rng gen(21);
  const CVector coeff = random_cvector(2, gen);
  const std::vector<Complex> c(coeff.data(), coeff.data() + 2);
  const RVector exact = oracle::exact_distribution(v.matrix() * coeff);
  Rng rng(22);
  auto counts = histogram(200, 100000, [&] { return sample_thin_product_isometry(v, c, rng, 0.5); });
  EXPECT_LE(oracle::empirical_tv(counts, exact), 0.05);
}

TEST(TvBound, Examples) {
  CVector x(2), y(2);
  x << 1.0, 0.0;
  y << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(tv_distance_bound_check(x, x), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance_bound_check(x, y), 1.0);
}

TEST(TvBound, SmallPerturbations) {
  for (int t = 0; t < 1000; ++t) {
    Rng gen(3000 + t);
    const CVector x = random_cvector(1 + t % 40, gen);
    const CVector dir = random_cvector(x.size(), gen);
    const CVector y = x + 0.01 * x.norm() * dir.normalized();
    EXPECT_LE(tv_distance_bound_check(x, y), 0.02);
  }
}

TEST(TvBound, InequalityOnRandomPairs) {
  std::normal_distribution<double> scale;
  for (int t = 0; t < 1000; ++t) {
    Rng gen(4000 + t);
    const CVector x = random_cvector(1 + t % 30, gen);
    const CVector y = x + std::exp(scale(gen)) * random_cvector(x.size(), gen);
    EXPECT_LE(tv_distance_bound_check(x, y), 2.0 * (x - y).norm() / x.norm() + 1e-12);
  }
}
