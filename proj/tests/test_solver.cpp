#include "test_util.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace qisolve;
using namespace qisolve::testing;

namespace {

struct System {
  ComplexSampledMatrix a;
  ComplexSampledVector b;
  CVector x;  // A^+ b
};

System diag24() {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 4.0;
  CVector b(2);
  b << 2.0, 4.0;
  return {ComplexSampledMatrix::from_dense(a), ComplexSampledVector::from_dense(b), oracle::pinv_solve(a, b)};
}

System from_instance(const Instance& inst) {
  return {inst.sampled(), inst.sampled_b(), inst.solution()};
}

Instance unit_spectrum(Index n, Index k, BMode b, std::uint64_t seed) {
  InstanceSpec spec;
  spec.m = spec.n = n;
  spec.k = k;
  spec.kappa = 1.0;
  spec.b = b;
  spec.seed = seed;
  return generate(spec);
}

SolverConfig config(Index k, Index p, double eps, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.k = k;
  cfg.p = p;
  cfg.epsilon = eps;
  cfg.delta = 0.1;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Solver, Diag24Query) {
  const System sys = diag24();
  ASSERT_TRUE(sys.x.isApprox(CVector::Ones(2)));
  const double eps = 0.3;
  int good = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const Solution sol = prepare(sys.a, sys.b, config(2, 1000, eps, s));
    good += std::abs(query_entry(sol, 0) - 1.0) <= eps && std::abs(query_entry(sol, 1) - 1.0) <= eps;
  }
  EXPECT_GE(good, 16);
}

TEST(Solver, Diag24Sampling) {
  const System sys = diag24();
  const double eps = 0.3;
  int good = 0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const Solution sol = prepare(sys.a, sys.b, config(2, 1000, eps, s));
    Rng rng(100 + s);
    auto counts = histogram(2, 100000, [&] { return sample_solution(sol, rng); });
    good += oracle::empirical_tv(counts, RVector::Constant(2, 0.5)) <= 0.05 + eps;
  }
  EXPECT_GE(good, 8);
}

TEST(Solver, EmbeddedIdentity) {
  CMatrix a = CMatrix::Zero(6, 6);
  a(0, 0) = a(1, 1) = 1.0;
  CVector b = CVector::Zero(6);
  b(0) = 1.0;
  const auto sa = ComplexSampledMatrix::from_dense(a);
  const auto sb = ComplexSampledVector::from_dense(b);
  const double eps = 0.3;
  int good = 0;
  for (int s = 0; s < 20; ++s) {
    const Solution sol = prepare(sa, sb, config(2, 400, eps, s));
    bool ok = std::abs(sol.query(0) - 1.0) <= eps && std::abs(sol.query(1)) <= eps;
    for (Index j = 2; j < 6; ++j) ok = ok && sol.query(j) == Complex(0.0);  // zero columns
    good += ok;
  }
  EXPECT_GE(good, 16);
}

TEST(Solver, RankOneIsExact) {
  Rng gen(1);
  const CVector u = random_cvector(30, gen).normalized();
  const CVector v = random_cvector(20, gen).normalized();
  const double sigma = 2.0;
  const CMatrix a = sigma * u * v.adjoint();
  const auto sa = ComplexSampledMatrix::from_dense(a);
  const auto sb = ComplexSampledVector::from_dense(u);
  const Solution sol = prepare(sa, sb, config(1, 30, 0.01, 2));
  const CVector x = v / sigma;
  for (Index j = 0; j < 20; ++j) EXPECT_LE(std::abs(sol.query(j) - x(static_cast<Eigen::Index>(j))), 1e-10);
  Rng rng(3);
  auto counts = histogram(20, 100000, [&] { return sol.sample(rng); });
  EXPECT_TRUE(chi_square(counts, oracle::exact_distribution(v)).passes());
}

TEST(Solver, OrthogonalRightHandSide) {
  const Instance inst = unit_spectrum(100, 2, BMode::orthogonal(), 4);
  const System sys = from_instance(inst);
  ASSERT_LE((inst.dense().adjoint() * inst.b).norm(), 1e-10);
  for (int s = 0; s < 10; ++s) {
    const Solution sol = prepare(sys.a, sys.b, config(2, 200, 0.1, s));
    EXPECT_FALSE(sol.state().clamped);
    EXPECT_LE(sol.state().w.norm(), 2.0 * sol.state().component_target);
    Rng rng(s);
    EXPECT_EQ(error_kind_of([&] { sol.sample(rng); }), ErrorKind::ZeroSolution);
  }
}

TEST(Solver, ZeroRowSupportIsExactlyZero) {
  // b lives on rows where A is zero, so every estimator draw is zero.
  CMatrix a = CMatrix::Zero(4, 3);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  CVector b = CVector::Zero(4);
  b(3) = 1.0;
  const auto sa = ComplexSampledMatrix::from_dense(a);
  const auto sb = ComplexSampledVector::from_dense(b);
  const Solution sol = prepare(sa, sb, config(2, 50, 0.1, 5));
  EXPECT_EQ(sol.state().w, CVector::Zero(2));
  Rng rng(6);
  EXPECT_EQ(error_kind_of([&] { sol.sample(rng); }), ErrorKind::ZeroSolution);
}

TEST(Solver, Overlap) {
  const double eps = 0.1;
  struct Case {
    BMode mode;
    double expect;
  };
  for (const Case& c : {Case{BMode::in_range(), 1.0}, Case{BMode::orthogonal(), 0.0}, Case{BMode::mixed(0.25), 0.25}}) {
    const Instance inst = unit_spectrum(100, 2, c.mode, 7);
    const System sys = from_instance(inst);
    const Solution sol = prepare(sys.a, sys.b, config(2, 400, eps, 8));
    Rng rng(9);
    const double overlap = overlap_estimate(sol, sys.b, sol.state().params.front(), rng);
    EXPECT_NEAR(overlap, c.expect, eps) << to_string(c.mode);
  }
}

TEST(Solver, PsdDiag24) {
  const System sys = diag24();
  const double eps = 0.3;
  int good = 0;
  for (int s = 0; s < 20; ++s) {
    const SampledVectorAccess b(sys.b);
    const LedgerCounts before = sys.b.ledger().snapshot();
    const Solution sol = solve_psd(sys.a, b, config(2, 1000, eps, s));
    const LedgerCounts used = sys.b.ledger().snapshot() - before;
    EXPECT_EQ(used.samples, 0u);
    EXPECT_EQ(used.norm_queries, 0u);
    EXPECT_GT(used.entry_queries, 0u);
    good += std::abs(sol.query(0) - 1.0) <= eps && std::abs(sol.query(1) - 1.0) <= eps;
  }
  EXPECT_GE(good, 16);
}

TEST(Solver, PsdProjector) {
  Rng gen(10);
  const CVector u = random_cvector(30, gen).normalized();
  const auto sa = ComplexSampledMatrix::from_dense(CMatrix(u * u.adjoint()));
  const DenseVectorAccess b(u);
  const Solution sol = solve_psd(sa, b, config(1, 30, 0.05, 11));
  EXPECT_EQ(sol.state().exponent, 1);
  Complex phase = sol.query(0) / u(0);
  EXPECT_NEAR(std::abs(phase - 1.0), 0.0, 0.05);
  Rng rng(12);
  auto counts = histogram(30, 100000, [&] { return sol.sample(rng); });
  EXPECT_TRUE(chi_square(counts, oracle::exact_distribution(u)).passes());
}

TEST(Solver, PsdRejectsIndefinite) {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1.0;
  const auto sa = ComplexSampledMatrix::from_dense(a);
  const DenseVectorAccess b(CVector::Ones(2));
  EXPECT_EQ(error_kind_of([&] { solve_psd(sa, b, config(1, 10, 0.1, 0)); }), ErrorKind::NotPSD);
  const auto rect = ComplexSampledMatrix::from_dense(CMatrix::Ones(2, 3));
  EXPECT_EQ(error_kind_of([&] { solve_psd(rect, b, config(1, 10, 0.1, 0)); }), ErrorKind::NotPSD);
}

TEST(Solver, NormalEquationIdentity) {
  for (int t = 0; t < 100; ++t) {
    Rng gen(200 + t);
    const Index m = 3 + t % 7, n = 2 + t % 5;
    const Index rank = 1 + t % std::min(m, n);
    const CMatrix a = random_cmatrix(m, rank, gen) * random_cmatrix(rank, n, gen);
    const CVector b = random_cvector(m, gen);
    const CVector direct = oracle::pinv_solve(a, b);
    const CVector normal = oracle::pseudo_inverse(CMatrix(a.adjoint() * a)) * (a.adjoint() * b);
    EXPECT_LE((normal - direct).norm(), 1e-8 * direct.norm()) << "instance " << t;
  }
}

TEST(Solver, ConfigValidation) {
  const System sys = diag24();
  EXPECT_EQ(error_kind_of([&] { prepare(sys.a, sys.b, config(0, 10, 0.1, 0)); }), ErrorKind::Config);
  EXPECT_EQ(error_kind_of([&] { prepare(sys.a, sys.b, config(2, 1, 0.1, 0)); }), ErrorKind::Config);
  EXPECT_EQ(error_kind_of([&] { prepare(sys.a, sys.b, config(2, 10, -1.0, 0)); }), ErrorKind::Config);
  auto cfg = config(2, 10, 0.1, 0);
  cfg.delta = 1.5;
  EXPECT_EQ(error_kind_of([&] { prepare(sys.a, sys.b, cfg); }), ErrorKind::Config);
  const auto short_b = ComplexSampledVector::from_dense(CVector::Ones(3));
  EXPECT_EQ(error_kind_of([&] { prepare(sys.a, short_b, config(2, 10, 0.1, 0)); }), ErrorKind::Config);
}

TEST(Solver, BudgetsAndClamp) {
  const System sys = from_instance(unit_spectrum(60, 2, BMode::in_range(), 13));
  auto cfg = config(2, 100, 0.05, 14);
  const Solution full = prepare(sys.a, sys.b, cfg);
  EXPECT_FALSE(full.state().clamped);
  EXPECT_DOUBLE_EQ(full.state().component_target,
                   0.05 * std::pow(full.state().description.sigma_min(), 2) / std::sqrt(2.0));
  EXPECT_EQ(full.state().params[0].groups, EstimatorParams::groups_for(0.1 / 3.0));
  cfg.max_samples = 500;
  const Solution capped = prepare(sys.a, sys.b, cfg);
  EXPECT_TRUE(capped.state().clamped);
  for (const auto& p : capped.state().params) EXPECT_LE(p.total_samples(), 500u);
}

TEST(Solver, DeterministicAndReported) {
  const System sys = from_instance(unit_spectrum(80, 2, BMode::in_range(), 15));
  const auto cfg = config(2, 60, 0.1, 16);
  const Solution s1 = prepare(sys.a, sys.b, cfg);
  const Solution s2 = prepare(sys.a, sys.b, cfg);
  EXPECT_EQ(s1.state().w, s2.state().w);
  const auto j = report_json(s1);
  for (const char* key : {"digest", "config", "sigma_hat", "w", "w_prime", "ledger", "estimators", "clamped"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["ledger"]["total"].get<std::uint64_t>(), s1.state().ledger.total());
  EXPECT_GT(s1.state().ledger.samples, 0u);
}

TEST(Solver, ConcurrentQueriesAgree) {
  const System sys = from_instance(unit_spectrum(200, 3, BMode::in_range(), 17));
  const Solution sol = prepare(sys.a, sys.b, config(3, 80, 0.1, 18));
  const Solution fresh = prepare(sys.a, sys.b, config(3, 80, 0.1, 18));
  std::vector<Complex> parallel(200);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w) {
    pool.emplace_back([&, w] {
      for (Index j = static_cast<Index>(w); j < 200; j += 4) parallel[j] = sol.query(j);
    });
  }
  for (auto& t : pool) t.join();
  for (Index j = 0; j < 200; ++j) EXPECT_EQ(parallel[j], fresh.query(j));
}
