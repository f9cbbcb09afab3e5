#include "dmk/harness.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dmk;

namespace {

constexpr double kPi = std::numbers::pi;

double angle(const Vec3& x) { return std::atan2(x.y(), x.x()); }

GridPtr circle() { return build_grid(2, 128); }

// Ellipse support and its θ-derivative.
struct EllipseSupport {
  double a, b;
  double h(double t) const { return oracle::ellipse_support(a, b, t); }
  double dh(double t) const { return (b * b - a * a) * std::sin(t) * std::cos(t) / h(t); }
};

// Area of the p-combination (1-λ)E1 +_p λE2, p ≥ 1, as (1/2)∫(h² - h'²) on a dense trapezoid rule.
double combination_area_oracle(const EllipseSupport& e1, const EllipseSupport& e2, double lambda, double p) {
  auto integrand = [&](double t) {
    const double h1 = e1.h(t), h2 = e2.h(t);
    const double m = (1.0 - lambda) * std::pow(h1, p) + lambda * std::pow(h2, p);
    const double h = std::pow(m, 1.0 / p);
    const double dm = (1.0 - lambda) * p * std::pow(h1, p - 1.0) * e1.dh(t) + lambda * p * std::pow(h2, p - 1.0) * e2.dh(t);
    const double dh = std::pow(m, 1.0 / p - 1.0) * dm / p;
    return h * h - dh * dh;
  };
  return 0.5 * oracle::trapezoid(integrand, 20000);
}

ScalarField cosine_field(GridPtr g, double amp, int k) {
  return ScalarField::sample(g, [&](const Vec3& x) { return 1.0 + amp * std::cos(k * angle(x)); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Reports and the pool

TEST(InequalityReport, MinMarginTracksInstances) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    InequalityReport r;
    double expected = std::numeric_limits<double>::infinity();
    const int m = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < m; ++i) {
      const double v = u(rng);
      expected = std::min(expected, v);
      r.add({static_cast<std::uint64_t>(rng() % 100), 0.5, v, false, "bm"});
    }
    EXPECT_EQ(r.min_margin, expected);
  }
}

TEST(InequalityReport, RejectsNonFiniteMarginsAndMismatchedMerges) {
  InequalityReport r;
  EXPECT_THROW(r.add({1, 0.5, std::nan(""), false, "bm"}), std::runtime_error);
  InequalityReport other;
  other.p = 2.0;
  EXPECT_THROW(r.merge(other), std::invalid_argument);
}

TEST(InequalityReport, SortOrdersBySeedThenLambda) {
  InequalityReport r;
  r.add({3, 0.75, 1.0, false, "bm"});
  r.add({1, 0.5, 2.0, false, "bm"});
  r.add({3, 0.25, 3.0, false, "bm"});
  r.add({1, 0.25, 4.0, false, "bm"});
  r.sort();
  ASSERT_EQ(r.instances.size(), 4u);
  EXPECT_EQ(r.instances[0].margin, 4.0);
  EXPECT_EQ(r.instances[1].margin, 2.0);
  EXPECT_EQ(r.instances[2].margin, 3.0);
  EXPECT_EQ(r.instances[3].margin, 1.0);
  EXPECT_EQ(r.seeds(), (std::vector<std::uint64_t>{1, 3}));
}

TEST(RunPool, ResultsDoNotDependOnThreadCount) {
  std::function<double(std::size_t)> fn = [](std::size_t i) { return std::sin(static_cast<double>(i)); };
  const auto one = run_pool<double>(100, 1, fn);
  const auto four = run_pool<double>(100, 4, fn);
  EXPECT_EQ(one, four);
  EXPECT_TRUE(run_pool<double>(0, 3, fn).empty());
}

TEST(RunPool, RethrowsTaskExceptions) {
  std::function<int(std::size_t)> fn = [](std::size_t i) {
    if (i == 7) throw std::runtime_error("task 7");
    return static_cast<int>(i);
  };
  EXPECT_THROW(run_pool<int>(20, 3, fn), std::runtime_error);
}

// ---------------------------------------------------------------------------
// Brunn-Minkowski

TEST(CheckBM, EqualBodiesGiveZeroMargin) {
  const auto g = circle();
  const ConvexBody K = random_symmetric_body(g, 5, 0.3, 4);
  const auto r = check_bm(K, K, 1.5, 2.0, {0.25, 0.5, 0.75});
  for (const auto& inst : r.instances) EXPECT_LE(std::abs(inst.margin), 1e-10);
}

TEST(CheckBM, BallDilatesGiveEquality) {
  const auto g = circle();
  const auto r = check_bm(ball(g, 1.0), ball(g, 2.0), 1.0, 2.0, {0.5});
  ASSERT_EQ(r.instances.size(), 1u);
  EXPECT_LE(std::abs(r.min_margin), 1e-10);
  EXPECT_TRUE(r.instances[0].equality_case);
}

TEST(CheckBM, MatchesAreaOracleForEllipses) {
  const auto g = build_grid(2, 256);
  const EllipseSupport e1{1.0, 0.7}, e2{0.8, 1.3};
  const ConvexBody K = ellipsoid(g, {e1.a, e1.b});
  const ConvexBody L = ellipsoid(g, {e2.a, e2.b});
  for (double p : {1.0, 2.0}) {
    for (double l : {0.25, 0.5, 0.75}) {
      const double e = p / 2.0;
      const double expected = std::pow(combination_area_oracle(e1, e2, l, p), e) -
                              (1.0 - l) * std::pow(kPi * e1.a * e1.b, e) - l * std::pow(kPi * e2.a * e2.b, e);
      const auto r = check_bm(K, L, p, 2.0, {l});
      EXPECT_NEAR(r.min_margin, expected, 1e-9) << "p=" << p << " lambda=" << l;
      EXPECT_GT(expected, 0.0);
    }
  }
}

TEST(CheckBM, RandomPairsInProvenRegime) {
  const auto g = circle();
  const ConvexBody K = random_symmetric_body(g, 3, 0.3, 4);
  const ConvexBody L = random_symmetric_body(g, 4, 0.3, 4);
  const auto r = check_bm(K, L, 1.5, 2.0, {0.25, 0.5, 0.75});
  EXPECT_EQ(r.instances.size(), 3u);
  EXPECT_GE(r.min_margin, -1e-9);
}

TEST(CheckBM, BatchOverCorpusHoldsForPAtLeastOne) {
  const auto g = circle();
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5};
  for (double p : {1.0, 2.0}) {
    for (double q : {0.5, 2.0}) {
      const auto r = bm_batch(g, p, q, seeds, {0.25, 0.5, 0.75});
      EXPECT_EQ(r.instances.size(), 18u);
      EXPECT_EQ(r.seeds(), seeds);
      EXPECT_GE(r.min_margin, -1e-9) << "p=" << p << " q=" << q;
    }
  }
}

TEST(CheckBM, RejectsInvalidInput) {
  const auto g = circle();
  const ConvexBody K = ball(g, 1.0);
  const ConvexBody A = random_body(g, 2, 0.2, 3);
  EXPECT_THROW(check_bm(K, K, 0.0, 1.0, {0.5}), std::invalid_argument);
  EXPECT_THROW(check_bm(K, K, 1.0, 2.5, {0.5}), std::invalid_argument);
  EXPECT_THROW(check_bm(K, K, 1.0, 1.0, {1.5}), std::invalid_argument);
  EXPECT_THROW(check_bm(K, A, 1.0, 1.0, {0.5}), std::invalid_argument);
  EXPECT_THROW(check_bm(K, ball(build_grid(2, 64), 1.0), 1.0, 1.0, {0.5}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Minkowski

TEST(CheckMinkowski, EqualBodiesAndDilatesGiveZero) {
  const auto g = circle();
  const ConvexBody K = random_symmetric_body(g, 8, 0.4, 6);
  EXPECT_LE(std::abs(check_minkowski(K, K, 0.5, 1.5).min_margin), 1e-10);
  for (double t : {0.6, 1.7, 3.0}) {
    const auto r = check_minkowski(K, K.scaled(t), 0.5, 1.5);
    EXPECT_LE(std::abs(r.min_margin), 1e-9) << "t=" << t;
    EXPECT_TRUE(r.instances[0].equality_case);
  }
}

TEST(CheckMinkowski, BallAgainstEllipseOracle) {
  const auto g = build_grid(2, 256);
  for (auto [a, b] : {std::pair{1.2, 0.9}, std::pair{0.6, 1.5}}) {
    const ConvexBody L = ellipsoid(g, {a, b});
    for (double p : {0.3, 0.7}) {
      for (double q : {1.5, 2.0}) {
        const double lhs =
            std::pow(oracle::trapezoid([&](double t) { return std::pow(oracle::ellipse_support(a, b, t), p); }, 20000) /
                         (2.0 * kPi),
                     1.0 / p);
        const double vl = 0.5 * oracle::trapezoid([&](double t) { return std::pow(oracle::ellipse_radial(a, b, t), q); }, 20000);
        const double rhs = std::pow(vl / kPi, 1.0 / q);
        EXPECT_NEAR(check_minkowski(ball(g, 1.0), L, p, q).min_margin, lhs - rhs, 1e-9)
            << "a=" << a << " p=" << p << " q=" << q;
      }
    }
  }
}

TEST(CheckMinkowski, NearBallKAgainstRandomL) {
  const auto g = circle();
  const ConvexBody K = ConvexBody::from_support(cosine_field(g, 0.03, 2));
  const ConvexBody L = random_symmetric_body(g, 9, 0.4, 4);
  EXPECT_GE(check_minkowski(K, L, 0.5, 1.5).min_margin, -1e-9);
}

TEST(CheckMinkowski, BatchNearTheBall) {
  const auto g = circle();
  const std::vector<std::uint64_t> seeds = {10, 11, 12, 13, 14, 15, 16, 17};
  for (double p : {0.3, 0.7}) {
    const auto r = minkowski_batch(g, p, 1.5, seeds);
    EXPECT_EQ(r.instances.size(), seeds.size());
    EXPECT_GE(r.min_margin, -1e-9);
  }
}

TEST(NearBallBody, StaysWithinRadius) {
  const auto g = circle();
  for (std::uint64_t s = 0; s < 30; ++s) {
    const ConvexBody K = near_ball_body(g, s, 0.05);
    EXPECT_LE(std::abs(K.support().max() - 1.0), 0.05 + 1e-12);
    EXPECT_LE(std::abs(K.support().min() - 1.0), 0.05 + 1e-12);
    EXPECT_TRUE(K.symmetric());
    EXPECT_TRUE(K.smooth());
  }
}

// ---------------------------------------------------------------------------
// Equivalence

TEST(EquivalenceProbe, EqualBodiesGiveConstantF) {
  const auto g = circle();
  const ConvexBody K = random_symmetric_body(g, 21, 0.3, 4);
  const auto e = equivalence_probe(K, K, 0.5, 1.5);
  ASSERT_EQ(e.f.size(), 13u);
  for (double v : e.f) EXPECT_NEAR(v, e.f[0], 1e-12 * e.f[0]);
  EXPECT_LE(std::abs(e.concavity_margin), 1e-10);
  EXPECT_LE(std::abs(e.fprime_analytic), 1e-10);
  EXPECT_LE(std::abs(e.derivative_gap), 1e-10);
}

TEST(EquivalenceProbe, DilateFamilyIsAffine) {
  const auto g = circle();
  const ConvexBody K = random_symmetric_body(g, 22, 0.3, 4);
  const double p = 1.0, q = 2.0;
  const auto e = equivalence_probe(K, K.scaled(2.0), p, q);
  const double f0 = std::pow(dual_quermassintegral(K, q), p / q);
  for (std::size_t i = 0; i < e.f.size(); ++i) {
    const double l = e.lambdas[i];
    EXPECT_NEAR(e.f[i], f0 * ((1.0 - l) + l * std::pow(2.0, p)), 1e-9);
  }
  EXPECT_LE(std::abs(e.concavity_margin), 1e-9);
  EXPECT_NEAR(e.fprime_analytic, f0 * (std::pow(2.0, p) - 1.0), 1e-8);
}

TEST(EquivalenceProbe, EllipseDerivativeOracle) {
  const auto g = build_grid(2, 256);
  const EllipseSupport e1{1.0, 0.8}, e2{0.7, 1.2};
  const auto e = equivalence_probe(ellipsoid(g, {e1.a, e1.b}), ellipsoid(g, {e2.a, e2.b}), 1.0, 2.0);
  // f = area^{1/2}; area'(0) = ∫ h1(h2 - h1) - h1'(h2' - h1').
  const double area0 = kPi * e1.a * e1.b;
  const double darea = oracle::trapezoid(
      [&](double t) { return e1.h(t) * (e2.h(t) - e1.h(t)) - e1.dh(t) * (e2.dh(t) - e1.dh(t)); }, 20000);
  EXPECT_NEAR(e.fprime_analytic, darea / (2.0 * std::sqrt(area0)), 1e-9);
  for (std::size_t i = 0; i < e.f.size(); ++i)
    EXPECT_NEAR(e.f[i], std::sqrt(combination_area_oracle(e1, e2, e.lambdas[i], 1.0)), 1e-9);
}

TEST(EquivalenceProbe, RandomPairDerivativeAndGap) {
  const auto g = circle();
  const ConvexBody K = near_ball_body(g, 30, 0.05);
  const ConvexBody L = random_symmetric_body(g, 31, 0.3, 4);
  for (double p : {0.5, 1.0, 2.0}) {
    const auto e = equivalence_probe(K, L, p, 1.5);
    EXPECT_GE(e.concavity_margin, -1e-8) << "p=" << p;
    EXPECT_GE(e.derivative_gap, -1e-8) << "p=" << p;
    EXPECT_LE(e.fprime_relative_error, 1e-5) << "p=" << p;
    // 36 midpoint triples plus the derivative gap.
    EXPECT_EQ(e.report.instances.size(), 37u);
  }
}

TEST(EquivalenceStepOne, MinkowskiMarginsImplyBM) {
  const auto g = circle();
  int implied = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const ConvexBody K = near_ball_body(g, 40 + s, 0.05);
    const ConvexBody L = near_ball_body(g, 60 + s, 0.05);
    for (double p : {0.5, 1.5}) {
      const auto c = equivalence_step_one(K, L, p, 1.5, 0.5);
      if (c.mink_k >= 0.0 && c.mink_l >= 0.0) {
        ++implied;
        EXPECT_GE(c.bm, -1e-8) << "seed=" << s << " p=" << p;
      }
    }
  }
  EXPECT_GT(implied, 0);
}

// ---------------------------------------------------------------------------
// Jensen

TEST(JensenContainment, LinearCombinationIsEquality) {
  const auto g = circle();
  const ConvexBody K = random_symmetric_body(g, 1, 0.3, 4);
  const ConvexBody L = random_symmetric_body(g, 2, 0.3, 4);
  EXPECT_LE(std::abs(jensen_margin(K, L, 1.0, 0.4)), 1e-12);
  EXPECT_TRUE(jensen_containment(K, L, 1.0, 0.4));
  EXPECT_LE(std::abs(jensen_margin(K, K, 2.5, 0.4)), 1e-12);
}

TEST(JensenContainment, BallAndSquareIsStrict) {
  const auto g = circle();
  const ScalarField sq = ScalarField::sample(g, [](const Vec3& x) { return std::abs(x.x()) + std::abs(x.y()); });
  const ConvexBody square = ConvexBody::from_support(sq);
  const ConvexBody B = ball(g, 1.0);
  EXPECT_TRUE(jensen_containment(B, square, 2.0, 0.5));
  const ConvexBody Q = lp_combination(B, square, 0.5, 2.0);
  double gap = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) gap = std::max(gap, Q.support()[i] - 0.5 * (1.0 + sq[i]));
  EXPECT_GT(gap, 1e-3);
}

TEST(JensenContainment, HoldsOnRandomPairs) {
  const auto g = circle();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvexBody K = corpus_body(g, rng());
    const ConvexBody L = corpus_body(g, rng());
    const double p = 1.0 + 3.0 * u(rng);
    EXPECT_TRUE(jensen_containment(K, L, p, u(rng))) << "trial " << trial;
  }
  EXPECT_THROW(jensen_containment(ball(g, 1.0), ball(g, 1.0), 0.5, 0.5), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Uniqueness

TEST(UniquenessProbe, UnitDataReturnsTheBallFromEveryStart) {
  const auto g = circle();
  const auto r = uniqueness_probe(ScalarField::constant(g, 1.0), ProblemParams::make(2, 1.5, 2.0), 5);
  ASSERT_EQ(r.solves.size(), 5u);
  EXPECT_FALSE(r.inconclusive);
  EXPECT_TRUE(r.unique);
  EXPECT_LE(r.max_distance, 1e-9);
  EXPECT_EQ(r.initializations[0], "ball");
}

TEST(UniquenessProbe, CosineDataIsUnique) {
  const auto g = circle();
  const auto r = uniqueness_probe(cosine_field(g, 0.05, 2), ProblemParams::make(2, 1.5, 2.0), 5);
  EXPECT_FALSE(r.inconclusive);
  EXPECT_TRUE(r.unique) << r.max_distance;
}

TEST(UniquenessProbe, EvenHarmonicDataOnTheSphere) {
  const auto g = build_grid(3, 24);
  const auto y = g->harmonic(2, 0);
  double s = 0.0;
  for (double v : y) s = std::max(s, std::abs(v));
  std::vector<double> f(y.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 + 0.05 * y[i] / s;
  const auto r = uniqueness_probe(ScalarField(g, f), ProblemParams::make(3, 0.5, 3.0), 5);
  EXPECT_FALSE(r.inconclusive);
  EXPECT_LE(r.max_distance, 1e-6);
}

TEST(UniquenessProbe, RejectsDataAndParametersOutsideTheRegimes) {
  const auto g = circle();
  EXPECT_THROW(uniqueness_probe(cosine_field(g, 0.2, 2), ProblemParams::make(2, 1.5, 2.0), 3), std::invalid_argument);
  EXPECT_THROW(uniqueness_probe(ScalarField::constant(g, 1.0), ProblemParams::make(2, 0.5, 1.5), 3),
               std::invalid_argument);
  EXPECT_THROW(uniqueness_probe(ScalarField::constant(g, 1.0), ProblemParams::make(2, 1.5, 2.0), 1),
               std::invalid_argument);
}

// ---------------------------------------------------------------------------
// C⁰ audit

TEST(C0Audit, UnitLambdaGivesTheBall) {
  const auto g = circle();
  const auto r = c0_audit(g, 1.0, ProblemParams::make(2, 0.5, 1.8), 3, 1);
  EXPECT_EQ(r.failures, 0);
  EXPECT_NEAR(r.c_emp, 1.0, 1e-10);
  for (const auto& a : r.instances) EXPECT_NEAR(a.volume, kPi, 1e-10);
}

TEST(C0Audit, DensityBoundsAndMinimumEstimate) {
  const auto g = build_grid(2, 256);
  const ProblemParams P = ProblemParams::make(2, 0.5, 1.8);
  const double lambda = 1.2;
  const auto r = c0_audit(g, lambda, P, 6, 100);
  EXPECT_EQ(r.failures, 0);
  EXPECT_TRUE(std::isfinite(r.c_emp));
  for (const auto& a : r.instances) {
    EXPECT_GE(a.f_min, 1.0 / lambda - 1e-15);
    EXPECT_LE(a.f_max, lambda + 1e-15);
    EXPECT_TRUE(a.converged);
    EXPECT_LE(a.min_h, std::pow(lambda, 1.0 / (P.q - P.p)) + 1e-6);
  }
  const auto lo = c0_audit(g, 1.1, P, 6, 100);
  EXPECT_LE(lo.c_emp, r.c_emp);
}

TEST(C0Audit, AuditDensityAttainsTheBound) {
  const auto g = circle();
  const ScalarField f = audit_density(g, 1.5, 7);
  EXPECT_NEAR(std::max(f.max(), 1.0 / f.min()), 1.5, 1e-12);
  EXPECT_THROW(audit_density(g, 0.9, 7), std::invalid_argument);
}

TEST(C0Audit, ThreadCountDoesNotChangeTheReport) {
  const auto g = circle();
  const ProblemParams P = ProblemParams::make(2, 0.5, 1.8);
  const auto a = c0_audit(g, 1.2, P, 3, 5, {}, 1);
  const auto b = c0_audit(g, 1.2, P, 3, 5, {}, 3);
  std::ostringstream sa, sb;
  write_records(sa, a);
  write_records(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

// ---------------------------------------------------------------------------
// Counterexample search

TEST(CounterexampleSearch, ProvenRegimeFindsNoViolation) {
  const auto g = build_grid(2, 64);
  const auto r = counterexample_search(g, 1.5, 2.0, 80, 3);
  // Rejected (non-convex) perturbations consume budget without an instance.
  EXPECT_LE(r.report.instances.size(), 80u);
  EXPECT_GE(r.report.instances.size(), 60u);
  EXPECT_GE(r.worst_margin, -1e-9);
  EXPECT_FALSE(r.violation_confirmed);
  ASSERT_TRUE(r.witness_k && r.witness_l);
  EXPECT_EQ(r.worst_margin, r.report.min_margin);
}

TEST(CounterexampleSearch, NearBallSmallPFindsNoViolation) {
  const auto g = build_grid(2, 64);
  const auto r = counterexample_search(g, 0.5, 1.5, 40, 4, true);
  EXPECT_FALSE(r.violation_confirmed);
  EXPECT_GE(r.worst_margin, -1e-9);
}

TEST(CounterexampleSearch, IsReproducible) {
  const auto g = build_grid(2, 64);
  const auto a = counterexample_search(g, 0.5, 2.0, 30, 11);
  const auto b = counterexample_search(g, 0.5, 2.0, 30, 11);
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  EXPECT_EQ(a.worst_seed, b.worst_seed);
  EXPECT_LT(a.discretization_error, 1e-6);
}

// ---------------------------------------------------------------------------
// Emission

TEST(Emission, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 200; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Emission, RecordsSummaryAndPlot) {
  const auto g = circle();
  const auto r = bm_batch(g, 1.0, 2.0, {2, 1}, {0.25, 0.75});
  std::ostringstream rec, plot, sum;
  write_records(rec, r);
  write_plot(plot, r);
  write_summary(sum, r);
  std::istringstream rs(rec.str());
  std::string line;
  int lines = 0;
  while (std::getline(rs, line)) {
    ++lines;
    std::istringstream ls(line);
    std::string tok;
    std::set<std::string> keys;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      ASSERT_NE(eq, std::string::npos) << tok;
      keys.insert(tok.substr(0, eq));
    }
    EXPECT_EQ(keys, (std::set<std::string>{"inequality", "n", "p", "q", "seed", "quantity", "lambda", "margin",
                                           "equality_case"}));
  }
  EXPECT_EQ(lines, 4);
  EXPECT_EQ(rec.str().rfind("inequality=BM n=2 p=1 q=2 seed=1 quantity=bm lambda=0.25 margin=", 0), 0u);
  std::istringstream ps(plot.str());
  double l, m;
  int rows = 0;
  while (ps >> l >> m) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_NE(sum.str().find("min margin"), std::string::npos);
}

TEST(ConfirmViolation, RequiresPersistentNegativeMargins) {
  EXPECT_TRUE(confirm_violation(-1e-3, -1.01e-3));
  EXPECT_FALSE(confirm_violation(-1e-3, 1e-4));
  EXPECT_FALSE(confirm_violation(-1e-10, -1e-10));
  EXPECT_FALSE(confirm_violation(-1e-6, -1e-5));
  EXPECT_FALSE(confirm_violation(1e-3, -1e-3));
}

TEST(Refine, DoublesTheGridAndKeepsTheModel) {
  const auto g = circle();
  const ConvexBody K = random_symmetric_body(g, 3, 0.3, 4);
  const auto K2 = refine(K);
  ASSERT_TRUE(K2);
  EXPECT_EQ(K2->grid()->size(), 2 * g->size());
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(K2->support()[2 * i], K.support()[i], 1e-13);
  const ScalarField sq = ScalarField::sample(g, [](const Vec3& x) { return std::abs(x.x()) + std::abs(x.y()); });
  EXPECT_FALSE(refine(ConvexBody::from_support(sq)));
}
