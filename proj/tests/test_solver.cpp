#include "dmk/solver.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

using namespace dmk;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

double max_abs_diff(std::span<const double> a, double c) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x - c));
  return s;
}

// Independent reference solve for n = 2 and f depending on cos 2θ only: the
// solution is h = Σ_{k<M} a_k cos 2kθ. Collocation at the M Chebyshev-Gauss
// angles θ_j = (j + 1/2)π/(2M) of (0, π/2), undamped Newton from h ≡ 1 with
// the Jacobian assembled from the basis functions directly. M = 1024 carries
// the same frequencies as a 4096-node grid.
double dense_cosine_solve_h0(double p, double q, const std::function<double(double)>& f, int M) {
  Eigen::MatrixXd B(M, M), B1(M, M), B2(M, M);
  Eigen::VectorXd logf(M);
  for (int j = 0; j < M; ++j) {
    const double t = (j + 0.5) * kPi / (2.0 * M);
    logf(j) = std::log(f(t));
    for (int k = 0; k < M; ++k) {
      B(j, k) = std::cos(2.0 * k * t);
      B1(j, k) = -2.0 * k * std::sin(2.0 * k * t);
      B2(j, k) = -4.0 * k * k * std::cos(2.0 * k * t);
    }
  }
  Eigen::VectorXd a = Eigen::VectorXd::Zero(M);
  a(0) = 1.0;
  for (int it = 0; it < 30; ++it) {
    const Eigen::VectorXd h = B * a, h1 = B1 * a, h2 = B2 * a;
    Eigen::VectorXd F(M);
    Eigen::MatrixXd J(M, M);
    for (int j = 0; j < M; ++j) {
      const double w = h2(j) + h(j), r2 = h(j) * h(j) + h1(j) * h1(j);
      F(j) = std::log(w) - (p - 1.0) * std::log(h(j)) - 0.5 * (2.0 - q) * std::log(r2) - logf(j);
      J.row(j) = (B2.row(j) + B.row(j)) / w - (p - 1.0) / h(j) * B.row(j) -
                 (2.0 - q) / r2 * (h(j) * B.row(j) + h1(j) * B1.row(j));
    }
    if (F.lpNorm<Eigen::Infinity>() < 1e-14) break;
    a -= J.partialPivLu().solve(F);
  }
  return a.sum();
}

ScalarField near_ball_density(GridPtr g, std::uint64_t seed, double amplitude, bool even) {
  const ConvexBody B = even ? random_symmetric_body(g, seed, 0.9, 6) : random_body(g, seed, 0.9, 6);
  // 1 + amplitude·(shape of a random band-limited body), sup-norm exactly amplitude.
  std::vector<double> v(B.support().vector());
  double s = 0.0;
  for (double& x : v) {
    x -= 1.0;
    s = std::max(s, std::abs(x));
  }
  for (double& x : v) x = 1.0 + amplitude * x / s;
  return ScalarField(g, std::move(v));
}

}  // namespace

// --- residual -------------------------------------------------------------------

TEST(Residual, UnitBallAndDilates) {
  for (auto [n, res] : {std::pair{2, 128}, std::pair{3, 16}}) {
    auto g = build_grid(n, res);
    for (auto [p, q] : {std::pair{0.5, 1.8}, std::pair{1.5, 2.0}, std::pair{0.3, 1.2}}) {
      const auto P = ProblemParams::make(n, p, q);
      const auto one = ScalarField::constant(g, 1.0);
      // S^2 derivatives carry ~1e-12 of Legendre recurrence roundoff.
      const double tol = n == 2 ? 1e-14 : 2e-12;
      EXPECT_LT(residual(one, one, P).sup_norm(), tol);
      for (double r : {0.5, 2.0, 3.7}) {
        const ScalarField F = residual(ScalarField::constant(g, r), one, P);
        EXPECT_LT(max_abs_diff(F.values(), (q - p) * std::log(r)), tol + 1e-14);
      }
    }
  }
}

TEST(Residual, EllipseWithItsOwnDensityIsARoot) {
  auto g2 = build_grid(2, 256);
  auto g3 = build_grid(3, 40);
  const ConvexBody E2 = ellipsoid(g2, {2.0, 1.0});
  const ConvexBody E3 = ellipsoid(g3, {1.3, 1.0, 0.8});
  for (auto [p, q] : {std::pair{0.5, 1.8}, std::pair{1.5, 2.0}, std::pair{0.0, 1.0}, std::pair{2.5, 0.7}}) {
    const auto P2 = ProblemParams::make(2, p, q);
    EXPECT_LT(residual(E2.support(), dual_curvature_density(E2, P2).values, P2).sup_norm(), 1e-9);
    const auto P3 = ProblemParams::make(3, p, q + 0.5);
    EXPECT_LT(residual(E3.support(), dual_curvature_density(E3, P3).values, P3).sup_norm(), 1e-9);
  }
}

TEST(Residual, RejectsInvalidInput) {
  auto g = build_grid(2, 64);
  const auto P = ProblemParams::make(2, 0.5, 1.8);
  const auto one = ScalarField::constant(g, 1.0);
  EXPECT_THROW(residual(ScalarField::constant(g, -1.0), one, P), std::invalid_argument);
  EXPECT_THROW(residual(one, ScalarField::constant(g, 0.0), P), std::invalid_argument);
  const auto wavy = ScalarField::sample(g, [](const Vec3& x) { return 1.0 + 0.5 * (4 * x.x() * x.x() * x.x() - 3 * x.x()); });
  EXPECT_THROW(residual(wavy, one, P), std::invalid_argument);
  EXPECT_THROW(residual(one, ScalarField::constant(build_grid(2, 32), 1.0), P), std::invalid_argument);
}

// --- linearization --------------------------------------------------------------

TEST(Linearized, Examples) {
  auto g2 = build_grid(2, 512);
  const auto L2 = linearized_operator(ProblemParams::make(2, 0.5, 1.8));
  EXPECT_LT(max_abs_diff(L2(ScalarField::constant(g2, 1.0)).values(), 1.3), 1e-12);
  const auto cosine = ScalarField::sample(g2, [](const Vec3& x) { return x.x(); });
  const ScalarField Lc = L2(cosine);
  for (std::size_t i = 0; i < g2->size(); ++i) EXPECT_NEAR(Lc[i], 0.3 * cosine[i], 1e-10);

  auto g3 = build_grid(3, 24);
  const auto L3 = linearized_operator(ProblemParams::make(3, 1.2, 3.0));
  const ScalarField psi(g3, g3->harmonic(2, 1));
  const ScalarField Lpsi = L3(psi);
  for (std::size_t i = 0; i < g3->size(); ++i) EXPECT_NEAR(Lpsi[i], -4.2 * psi[i], 1e-10);
}

TEST(Linearized, SpectrumOnHarmonics) {
  struct Case {
    int n, res;
    double tol;
  };
  for (const Case c : {Case{2, 512, 1e-8}, Case{3, 48, 1e-6}}) {
    auto g = build_grid(c.n, c.res);
    for (auto [p, q] : {std::pair{0.5, 1.8}, std::pair{1.5, 2.0}, std::pair{0.2, 1.1}}) {
      const auto P = ProblemParams::make(c.n, p, q + (c.n == 3 ? 0.9 : 0.0));
      const auto L = linearized_operator(P);
      for (int k = 0; k <= 6; ++k) {
        const double lambda = P.q - P.p - k * (k + c.n - 2.0);
        EXPECT_DOUBLE_EQ(L.eigenvalue(k), lambda);
        const int members = k == 0 ? 1 : (c.n == 2 ? 2 : 2 * k + 1);
        for (int m = 0; m < members; ++m) {
          const ScalarField Y(g, g->harmonic(k, m));
          const ScalarField LY = L(Y);
          double err = 0.0;
          for (std::size_t i = 0; i < Y.size(); ++i) err = std::max(err, std::abs(LY[i] - lambda * Y[i]));
          EXPECT_LT(err / Y.sup_norm(), c.tol) << "n=" << c.n << " k=" << k << " m=" << m;
        }
      }
    }
  }
}

TEST(Linearized, MatchesDerivativeOfResidualAtTheBall) {
  for (auto [n, res] : {std::pair{2, 128}, std::pair{3, 16}}) {
    auto g = build_grid(n, res);
    const auto P = ProblemParams::make(n, 0.7, n == 2 ? 1.6 : 2.4);
    const ConvexBody B = random_body(g, 5, 0.5, 5);
    std::vector<double> psi(B.support().vector());
    for (double& x : psi) x -= 1.0;
    const double eps = 1e-5;
    std::vector<double> up(psi.size()), dn(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
      up[i] = 1.0 + eps * psi[i];
      dn[i] = 1.0 - eps * psi[i];
    }
    const auto one = ScalarField::constant(g, 1.0);
    const ScalarField Fu = residual(ScalarField(g, up), one, P);
    const ScalarField Fd = residual(ScalarField(g, dn), one, P);
    const ScalarField Lpsi = linearized_operator(P)(ScalarField(g, psi));
    double err = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) err = std::max(err, std::abs((Fu[i] - Fd[i]) / (2 * eps) - Lpsi[i]));
    EXPECT_LT(err / Lpsi.sup_norm(), 1e-7);
  }
}

// --- solve ----------------------------------------------------------------------

TEST(Solve, ExactBalls) {
  struct Case {
    int n, res;
    double p, q;
  };
  for (const Case c : {Case{2, 256, 0.5, 1.8}, Case{2, 256, 1.5, 2.0}, Case{3, 16, 0.5, 3.0}, Case{3, 16, 2.0, 3.0}}) {
    auto g = build_grid(c.n, c.res);
    const auto P = ProblemParams::make(c.n, c.p, c.q);
    const SolveResult one = solve_lp_dual_minkowski(ScalarField::constant(g, 1.0), P);
    ASSERT_TRUE(one.report.converged) << one.report.message;
    EXPECT_LT(max_abs_diff(one.body.support().values(), 1.0), 1e-10);
    const SolveResult two = solve_lp_dual_minkowski(ScalarField::constant(g, std::pow(2.0, c.q - c.p)), P);
    ASSERT_TRUE(two.report.converged) << two.report.message;
    EXPECT_LT(max_abs_diff(two.body.support().values(), 2.0), 1e-8);
    EXPECT_EQ(two.report.iterations.size(), 10u);
    EXPECT_EQ(two.report.convexity_margin.size(), 10u);
    EXPECT_GE(two.report.wall_seconds, 0.0);
  }
}

TEST(Solve, CosineDataAgainstDenseReference) {
  const double p = 0.5, q = 1.8;
  auto f_of = [](double t) { return 1.0 + 0.05 * std::cos(2.0 * t); };
  const double reference = dense_cosine_solve_h0(p, q, f_of, 1024);
  auto g = build_grid(2, 512);
  const auto f = ScalarField::sample(g, [&](const Vec3& x) { return f_of(std::atan2(x.y(), x.x())); });
  const SolveResult r = solve_lp_dual_minkowski(f, ProblemParams::make(2, p, q));
  ASSERT_TRUE(r.report.converged) << r.report.message;
  EXPECT_LE(r.report.final_residual, 1e-10);
  EXPECT_NEAR(r.body.support()[0], reference, 1e-10);
  EXPECT_LT(reference, 1.0);
}

TEST(Solve, ResidualCertificateOnRandomData) {
  for (auto [n, res] : {std::pair{2, 256}, std::pair{3, 24}}) {
    auto g = build_grid(n, res);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto P = ProblemParams::make(n, 0.4 + 0.3 * seed, n - 0.1 * seed);
      const ScalarField f = near_ball_density(g, seed, 0.1, seed % 2 == 0);
      const SolveResult r = solve_lp_dual_minkowski(f, P);
      ASSERT_TRUE(r.report.converged) << r.report.message;
      EXPECT_LE(r.report.final_residual, 1e-10);
      const ScalarField d = dual_curvature_density(r.body, P).values;
      EXPECT_LE(max_abs_diff(d.values(), f.values()), 1e-8 * f.sup_norm());
      EXPECT_LE(residual(r.body.support(), f, P).sup_norm(), 1e-10);
      EXPECT_GT(r.body.convexity_margin(), 0.0);
    }
  }
}

TEST(Solve, ScalingEquivariance) {
  for (auto [n, res] : {std::pair{2, 256}, std::pair{3, 24}}) {
    auto g = build_grid(n, res);
    const auto P = ProblemParams::make(n, 0.5, n == 2 ? 1.8 : 3.0);
    const ScalarField f = near_ball_density(g, 21, 0.1, false);
    const SolveResult base = solve_lp_dual_minkowski(f, P);
    ASSERT_TRUE(base.report.converged) << base.report.message;
    for (double c : {0.5, 2.0}) {
      const ScalarField fc = f.map([&](double v) { return std::pow(c, P.q - P.p) * v; });
      const SolveResult r = solve_lp_dual_minkowski(fc, P);
      ASSERT_TRUE(r.report.converged) << r.report.message;
      double err = 0.0;
      for (std::size_t i = 0; i < g->size(); ++i)
        err = std::max(err, std::abs(r.body.support()[i] - c * base.body.support()[i]) / (c * base.body.support()[i]));
      EXPECT_LT(err, 1e-7) << "n=" << n << " c=" << c;
    }
  }
}

TEST(Solve, EvenDataGivesExactlyEvenSolutions) {
  for (auto [n, res] : {std::pair{2, 256}, std::pair{3, 24}}) {
    auto g = build_grid(n, res);
    const auto P = ProblemParams::make(n, 0.5, n == 2 ? 1.8 : 3.0);
    const ScalarField f = near_ball_density(g, 8, 0.1, true);
    ASSERT_TRUE(g->is_even(f.values()));
    const SolveResult r = solve_lp_dual_minkowski(f, P);
    ASSERT_TRUE(r.report.converged) << r.report.message;
    EXPECT_TRUE(g->is_even(r.body.support().values()));
    EXPECT_TRUE(r.body.symmetric());
  }
}

TEST(Solve, GivenInitializationReachesTheSameSolution) {
  auto g = build_grid(2, 256);
  const auto P = ProblemParams::make(2, 1.5, 2.0);
  const ScalarField f = near_ball_density(g, 4, 0.05, false);
  const SolveResult base = solve_lp_dual_minkowski(f, P);
  ASSERT_TRUE(base.report.converged) << base.report.message;
  for (double r0 : {0.8, 1.25}) {
    SolverConfig cfg;
    cfg.initialization = ScalarField::constant(g, r0);
    const SolveResult r = solve_lp_dual_minkowski(f, P, cfg);
    ASSERT_TRUE(r.report.converged) << r.report.message;
    EXPECT_LT(max_abs_diff(r.body.support().values(), base.body.support().values()), 1e-9);
  }
  SolverConfig cfg;
  cfg.initialization = random_body(g, 3, 0.1, 4).support();
  const SolveResult r = solve_lp_dual_minkowski(f, P, cfg);
  ASSERT_TRUE(r.report.converged) << r.report.message;
  EXPECT_LT(max_abs_diff(r.body.support().values(), base.body.support().values()), 1e-9);
}

TEST(Solve, MinimumBoundedByDataMaximum) {
  auto g = build_grid(2, 128);
  const auto P = ProblemParams::make(2, 0.5, 1.8);
  for (std::uint64_t seed = 30; seed < 36; ++seed) {
    const ScalarField f = near_ball_density(g, seed, 0.3, seed % 2 == 1);
    const SolveResult r = solve_lp_dual_minkowski(f, P);
    ASSERT_TRUE(r.report.converged) << r.report.message;
    EXPECT_LE(r.body.support().min(), std::pow(f.max(), 1.0 / (P.q - P.p)) + 1e-9);
    EXPECT_GE(r.body.support().max(), std::pow(f.min(), 1.0 / (P.q - P.p)) - 1e-9);
  }
}

TEST(Solve, NearKernelIsFlagged) {
  auto g = build_grid(2, 128);
  // q - p = 1 is the degree-1 eigenvalue on S^1. cos 3θ data keeps every
  // iterate in the span of cos 3kθ, away from the kernel.
  const ScalarField f = ScalarField::sample(g, [](const Vec3& x) { return 1.0 + 0.05 * (4 * std::pow(x.x(), 3) - 3 * x.x()); });
  const SolveResult r = solve_lp_dual_minkowski(f, ProblemParams::make(2, 0.5, 1.5));
  EXPECT_TRUE(r.report.ill_conditioned);
  EXPECT_TRUE(r.report.converged) << r.report.message;
  const SolveResult even = solve_lp_dual_minkowski(ScalarField::sample(g, [](const Vec3& x) { return 1.0 + 0.05 * x.y() * x.y(); }),
                                                   ProblemParams::make(2, 0.5, 1.5));
  EXPECT_FALSE(even.report.ill_conditioned);
  const SolveResult away = solve_lp_dual_minkowski(f, ProblemParams::make(2, 0.5, 1.7));
  EXPECT_FALSE(away.report.ill_conditioned);
}

TEST(Solve, NonConvergenceIsReportedNotThrown) {
  auto g = build_grid(2, 128);
  const ScalarField f = near_ball_density(g, 2, 0.6, false);
  SolverConfig cfg;
  cfg.continuity_steps = 1;
  cfg.max_newton_iters = 1;
  const SolveResult r = solve_lp_dual_minkowski(f, ProblemParams::make(2, 0.5, 1.8), cfg);
  EXPECT_FALSE(r.report.converged);
  EXPECT_FALSE(r.report.message.empty());
  EXPECT_GT(r.body.support().min(), 0.0);
  EXPECT_GT(r.report.final_residual, cfg.residual_tol);
}

TEST(Solve, RejectsInvalidParameters) {
  auto g = build_grid(2, 64);
  const auto one = ScalarField::constant(g, 1.0);
  EXPECT_THROW(solve_lp_dual_minkowski(one, ProblemParams::make(2, 2.0, 2.0)), std::invalid_argument);
  EXPECT_THROW(solve_lp_dual_minkowski(one, ProblemParams::make(2, 0.0, 1.8)), std::invalid_argument);
  EXPECT_THROW(solve_lp_dual_minkowski(one, ProblemParams::make(2, 0.5, 0.9)), std::invalid_argument);
  EXPECT_THROW(solve_lp_dual_minkowski(one, ProblemParams::make(3, 0.5, 2.5)), std::invalid_argument);
  EXPECT_THROW(ProblemParams::make(2, 2.5, 3.0), std::invalid_argument);
  EXPECT_THROW(solve_lp_dual_minkowski(ScalarField::constant(g, -1.0), ProblemParams::make(2, 0.5, 1.8)),
               std::invalid_argument);
  SolverConfig bad;
  bad.residual_tol = 0.0;
  EXPECT_THROW(solve_lp_dual_minkowski(one, ProblemParams::make(2, 0.5, 1.8), bad), std::invalid_argument);
  bad = SolverConfig{};
  bad.continuity_steps = 0;
  EXPECT_THROW(solve_lp_dual_minkowski(one, ProblemParams::make(2, 0.5, 1.8), bad), std::invalid_argument);
  bad = SolverConfig{};
  bad.initialization = ScalarField::constant(build_grid(2, 32), 1.0);
  EXPECT_THROW(solve_lp_dual_minkowski(one, ProblemParams::make(2, 0.5, 1.8), bad), std::invalid_argument);
}

// --- minimization ---------------------------------------------------------------

TEST(MinimizePhi, BallGivesNormalizedBall) {
  for (auto [n, res] : {std::pair{2, 128}, std::pair{3, 12}}) {
    auto g = build_grid(n, res);
    const double p = 0.5, q = n == 2 ? 1.5 : 2.0;
    const ConvexBody K = ball(g, 1.3);
    SolverConfig cfg;
    cfg.initialization = random_symmetric_body(g, 2, 0.2, 4).support();
    const PhiResult r = minimize_phi(K, ProblemParams::make(n, p, q), cfg);
    ASSERT_TRUE(r.converged) << r.message << " stationarity " << r.stationarity;
    const double radius = std::pow(n / g->measure(), 1.0 / q);
    EXPECT_LT(max_abs_diff(r.body.support().values(), radius), 1e-6);
    EXPECT_NEAR(dual_quermassintegral(r.body, q), 1.0, 1e-12);
    EXPECT_NEAR(r.value, std::pow(dual_quermassintegral(K, q), 1.0 - p / q), 1e-10);
  }
}

TEST(MinimizePhi, NearBallMinimizerIsTheNormalizedDilate) {
  for (auto [n, res] : {std::pair{2, 256}, std::pair{3, 16}}) {
    auto g = build_grid(n, res);
    for (std::uint64_t seed : {11u, 12u}) {
      const ConvexBody K = random_symmetric_body(g, seed, 0.05, 4);
      const auto P = ProblemParams::make(n, seed == 11 ? 0.5 : 0.8, n == 2 ? 1.5 : 2.5);
      const PhiResult r = minimize_phi(K, P);
      ASSERT_TRUE(r.converged) << r.message << " stationarity " << r.stationarity;
      const ConvexBody dilate = K.scaled(std::pow(dual_quermassintegral(K, P.q), -1.0 / P.q));
      EXPECT_LT(max_abs_diff(r.body.support().values(), dilate.support().values()), 1e-4);
      EXPECT_LT(euler_lagrange_defect(K, r.body, P.p, P.q), 1e-5);
      EXPECT_TRUE(r.body.symmetric());
      for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
      EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations) + 1);
    }
  }
}

TEST(MinimizePhi, ValueIsScaleInvariant) {
  auto g = build_grid(2, 256);
  const ConvexBody K = random_symmetric_body(g, 3, 0.2, 6);
  const ConvexBody L = random_symmetric_body(g, 4, 0.3, 6);
  for (auto [p, q] : {std::pair{0.5, 1.5}, std::pair{0.3, 2.0}}) {
    const double phi = phi_value(K, L, p, q);
    for (double t : {2.0, 0.5, 7.0}) EXPECT_NEAR(phi_value(K, L.scaled(t), p, q), phi, 1e-13 * phi);
  }
}

TEST(MinimizePhi, WulffProjectionNeverIncreasesPhi) {
  auto g = build_grid(2, 256);
  const ConvexBody K = random_symmetric_body(g, 5, 0.2, 6);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  for (int c = 0; c < 20; ++c) {
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < v.size() / 2; ++i) v[i] = v[i + v.size() / 2] = 1.0 + U(rng);
    const ScalarField phi(g, std::move(v));
    const ConvexBody W = wulff_shape(phi);
    EXPECT_LE(phi_value(K, W, 0.5, 1.5), phi_value(K, phi, 0.5, 1.5) * (1.0 + 1e-14));
  }
}

TEST(MinimizePhi, RejectsOutOfRegimeParameters) {
  auto g = build_grid(2, 64);
  const ConvexBody K = ball(g, 1.0);
  EXPECT_THROW(minimize_phi(K, ProblemParams::make(2, 1.2, 1.5)), std::invalid_argument);
  EXPECT_THROW(minimize_phi(K, ProblemParams::make(2, 0.5, 0.8)), std::invalid_argument);
  std::vector<double> v(g->size(), 1.0);
  v[3] = 1.5;
  EXPECT_THROW(minimize_phi(ConvexBody::discrete(wulff_support(ScalarField(g, v))), ProblemParams::make(2, 0.5, 1.5)),
               std::invalid_argument);
}
