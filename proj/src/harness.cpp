#include "dmk/harness.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dmk {

namespace {

constexpr int kLambdaGrid = 13;
constexpr double kDilateTol = 1e-12;
constexpr double kJensenTol = 1e-12;
constexpr double kFdStep = 1e-3;
constexpr double kUniquenessDataTol = 0.1;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_pair(const ConvexBody& K, const ConvexBody& L, const char* op) {
  require(K.grid() == L.grid(), std::string(op) + ": bodies live on different grids");
}

void require_exponents(int n, double p, double q, const char* op) {
  require(p > 0.0 && std::isfinite(p), std::string(op) + ": p must be positive");
  require(q > 0.0 && q <= n, std::string(op) + ": q must lie in (0, n]");
}

/// ∫ (h_L / h_K)^p w over the grid.
double weighted_ratio_integral(const ConvexBody& K, const ConvexBody& L, double p, const ScalarField& w) {
  const auto& hk = K.support();
  const auto& hl = L.support();
  std::vector<double> v(hk.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(hl[i] / hk[i], p) * w[i];
  return integrate(*K.grid(), v);
}

double density_mass(const ScalarField& d) { return integrate(d); }

double bm_margin(const ConvexBody& K, const ConvexBody& L, double p, double q, double lambda, double vk,
                 double vl) {
  const ConvexBody Q = lp_combination(K, L, lambda, p);
  const double e = p / q;
  return std::pow(dual_quermassintegral(Q, q), e) - (1.0 - lambda) * std::pow(vk, e) - lambda * std::pow(vl, e);
}

/// Even field of sup-norm 1 with a band-limited spectrum, from the corpus generator.
std::vector<double> unit_noise(GridPtr grid, std::uint64_t seed, int band) {
  const ConvexBody B = random_symmetric_body(grid, seed, 0.5, band);
  std::vector<double> g(B.support().values().begin(), B.support().values().end());
  double s = 0.0;
  for (double& v : g) {
    v -= 1.0;
    s = std::max(s, std::abs(v));
  }
  if (s > 0.0)
    for (double& v : g) v /= s;
  return g;
}

int max_band(const GridPtr& grid) {
  return grid->dimension() == 2 ? grid->resolution() / 2 - 1 : grid->resolution();
}

GridPtr refined_grid(const GridPtr& grid) { return build_grid(grid->dimension(), 2 * grid->resolution()); }

}  // namespace

std::string to_string(Inequality id) {
  switch (id) {
    case Inequality::kBM:
      return "BM";
    case Inequality::kMinkowski:
      return "MINK";
    case Inequality::kEquivalence:
      return "EQUIV";
    case Inequality::kJensen:
      return "JENSEN";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// InequalityReport

void InequalityReport::add(Instance inst) {
  if (!std::isfinite(inst.margin)) throw std::runtime_error("non-finite margin for seed " + std::to_string(inst.seed));
  min_margin = std::min(min_margin, inst.margin);
  instances.push_back(std::move(inst));
}

void InequalityReport::merge(const InequalityReport& other) {
  if (other.id != id || other.n != n || other.p != p || other.q != q)
    throw std::invalid_argument("merge: reports of different inequalities or parameters");
  for (const auto& inst : other.instances) add(inst);
  confirmed_violations += other.confirmed_violations;
  for (double l : other.lambdas)
    if (std::find(lambdas.begin(), lambdas.end(), l) == lambdas.end()) lambdas.push_back(l);
}

void InequalityReport::sort() {
  std::stable_sort(instances.begin(), instances.end(), [](const Instance& a, const Instance& b) {
    if (a.seed != b.seed) return a.seed < b.seed;
    const double la = std::isnan(a.lambda) ? -1.0 : a.lambda;
    const double lb = std::isnan(b.lambda) ? -1.0 : b.lambda;
    return la < lb;
  });
}

std::vector<std::uint64_t> InequalityReport::seeds() const {
  std::vector<std::uint64_t> s;
  for (const auto& inst : instances)
    if (s.empty() || s.back() != inst.seed) s.push_back(inst.seed);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

// ---------------------------------------------------------------------------
// Inequalities

bool confirm_violation(double margin, double refined) {
  return margin < -kMarginTol && refined < -kMarginTol && margin < -10.0 * std::abs(refined - margin);
}

std::optional<ConvexBody> refine(const ConvexBody& K) {
  if (!K.smooth()) return std::nullopt;
  return ConvexBody::from_model(refined_grid(K.grid()), K.model());
}

bool is_dilate(const ConvexBody& K, const ConvexBody& L) {
  if (K.grid() != L.grid()) return false;
  const auto& hk = K.support();
  const auto& hl = L.support();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < hk.size(); ++i) {
    const double t = hl[i] / hk[i];
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  return hi - lo <= kDilateTol * hi;
}

InequalityReport check_bm(const ConvexBody& K, const ConvexBody& L, double p, double q,
                          const std::vector<double>& lambdas, std::uint64_t seed) {
  require_pair(K, L, "check_bm");
  const int n = K.dimension();
  require_exponents(n, p, q, "check_bm");
  require(K.symmetric() && L.symmetric(), "check_bm: bodies must be origin-symmetric");
  for (double l : lambdas) require(l >= 0.0 && l <= 1.0, "check_bm: lambda must lie in [0, 1]");
  InequalityReport r;
  r.id = Inequality::kBM;
  r.n = n;
  r.p = p;
  r.q = q;
  r.lambdas = lambdas;
  const double vk = dual_quermassintegral(K, q);
  const double vl = dual_quermassintegral(L, q);
  const bool dilate = is_dilate(K, L);
  for (double l : lambdas) r.add({seed, l, bm_margin(K, L, p, q, l, vk, vl), dilate, "bm"});
  return r;
}

InequalityReport check_minkowski(const ConvexBody& K, const ConvexBody& L, double p, double q, std::uint64_t seed) {
  require_pair(K, L, "check_minkowski");
  const int n = K.dimension();
  require_exponents(n, p, q, "check_minkowski");
  require(K.smooth(), "check_minkowski: K must be smooth");
  InequalityReport r;
  r.id = Inequality::kMinkowski;
  r.n = n;
  r.p = p;
  r.q = q;
  const ScalarField d = dual_curvature_density(K, ProblemParams::make(n, 0.0, q)).values;
  // Normalizing by the quadrature mass keeps C̄ at mass 1 exactly on the grid.
  const double lhs = std::pow(weighted_ratio_integral(K, L, p, d) / density_mass(d), 1.0 / p);
  const double rhs = std::pow(dual_quermassintegral(L, q) / dual_quermassintegral(K, q), 1.0 / q);
  r.add({seed, std::numeric_limits<double>::quiet_NaN(), lhs - rhs, is_dilate(K, L), "mink"});
  return r;
}

EquivalenceReport equivalence_probe(const ConvexBody& K, const ConvexBody& L, double p, double q,
                                    std::uint64_t seed) {
  require_pair(K, L, "equivalence_probe");
  const int n = K.dimension();
  require_exponents(n, p, q, "equivalence_probe");
  require(K.smooth(), "equivalence_probe: K must be smooth");
  EquivalenceReport e;
  e.report.id = Inequality::kEquivalence;
  e.report.n = n;
  e.report.p = p;
  e.report.q = q;
  const double ex = p / q;
  auto f_of = [&](double l) { return std::pow(dual_quermassintegral(lp_combination(K, L, l, p), q), ex); };
  for (int i = 0; i < kLambdaGrid; ++i) {
    const double l = static_cast<double>(i) / (kLambdaGrid - 1);
    e.lambdas.push_back(l);
    e.f.push_back(f_of(l));
  }
  e.report.lambdas = e.lambdas;
  const bool dilate = is_dilate(K, L);
  e.concavity_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kLambdaGrid; ++i) {
    for (int j = i + 2; j < kLambdaGrid; j += 2) {
      const int m = (i + j) / 2;
      const double margin = e.f[m] - 0.5 * (e.f[i] + e.f[j]);
      e.concavity_margin = std::min(e.concavity_margin, margin);
      e.report.add({seed, e.lambdas[m], margin, dilate, "concavity"});
    }
  }
  // The bracket uses the quadrature mass (1/n)∫d_K in place of Ṽ_q(K) so that
  // K = L gives an exact zero.
  const ScalarField d = dual_curvature_density(K, ProblemParams::make(n, 0.0, q)).values;
  const double vk = dual_quermassintegral(K, q);
  const double bracket = (weighted_ratio_integral(K, L, p, d) - density_mass(d)) / n;
  e.fprime_analytic = std::pow(vk, ex - 1.0) * bracket;
  // Fourth-order one-sided stencil; f is only defined for λ ≥ 0.
  e.fprime_numeric = (-25.0 * e.f[0] + 48.0 * f_of(kFdStep) - 36.0 * f_of(2.0 * kFdStep) +
                      16.0 * f_of(3.0 * kFdStep) - 3.0 * f_of(4.0 * kFdStep)) /
                     (12.0 * kFdStep);
  const double scale = std::max({std::abs(e.fprime_analytic), std::abs(e.fprime_numeric), 1e-6 * std::abs(e.f[0])});
  e.fprime_relative_error = std::abs(e.fprime_analytic - e.fprime_numeric) / scale;
  e.derivative_gap = e.fprime_analytic - (e.f.back() - e.f.front());
  e.report.add({seed, 0.0, e.derivative_gap, dilate, "derivative_gap"});
  return e;
}

StepOneCheck equivalence_step_one(const ConvexBody& K, const ConvexBody& L, double p, double q, double lambda) {
  require_pair(K, L, "equivalence_step_one");
  require(lambda > 0.0 && lambda < 1.0, "equivalence_step_one: lambda must lie in (0, 1)");
  const ConvexBody Q = lp_combination(K, L, lambda, p);
  require(Q.smooth(), "equivalence_step_one: the combination is not smooth");
  StepOneCheck s;
  s.mink_k = check_minkowski(Q, K, p, q).min_margin;
  s.mink_l = check_minkowski(Q, L, p, q).min_margin;
  s.bm = check_bm(K, L, p, q, {lambda}).min_margin;
  return s;
}

double jensen_margin(const ConvexBody& K, const ConvexBody& L, double p, double lambda) {
  require_pair(K, L, "jensen_containment");
  require(p >= 1.0 && std::isfinite(p), "jensen_containment: p must be >= 1");
  require(lambda >= 0.0 && lambda <= 1.0, "jensen_containment: lambda must lie in [0, 1]");
  const ConvexBody Q = lp_combination(K, L, lambda, p);
  const auto& hk = K.support();
  const auto& hl = L.support();
  const auto& hq = Q.support();
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hk.size(); ++i) m = std::min(m, hq[i] - ((1.0 - lambda) * hk[i] + lambda * hl[i]));
  return m;
}

bool jensen_containment(const ConvexBody& K, const ConvexBody& L, double p, double lambda) {
  return jensen_margin(K, L, p, lambda) >= -kJensenTol;
}

// ---------------------------------------------------------------------------
// Uniqueness

UniquenessReport uniqueness_probe(const ScalarField& f, const ProblemParams& params, int n_inits,
                                  const SolverConfig& cfg, std::uint64_t seed, double threshold) {
  params.validate_for_solver();
  const int n = params.n;
  const bool regime_small_p = params.p > 0.0 && params.p < 1.0 && params.q == n;
  const bool regime_large_p = params.p > 1.0 && params.p < params.q;
  require(regime_small_p || regime_large_p,
          "uniqueness_probe: (p, q) must satisfy p in (0,1), q = n or 1 < p < q <= n");
  require(f.grid()->dimension() == n, "uniqueness_probe: grid dimension differs from n");
  require(n_inits >= 2, "uniqueness_probe: needs at least two initializations");
  double dev = 0.0;
  for (double v : f.values()) dev = std::max(dev, std::abs(v - 1.0));
  require(dev <= kUniquenessDataTol, "uniqueness_probe: requires |f - 1| <= 0.1");

  const GridPtr& g = f.grid();
  UniquenessReport r;
  std::vector<ScalarField> inits;
  const double dilates[] = {1.0, 0.8, 1.25};
  for (int i = 0; i < n_inits; ++i) {
    if (i < 3) {
      inits.push_back(ScalarField::constant(g, dilates[i]));
      r.initializations.push_back(i == 0 ? "ball" : "dilate_" + format_double(dilates[i]));
    } else {
      const std::uint64_t s = seed + static_cast<std::uint64_t>(i - 3);
      inits.push_back(random_body(g, s, 0.1, std::min(4, max_band(g))).support());
      r.initializations.push_back("random_" + std::to_string(s));
    }
  }
  std::vector<ScalarField> sols;
  for (const auto& h0 : inits) {
    SolverConfig c = cfg;
    c.initialization = h0;
    SolveResult res = solve_lp_dual_minkowski(f, params, c);
    if (!res.report.converged) r.inconclusive = true;
    r.solves.push_back(res.report);
    sols.push_back(res.body.support());
  }
  for (std::size_t a = 0; a < sols.size(); ++a)
    for (std::size_t b = a + 1; b < sols.size(); ++b)
      for (std::size_t i = 0; i < sols[a].size(); ++i)
        r.max_distance = std::max(r.max_distance, std::abs(sols[a][i] - sols[b][i]));
  r.unique = !r.inconclusive && r.max_distance <= threshold;
  return r;
}

// ---------------------------------------------------------------------------
// C⁰ audit

ScalarField audit_density(GridPtr grid, double lambda, std::uint64_t seed) {
  require(lambda >= 1.0 && std::isfinite(lambda), "audit_density: lambda must be >= 1");
  const std::vector<double> g = unit_noise(grid, seed, std::min(6, max_band(grid)));
  const double s = std::log(lambda);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(s * g[i]);
  return ScalarField(std::move(grid), std::move(v));
}

AuditReport c0_audit(GridPtr grid, double lambda, const ProblemParams& params, int n_instances, std::uint64_t seed,
                     const SolverConfig& cfg, int threads) {
  params.validate_for_solver();
  require(grid->dimension() == params.n, "c0_audit: grid dimension differs from n");
  require(lambda >= 1.0 && std::isfinite(lambda), "c0_audit: lambda must be >= 1");
  require(n_instances >= 1, "c0_audit: needs at least one instance");
  AuditReport r;
  r.n = params.n;
  r.p = params.p;
  r.q = params.q;
  r.lambda = lambda;
  std::function<AuditInstance(std::size_t)> task = [&](std::size_t i) {
    AuditInstance a;
    a.seed = seed + i;
    const ScalarField f = audit_density(grid, lambda, a.seed);
    a.f_min = f.min();
    a.f_max = f.max();
    const SolveResult res = solve_lp_dual_minkowski(f, params, cfg);
    a.converged = res.report.converged;
    a.residual = res.report.final_residual;
    a.max_h = res.body.support().max();
    a.min_h = res.body.support().min();
    a.volume = volume(res.body);
    return a;
  };
  r.instances = run_pool<AuditInstance>(static_cast<std::size_t>(n_instances), threads, task);
  for (const auto& a : r.instances) {
    if (!a.converged) {
      ++r.failures;
      continue;
    }
    r.c_emp = std::max({r.c_emp, a.max_h, 1.0 / a.volume});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Corpora

ConvexBody corpus_body(GridPtr grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double amp = 0.05 + 0.5 * u(rng);
  const int bands[] = {2, 4, 6};
  const int band = std::min(bands[rng() % 3], max_band(grid));
  return random_symmetric_body(std::move(grid), seed, amp, band);
}

ConvexBody near_ball_body(GridPtr grid, std::uint64_t seed, double radius) {
  require(radius > 0.0 && radius < 1.0, "near_ball_body: radius must lie in (0, 1)");
  std::mt19937_64 rng(seed * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  const double amp = radius * u(rng);
  return random_symmetric_body(grid, seed, amp, std::min(4, max_band(grid)));
}

InequalityReport bm_batch(GridPtr grid, double p, double q, const std::vector<std::uint64_t>& seeds,
                          const std::vector<double>& lambdas, int threads) {
  std::function<InequalityReport(std::size_t)> task = [&](std::size_t i) {
    const std::uint64_t s = seeds[i];
    const ConvexBody K = corpus_body(grid, 2 * s);
    const ConvexBody L = corpus_body(grid, 2 * s + 1);
    InequalityReport r = check_bm(K, L, p, q, lambdas, s);
    for (const auto& inst : r.instances) {
      if (inst.margin >= -kMarginTol) continue;
      const auto K2 = refine(K), L2 = refine(L);
      if (K2 && L2 && confirm_violation(inst.margin, check_bm(*K2, *L2, p, q, {inst.lambda}).min_margin))
        ++r.confirmed_violations;
    }
    return r;
  };
  InequalityReport r;
  r.id = Inequality::kBM;
  r.n = grid->dimension();
  r.p = p;
  r.q = q;
  r.lambdas = lambdas;
  for (const auto& part : run_pool<InequalityReport>(seeds.size(), threads, task)) r.merge(part);
  r.sort();
  return r;
}

InequalityReport minkowski_batch(GridPtr grid, double p, double q, const std::vector<std::uint64_t>& seeds,
                                 int threads) {
  std::function<InequalityReport(std::size_t)> task = [&](std::size_t i) {
    const std::uint64_t s = seeds[i];
    const ConvexBody K = near_ball_body(grid, 2 * s, 0.05);
    const ConvexBody L = corpus_body(grid, 2 * s + 1);
    InequalityReport r = check_minkowski(K, L, p, q, s);
    if (r.min_margin < -kMarginTol) {
      const auto K2 = refine(K), L2 = refine(L);
      if (K2 && L2 && confirm_violation(r.min_margin, check_minkowski(*K2, *L2, p, q).min_margin))
        ++r.confirmed_violations;
    }
    return r;
  };
  InequalityReport r;
  r.id = Inequality::kMinkowski;
  r.n = grid->dimension();
  r.p = p;
  r.q = q;
  for (const auto& part : run_pool<InequalityReport>(seeds.size(), threads, task)) r.merge(part);
  r.sort();
  return r;
}

// ---------------------------------------------------------------------------
// Counterexample search

namespace {

/// h·(1 + ε g) for an even band-limited g, as a smooth body; nullopt when not convex.
std::optional<ConvexBody> perturb(const ConvexBody& K, std::uint64_t seed, double eps) {
  const GridPtr& g = K.grid();
  const std::vector<double> noise = unit_noise(g, seed, std::min(6, max_band(g)));
  std::vector<double> v(noise.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = K.support()[i] * (1.0 + eps * noise[i]);
  const ScalarField h(g, v);
  if (!(h.min() > 0.0) || convexity_certificate(h) <= kConvexityTol * h.max()) return std::nullopt;
  try {
    return ConvexBody::from_model(g, spectral_model(g, std::move(v)));
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

double pair_margin(const ConvexBody& K, const ConvexBody& L, double p, double q, double lambda) {
  return bm_margin(K, L, p, q, lambda, dual_quermassintegral(K, q), dual_quermassintegral(L, q));
}

}  // namespace

SearchResult counterexample_search(GridPtr grid, double p, double q, int budget, std::uint64_t seed,
                                   bool near_ball) {
  const int n = grid->dimension();
  require_exponents(n, p, q, "counterexample_search");
  require(budget >= 1, "counterexample_search: budget must be positive");
  SearchResult out;
  out.report.id = Inequality::kBM;
  out.report.n = n;
  out.report.p = p;
  out.report.q = q;
  const std::vector<double> lambdas = {0.25, 0.5, 0.75};
  out.report.lambdas = lambdas;

  std::mt19937_64 rng(seed);
  auto make = [&](std::uint64_t s) { return near_ball ? near_ball_body(grid, s, 0.05) : corpus_body(grid, s); };
  std::optional<ConvexBody> best_k, best_l;
  int trial = 0;
  auto record = [&](const ConvexBody& K, const ConvexBody& L, double l, double m) {
    out.report.add({static_cast<std::uint64_t>(trial), l, m, is_dilate(K, L), "bm"});
    if (m < out.worst_margin) {
      out.worst_margin = m;
      out.worst_seed = static_cast<std::uint64_t>(trial);
      out.worst_lambda = l;
      best_k = K;
      best_l = L;
    }
    ++trial;
  };

  // Random phase: three quarters of the budget, all three λ per pair.
  const int random_trials = std::max(1, (3 * budget) / 4);
  while (trial < random_trials) {
    const ConvexBody K = make(rng());
    const ConvexBody L = make(rng());
    const double vk = dual_quermassintegral(K, q);
    const double vl = dual_quermassintegral(L, q);
    for (double l : lambdas) {
      if (trial >= random_trials) break;
      record(K, L, l, bm_margin(K, L, p, q, l, vk, vl));
    }
  }

  // Local phase: multiplicative perturbations of the worst pair, accepted when
  // they lower the margin at its λ.
  double eps = near_ball ? 0.01 : 0.05;
  while (trial < budget) {
    const bool move_k = (rng() & 1) != 0;
    const ConvexBody& base = move_k ? *best_k : *best_l;
    const std::optional<ConvexBody> trial_body = perturb(base, rng(), eps);
    if (!trial_body || (near_ball && (trial_body->support().max() > 1.05 || trial_body->support().min() < 0.95))) {
      ++trial;
      eps *= 0.7;
      continue;
    }
    const ConvexBody K = move_k ? *trial_body : *best_k;
    const ConvexBody L = move_k ? *best_l : *trial_body;
    const double before = out.worst_margin;
    record(K, L, out.worst_lambda, pair_margin(K, L, p, q, out.worst_lambda));
    eps = out.worst_margin < before ? std::min(2.0 * eps, 0.2) : 0.8 * eps;
    eps = std::max(eps, 1e-4);
  }

  out.witness_k = best_k;
  out.witness_l = best_l;
  out.refined_margin = out.worst_margin;
  out.discretization_error = std::numeric_limits<double>::infinity();
  const auto K2 = refine(*best_k), L2 = refine(*best_l);
  if (K2 && L2) {
    out.refined_margin = pair_margin(*K2, *L2, p, q, out.worst_lambda);
    out.discretization_error = std::abs(out.refined_margin - out.worst_margin);
    out.violation_confirmed = confirm_violation(out.worst_margin, out.refined_margin);
  }
  out.report.confirmed_violations = out.violation_confirmed ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Emission

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_records(std::ostream& os, const InequalityReport& r) {
  for (const auto& inst : r.instances) {
    os << "inequality=" << to_string(r.id) << " n=" << r.n << " p=" << format_double(r.p)
       << " q=" << format_double(r.q) << " seed=" << inst.seed << " quantity=" << inst.quantity
       << " lambda=" << format_double(inst.lambda) << " margin=" << format_double(inst.margin)
       << " equality_case=" << (inst.equality_case ? 1 : 0) << "\n";
  }
}

void write_records(std::ostream& os, const AuditReport& r) {
  for (const auto& a : r.instances) {
    os << "audit=C0 n=" << r.n << " p=" << format_double(r.p) << " q=" << format_double(r.q)
       << " lambda=" << format_double(r.lambda) << " seed=" << a.seed << " converged=" << (a.converged ? 1 : 0)
       << " max_h=" << format_double(a.max_h) << " min_h=" << format_double(a.min_h)
       << " volume=" << format_double(a.volume) << " residual=" << format_double(a.residual)
       << " f_min=" << format_double(a.f_min) << " f_max=" << format_double(a.f_max) << "\n";
  }
}

void write_summary(std::ostream& os, const InequalityReport& r) {
  int negative = 0, equality = 0;
  double eq_abs = 0.0;
  for (const auto& inst : r.instances) {
    if (inst.margin < 0.0) ++negative;
    if (inst.equality_case) {
      ++equality;
      eq_abs = std::max(eq_abs, std::abs(inst.margin));
    }
  }
  os << std::left << std::setw(22) << "inequality" << to_string(r.id) << "\n"
     << std::setw(22) << "n" << r.n << "\n"
     << std::setw(22) << "p" << format_double(r.p) << "\n"
     << std::setw(22) << "q" << format_double(r.q) << "\n"
     << std::setw(22) << "instances" << r.instances.size() << "\n"
     << std::setw(22) << "seeds" << r.seeds().size() << "\n"
     << std::setw(22) << "min margin" << format_double(r.instances.empty() ? 0.0 : r.min_margin) << "\n"
     << std::setw(22) << "negative margins" << negative << "\n"
     << std::setw(22) << "equality cases" << equality << "\n"
     << std::setw(22) << "max |equality margin|" << format_double(eq_abs) << "\n"
     << std::setw(22) << "confirmed violations" << r.confirmed_violations << "\n";
}

void write_summary(std::ostream& os, const AuditReport& r) {
  double max_min_h = 0.0;
  for (const auto& a : r.instances)
    if (a.converged) max_min_h = std::max(max_min_h, a.min_h);
  os << std::left << std::setw(22) << "audit" << "C0" << "\n"
     << std::setw(22) << "n" << r.n << "\n"
     << std::setw(22) << "p" << format_double(r.p) << "\n"
     << std::setw(22) << "q" << format_double(r.q) << "\n"
     << std::setw(22) << "lambda" << format_double(r.lambda) << "\n"
     << std::setw(22) << "instances" << r.instances.size() << "\n"
     << std::setw(22) << "failures" << r.failures << "\n"
     << std::setw(22) << "C_emp" << format_double(r.c_emp) << "\n"
     << std::setw(22) << "max min h" << format_double(max_min_h) << "\n"
     << std::setw(22) << "min h bound" << format_double(std::pow(r.lambda, 1.0 / (r.q - r.p))) << "\n";
}

void write_plot(std::ostream& os, const InequalityReport& r) {
  for (const auto& inst : r.instances)
    if (!std::isnan(inst.lambda)) os << format_double(inst.lambda) << " " << format_double(inst.margin) << "\n";
}

}  // namespace dmk
