#pragma once

// Batch verification of the L_p dual Brunn-Minkowski and Minkowski
// inequalities, their equivalence, uniqueness near the ball and a priori
// bounds, over deterministic corpora.
//
// Margins use the convention LHS - RHS, so a margin ≥ 0 means the
// inequality holds at that instance.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dmk/solver.hpp"

namespace dmk {

enum class Inequality { kBM, kMinkowski, kEquivalence, kJensen };
std::string to_string(Inequality id);

struct Instance {
  std::uint64_t seed = 0;
  /// NaN when the quantity has no λ.
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double margin = 0.0;
  bool equality_case = false;
  /// What the margin measures ("bm", "mink", "concavity", "derivative_gap", "jensen").
  std::string quantity;
};

struct InequalityReport {
  Inequality id = Inequality::kBM;
  int n = 2;
  double p = 0.0;
  double q = 0.0;
  std::vector<double> lambdas;
  std::vector<Instance> instances;
  double min_margin = std::numeric_limits<double>::infinity();
  /// Instances whose negative margin survived the resolution re-check.
  int confirmed_violations = 0;

  void add(Instance inst);
  /// Appends `other`'s instances; the headers must agree.
  void merge(const InequalityReport& other);
  /// Stable sort by (seed, λ).
  void sort();
  std::vector<std::uint64_t> seeds() const;
};

/// Margins above -kMarginTol count as holding (quadrature and solver error).
inline constexpr double kMarginTol = 1e-9;

/// A negative margin is a confirmed violation when it and its re-evaluation on
/// the 2× grid are both below -kMarginTol and it is below -10× their difference.
bool confirm_violation(double margin, double refined);

/// The same body sampled on the 2× grid from its model; nullopt for discrete bodies.
std::optional<ConvexBody> refine(const ConvexBody& K);

/// True when h_L / h_K is constant to 1e-12 relative (L a dilate of K).
bool is_dilate(const ConvexBody& K, const ConvexBody& L);

/// Ṽ_q((1-λ)K +_p λL)^{p/q} - (1-λ)Ṽ_q(K)^{p/q} - λṼ_q(L)^{p/q} for each λ.
/// Requires p > 0, q ∈ (0, n], λ ∈ [0, 1], both bodies symmetric.
InequalityReport check_bm(const ConvexBody& K, const ConvexBody& L, double p, double q,
                          const std::vector<double>& lambdas, std::uint64_t seed = 0);

/// (∫(h_L/h_K)^p dC̄_{q,K})^{1/p} - (Ṽ_q(L)/Ṽ_q(K))^{1/q} with C̄ the mass-1
/// normalized dual curvature measure of K. K must be smooth.
InequalityReport check_minkowski(const ConvexBody& K, const ConvexBody& L, double p, double q,
                                 std::uint64_t seed = 0);

struct EquivalenceReport {
  InequalityReport report;  // concavity margins per midpoint triple and the derivative gap
  std::vector<double> lambdas;
  std::vector<double> f;  // Ṽ_q(Q_λ)^{p/q}
  double concavity_margin = 0.0;
  double fprime_analytic = 0.0;
  double fprime_numeric = 0.0;
  /// f′(0) - (f(1) - f(0)), analytic f′(0).
  double derivative_gap = 0.0;
  double fprime_relative_error = 0.0;
};

/// f(λ) = Ṽ_q(Q_λ)^{p/q} with Q_λ = (1-λ)K +_p λL on 13 equispaced λ; midpoint
/// concavity over every triple on the grid; f′(0) from the first variation,
/// Ṽ_q(K)^{p/q-1}[(1/n)∫(h_L/h_K)^p density_{0,q}(K) - Ṽ_q(K)], and from a
/// fourth-order one-sided difference. K must be smooth.
EquivalenceReport equivalence_probe(const ConvexBody& K, const ConvexBody& L, double p, double q,
                                    std::uint64_t seed = 0);

/// The two Minkowski margins of (Q_λ, K) and (Q_λ, L) and the BM margin at λ.
/// When both Minkowski margins are ≥ 0 the BM margin is ≥ 0 as well, up to
/// the defect of Q_λ's support against the p-mean on the support of its measure.
struct StepOneCheck {
  double mink_k = 0.0;
  double mink_l = 0.0;
  double bm = 0.0;
};
StepOneCheck equivalence_step_one(const ConvexBody& K, const ConvexBody& L, double p, double q, double lambda);

/// Node-wise (1-λ)h_K + λh_L ≤ h_{(1-λ)K +_p λL} + 1e-12, p ≥ 1.
bool jensen_containment(const ConvexBody& K, const ConvexBody& L, double p, double lambda);
/// min over nodes of h_{p-combination} - ((1-λ)h_K + λh_L).
double jensen_margin(const ConvexBody& K, const ConvexBody& L, double p, double lambda);

struct UniquenessReport {
  std::vector<SolveReport> solves;
  std::vector<std::string> initializations;
  double max_distance = 0.0;
  bool unique = false;
  /// Some solve failed; `unique` is then meaningless.
  bool inconclusive = false;
};

/// Solves from n_inits starts (unit ball, dilates 0.8 and 1.25, then random
/// convex perturbations of amplitude 0.1) and measures the largest pairwise
/// sup-distance of the solutions. Requires ‖f-1‖_∞ ≤ 0.1 and (p,q) in
/// p ∈ (0,1), q = n or 1 < p < q ≤ n.
UniquenessReport uniqueness_probe(const ScalarField& f, const ProblemParams& params, int n_inits,
                                  const SolverConfig& cfg = {}, std::uint64_t seed = 1, double threshold = 1e-7);

struct AuditInstance {
  std::uint64_t seed = 0;
  bool converged = false;
  double max_h = 0.0;
  double min_h = 0.0;
  double volume = 0.0;
  double residual = 0.0;
  double f_min = 0.0;
  double f_max = 0.0;
};

struct AuditReport {
  int n = 2;
  double p = 0.0;
  double q = 0.0;
  double lambda = 1.0;
  std::vector<AuditInstance> instances;
  /// max over converged instances of max(max h, 1/volume).
  double c_emp = 0.0;
  int failures = 0;
};

/// Data with λ^{-1} ≤ f ≤ λ: f = λ^g for g an even band-limited field with
/// sup-norm 1 drawn per seed (seed, seed+1, ...). Requires λ ≥ 1 and solver
/// parameters.
ScalarField audit_density(GridPtr grid, double lambda, std::uint64_t seed);

AuditReport c0_audit(GridPtr grid, double lambda, const ProblemParams& params, int n_instances, std::uint64_t seed,
                     const SolverConfig& cfg = {}, int threads = 1);

struct SearchResult {
  InequalityReport report;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::uint64_t worst_seed = 0;
  double worst_lambda = 0.0;
  /// Re-evaluation of the worst instance on the 2× grid.
  double refined_margin = 0.0;
  double discretization_error = 0.0;
  bool violation_confirmed = false;
  std::optional<ConvexBody> witness_k;
  std::optional<ConvexBody> witness_l;
};

/// Random symmetric pairs from the corpus, then local perturbation of the
/// worst pair, minimizing the BM margin over λ ∈ {0.25, 0.5, 0.75}. `near_ball`
/// keeps both bodies within 0.05 of the unit ball. A violation is confirmed
/// only when the margin is below -10× the change under 2× refinement. Every
/// evaluated pair is an instance; rejected perturbations still use budget.
SearchResult counterexample_search(GridPtr grid, double p, double q, int budget, std::uint64_t seed,
                                   bool near_ball = false);

// ---------------------------------------------------------------------------
// Corpora and batches

/// Deterministic symmetric body for a seed: amplitude in [0.05, 0.55), band in {2, 4, 6}.
ConvexBody corpus_body(GridPtr grid, std::uint64_t seed);
/// A symmetric body within `radius` of the unit ball in sup-norm.
ConvexBody near_ball_body(GridPtr grid, std::uint64_t seed, double radius);

/// check_bm over pairs (corpus_body(2s), corpus_body(2s+1)) for every seed s.
/// Margins below -kMarginTol are re-checked on the 2× grid and counted in
/// confirmed_violations.
InequalityReport bm_batch(GridPtr grid, double p, double q, const std::vector<std::uint64_t>& seeds,
                          const std::vector<double>& lambdas, int threads = 1);
/// check_minkowski over (near_ball_body(2s, 0.05), corpus_body(2s+1)), with
/// the same re-check as bm_batch.
InequalityReport minkowski_batch(GridPtr grid, double p, double q, const std::vector<std::uint64_t>& seeds,
                                 int threads = 1);

/// Runs fn(i) for i in [0, count) on `threads` workers; results land at
/// their index, so the output does not depend on scheduling.
/// The first exception thrown by any task is rethrown after all workers join.
template <typename T>
std::vector<T> run_pool(std::size_t count, int threads, const std::function<T(std::size_t)>& fn) {
  std::vector<std::optional<T>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, count == 0 ? 1 : count);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Emission (17 significant digits)

/// One `key=value` line per instance.
void write_records(std::ostream& os, const InequalityReport& r);
void write_records(std::ostream& os, const AuditReport& r);
void write_summary(std::ostream& os, const InequalityReport& r);
void write_summary(std::ostream& os, const AuditReport& r);
/// Two columns (λ, margin), instances with a λ only.
void write_plot(std::ostream& os, const InequalityReport& r);
std::string format_double(double v);

}  // namespace dmk
