#pragma once

// Damped Newton solver for the L_p dual Minkowski equation
//   h^{1-p} (h² + |∇h|²)^{(q-n)/2} det(∇²h + hI) = f   on S^{n-1},
// and a descent method for the associated minimization problem.
//
// Unknowns: on S^1 the node values (collocation with the exact discrete
// Jacobian, dense LU); on S^2 the spherical-harmonic coefficients (Galerkin
// projection of the node residual, matrix-free GMRES preconditioned by the
// frozen-mean operator ā Δ + c̄).

#include <optional>
#include <string>
#include <vector>

#include "dmk/body.hpp"
#include "dmk/dual.hpp"

namespace dmk {

struct LineSearch {
  double backtrack = 0.5;
  double min_step = 1e-6;
};

struct SolverConfig {
  double residual_tol = 1e-10;
  int max_newton_iters = 50;
  int continuity_steps = 10;
  LineSearch damping;
  /// Starting support function; the unit ball when empty. Must be certified convex.
  std::optional<ScalarField> initialization;

  /// Throws std::invalid_argument on non-positive tolerances or step counts.
  void validate() const;
};

struct SolveReport {
  bool converged = false;
  /// Sup-norm of the node residual at the returned iterate.
  double final_residual = 0.0;
  /// max |density - f| / max f at the returned iterate.
  double density_error = 0.0;
  /// Newton iterations per continuity step (substeps included).
  std::vector<int> iterations;
  /// Convexity margin after each continuity step.
  std::vector<double> convexity_margin;
  /// Set when a near-kernel linear system was regularized.
  bool ill_conditioned = false;
  double wall_seconds = 0.0;
  std::string message;
};

struct SolveResult {
  ConvexBody body;
  SolveReport report;
};

/// Node-wise log det(∇²h + hI) - (p-1) log h - ((n-q)/2) log(h² + |∇h|²) - log f.
/// Throws std::invalid_argument when h or f is not positive, the grids differ,
/// or det ≤ 0 at some node.
ScalarField residual(const ScalarField& h, const ScalarField& f, const ProblemParams& params);

/// ψ ↦ Δψ + (q - p)ψ, the linearization of the residual at h ≡ 1, f ≡ 1.
class LinearizedOperator {
 public:
  explicit LinearizedOperator(const ProblemParams& params) : params_(params) {}
  ScalarField operator()(const ScalarField& psi) const;
  /// q - p - k(k + n - 2).
  double eigenvalue(int k) const;
  const ProblemParams& params() const { return params_; }

 private:
  ProblemParams params_;
};

LinearizedOperator linearized_operator(const ProblemParams& params);

/// Continuation f_t = Ψ(h_0)^{1-t} f^t over continuity_steps steps, where Ψ is
/// the left-hand side of the equation and h_0 the initialization (Ψ(1) = 1, so
/// the unit-ball start follows f_t = f^t). Each step runs damped Newton with
/// a residual-norm Armijo search that keeps h positive and strictly convex;
/// a failed step is retried on halved substeps. Even f with an even start
/// yields exactly even iterates. The result is the solution reached along
/// the path, which need not be unique away from f ≡ 1. Non-convergence is
/// reported with the best iterate; parameter violations throw.
SolveResult solve_lp_dual_minkowski(const ScalarField& f, const ProblemParams& params,
                                    const SolverConfig& cfg = {});

/// Φ(h_L) = Ṽ_q(L)^{-p/q} (1/n) ∫ (h_L / h_K)^p density_{0,q}(K). K smooth;
/// L may be discrete. Degree-0 homogeneous in L.
double phi_value(const ConvexBody& K, const ConvexBody& L, double p, double q);
/// Φ(φ) = Ṽ_q([φ])^{-p/q} (1/n) ∫ (φ / h_K)^p density_{0,q}(K) for positive data φ.
double phi_value(const ConvexBody& K, const ScalarField& phi, double p, double q);

struct PhiResult {
  /// Minimizer normalized to Ṽ_q = 1.
  ConvexBody body;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Φ after each accepted iterate (non-increasing).
  std::vector<double> trace;
  /// Sup-norm of the relative Euler-Lagrange defect at the minimizer.
  double stationarity = 0.0;
  std::string message;
};

/// Projected descent for Φ on u = log φ: Sobolev-preconditioned gradient
/// steps, Wulff projection of every trial iterate, Armijo backtracking from
/// an initial step of 0.1 that doubles after each first-try acceptance (capped
/// at 1). Starts from cfg.initialization or the unit ball; runs at most
/// max_newton_iters·continuity_steps iterations and stops when the line search
/// can no longer decrease Φ. Converged means an Euler-Lagrange defect ≤ 1e-6.
/// Requires 0 < p < 1 ≤ q ≤ n and a smooth K; throws std::invalid_argument
/// otherwise.
PhiResult minimize_phi(const ConvexBody& K, const ProblemParams& params, const SolverConfig& cfg = {});

/// max over nodes of |h_K^{-p} d_K / (h_L^{-p} d_L · A/V) - 1| with d the
/// density_{0,q}, A = (1/n)∫(h_L/h_K)^p d_K and V = Ṽ_q(L).
double euler_lagrange_defect(const ConvexBody& K, const ConvexBody& L, double p, double q);

}  // namespace dmk
