#include "dmk/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/IterativeSolvers>

namespace dmk {

namespace {

// Degree-k eigenvalue of the ball linearization below this counts as a kernel.
constexpr double kNearKernel = 1e-6;
// Reciprocal condition estimate below which the dense Jacobian is regularized.
constexpr double kMinRcond = 1e-13;
constexpr double kTikhonov = 1e-10;
constexpr double kDensityTol = 1e-8;
constexpr int kMaxHalvings = 6;
// Φ is resolved to roundoff once the Euler-Lagrange defect is ~1e-8; descent
// stops there and counts as converged below kPhiStationarity.
constexpr double kPhiTarget = 1e-10;
constexpr double kPhiStationarity = 1e-6;

// Residual and frozen linearization coefficients at every node:
//   δF = tr(A⁻¹(∇²ψ + ψI)) + <b, ∇ψ> + c ψ.
struct Evaluation {
  bool admissible = false;
  double margin = 0.0;
  std::vector<double> F;
  std::vector<Mat2> ainv;
  std::vector<Vec2> b;
  std::vector<double> c;
  JetField jet;
};

Evaluation evaluate(const SphereGrid& g, const std::vector<double>& h, const std::vector<double>& log_f,
                    const ProblemParams& P) {
  Evaluation e;
  for (double v : h)
    if (!(v > 0.0) || !std::isfinite(v)) return e;
  e.jet = g.jet(h);
  const std::size_t N = h.size();
  const int n = P.n;
  e.F.resize(N);
  e.ainv.resize(N);
  e.b.resize(N);
  e.c.resize(N);
  e.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    const double hi = h[i];
    const double r2 = hi * hi + e.jet.gradient_norm2(i);
    const double lam = e.jet.shifted_hessian_min_eig(i);
    e.margin = std::min(e.margin, lam);
    if (!(lam > 0.0)) return e;
    const Mat2 A = e.jet.shifted_hessian(i);
    double det;
    if (n == 2) {
      det = A(0, 0);
      e.ainv[i] = Mat2::Zero();
      e.ainv[i](0, 0) = 1.0 / det;
    } else {
      det = A.determinant();
      e.ainv[i] = A.inverse();
    }
    e.F[i] = std::log(det) - (P.p - 1.0) * std::log(hi) - 0.5 * (n - P.q) * std::log(r2) - log_f[i];
    e.b[i] = -(n - P.q) / r2 * e.jet.gradient[i];
    e.c[i] = -(P.p - 1.0) / hi - (n - P.q) * hi / r2;
  }
  e.admissible = true;
  return e;
}

double sup_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double quadrature_norm2(const SphereGrid& g, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += g.weights()[i] * v[i] * v[i];
  return s;
}

// Merit of a residual: on S^1 its quadrature L² norm², on S^2 the norm² of its
// Galerkin projection (the quantity Newton drives to zero there).
double merit(const SphereGrid& g, const std::vector<double>& F) {
  if (g.dimension() == 2) return quadrature_norm2(g, F);
  const std::vector<double> c = g.analyze(F);
  double s = 0.0;
  for (double x : c) s += x * x;
  return s;
}

bool near_kernel(const ProblemParams& P, int max_degree, bool even_only) {
  for (int k = 0; k <= max_degree; k += even_only ? 2 : 1)
    if (std::abs(P.q - P.p - k * (k + P.n - 2.0)) < kNearKernel) return true;
  return false;
}

// ---------------------------------------------------------------------------
// S^2: Galerkin Jacobian in coefficient space, applied matrix-free.

class GalerkinJacobian;

}  // namespace
}  // namespace dmk

namespace Eigen::internal {
template <>
struct traits<dmk::GalerkinJacobian> : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace dmk {
namespace {

class GalerkinJacobian : public Eigen::EigenBase<GalerkinJacobian> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  GalerkinJacobian(const SphereGrid& g, const Evaluation& e, double shift) : g_(&g), e_(&e), shift_(shift) {}

  Eigen::Index rows() const { return static_cast<Eigen::Index>(g_->spectral_size()); }
  Eigen::Index cols() const { return rows(); }

  template <typename Rhs>
  Eigen::Product<GalerkinJacobian, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<GalerkinJacobian, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    const std::vector<double> coeffs(x.data(), x.data() + x.size());
    const std::vector<double> psi = g_->synthesize(coeffs);
    const JetField j = g_->jet(psi);
    std::vector<double> out(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const Mat2 A = j.hessian[i] + psi[i] * Mat2::Identity();
      out[i] = (e_->ainv[i].cwiseProduct(A)).sum() + e_->b[i].dot(j.gradient[i]) + e_->c[i] * psi[i];
    }
    const std::vector<double> r = g_->analyze(out);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
    if (shift_ != 0.0) y += shift_ * x;
    return y;
  }

 private:
  const SphereGrid* g_;
  const Evaluation* e_;
  double shift_;
};

// Diagonal inverse of ā Δ + c̄ with ā, c̄ the quadrature means of the frozen
// coefficients; eigenvalues near zero are pushed to ± floor.
class SpectralPreconditioner {
 public:
  SpectralPreconditioner() = default;
  template <typename M>
  SpectralPreconditioner& analyzePattern(const M&) {
    return *this;
  }
  template <typename M>
  SpectralPreconditioner& factorize(const M&) {
    return *this;
  }
  template <typename M>
  SpectralPreconditioner& compute(const M&) {
    return *this;
  }
  template <typename Rhs>
  Eigen::VectorXd solve(const Rhs& b) const {
    return inverse_.cwiseProduct(b);
  }
  Eigen::ComputationInfo info() { return Eigen::Success; }
  void set(Eigen::VectorXd inverse) { inverse_ = std::move(inverse); }

 private:
  Eigen::VectorXd inverse_;
};

}  // namespace
}  // namespace dmk

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<dmk::GalerkinJacobian, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<dmk::GalerkinJacobian, Rhs, generic_product_impl<dmk::GalerkinJacobian, Rhs>> {
  using Scalar = typename Product<dmk::GalerkinJacobian, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const dmk::GalerkinJacobian& lhs, const Rhs& rhs, const Scalar& alpha) {
    dst.noalias() += alpha * lhs.apply(rhs);
  }
};
}  // namespace Eigen::internal

namespace dmk {
namespace {

// ---------------------------------------------------------------------------
// Newton direction δh with J δh = -F.

class NewtonSystem {
 public:
  NewtonSystem(const SphereGrid& g, const ProblemParams& P, bool even) : g_(g), P_(P), even_(even) {
    const int max_degree = g.dimension() == 2 ? g.resolution() / 2 : g.resolution();
    kernel_ = near_kernel(P, max_degree, even);
    if (g.dimension() == 2) build_circulants();
  }

  bool ill_conditioned() const { return ill_; }

  // Node-space direction; empty when the linear solve fails.
  std::vector<double> direction(const Evaluation& e) {
    return g_.dimension() == 2 ? direction_dense(e) : direction_gmres(e);
  }

 private:
  void build_circulants() {
    const std::size_t N = g_.size();
    std::vector<double> e0(N, 0.0);
    e0[0] = 1.0;
    const JetField j = g_.jet(e0);
    D1_.resize(N, N);
    D2_.resize(N, N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < N; ++k) {
        const std::size_t d = (i + N - k) % N;
        D1_(i, k) = j.gradient[d](0);
        D2_(i, k) = j.hessian[d](0, 0);
      }
  }

  // Even problems are solved on the even subspace: unknowns at the first
  // N/2 nodes, columns of antipodal pairs summed.
  std::vector<double> direction_dense(const Evaluation& e) {
    const Eigen::Index N = static_cast<Eigen::Index>(g_.size());
    const Eigen::Index M = even_ ? N / 2 : N;
    Eigen::MatrixXd J(M, M);
    for (Eigen::Index i = 0; i < M; ++i) {
      const double a = e.ainv[i](0, 0), b = e.b[i](0);
      Eigen::RowVectorXd row = a * D2_.row(i) + b * D1_.row(i);
      row(i) += a + e.c[i];
      J.row(i) = even_ ? Eigen::RowVectorXd(row.head(M) + row.tail(M)) : row;
    }
    Eigen::VectorXd rhs(M);
    for (Eigen::Index i = 0; i < M; ++i) rhs(i) = -e.F[i];
    Eigen::VectorXd x;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    if (!kernel_ && lu.rcond() >= kMinRcond) {
      x = lu.solve(rhs);
    } else {
      // min |J x - rhs|² + ε²|x|², ε = kTikhonov·|J|.
      ill_ = true;
      const double eps = kTikhonov * J.lpNorm<Eigen::Infinity>();
      Eigen::MatrixXd A(2 * M, M);
      A.topRows(M) = J;
      A.bottomRows(M) = eps * Eigen::MatrixXd::Identity(M, M);
      Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * M);
      r.head(M) = rhs;
      x = A.householderQr().solve(r);
    }
    if (!x.allFinite()) return {};
    std::vector<double> d(N);
    for (Eigen::Index i = 0; i < N; ++i) d[i] = x(i % M);
    return d;
  }

  std::vector<double> direction_gmres(const Evaluation& e) {
    const std::size_t M = g_.spectral_size();
    const std::vector<double>& w = g_.weights();
    double wsum = 0.0, abar = 0.0, cbar = 0.0;
    for (std::size_t i = 0; i < g_.size(); ++i) {
      const double tr = e.ainv[i].trace();
      wsum += w[i];
      abar += w[i] * tr / (P_.n - 1);
      cbar += w[i] * (tr + e.c[i]);
    }
    abar /= wsum;
    cbar /= wsum;
    const double floor = 1e-2 * (abar + std::abs(cbar));
    Eigen::VectorXd inv(static_cast<Eigen::Index>(M));
    double mu_min = std::numeric_limits<double>::infinity(), mu_max = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      double mu = abar * g_.laplacian_eigenvalue(g_.degree_of(k)) + cbar;
      mu_min = std::min(mu_min, std::abs(mu));
      mu_max = std::max(mu_max, std::abs(mu));
      if (std::abs(mu) < floor) mu = mu < 0.0 ? -floor : floor;
      inv(static_cast<Eigen::Index>(k)) = 1.0 / mu;
    }
    const bool regularize = kernel_ || mu_min < kNearKernel * mu_max;
    if (regularize) ill_ = true;
    const double shift = regularize ? kTikhonov * mu_max : 0.0;

    GalerkinJacobian op(g_, e, shift);
    Eigen::GMRES<GalerkinJacobian, SpectralPreconditioner> gmres;
    gmres.set_restart(60);
    gmres.setMaxIterations(600);
    gmres.setTolerance(1e-13);
    gmres.compute(op);
    gmres.preconditioner().set(std::move(inv));
    const std::vector<double> Fc = g_.analyze(e.F);
    Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Fc.data(), static_cast<Eigen::Index>(M));
    Eigen::VectorXd x = gmres.solve(rhs);
    if (!x.allFinite()) return {};
    // Accept an inexact solve only while it still reduces the linear residual markedly.
    if (gmres.info() != Eigen::Success && gmres.error() > 1e-4) return {};
    return g_.synthesize(std::vector<double>(x.data(), x.data() + x.size()));
  }

  const SphereGrid& g_;
  ProblemParams P_;
  bool even_;
  bool kernel_ = false;
  bool ill_ = false;
  Eigen::MatrixXd D1_, D2_;
};

// ---------------------------------------------------------------------------
// Path following.

struct PathState {
  std::vector<double> h;
  double margin = 0.0;
};

class PathSolver {
 public:
  PathSolver(const SphereGrid& g, const ProblemParams& P, const SolverConfig& cfg, bool even)
      : g_(g), P_(P), cfg_(cfg), even_(even), system_(g, P, even) {}

  bool ill_conditioned() const { return system_.ill_conditioned(); }

  enum class Status { kConverged, kFloor, kFailed };
  struct Outcome {
    int iterations = 0;
    Status status = Status::kFailed;
  };

  // Damped Newton towards log f = target from `state` (left at the last
  // accepted iterate). Intermediate targets stop on the Galerkin-projected
  // residual, the final one on the node residual. kFloor: the line search
  // stalled with the projected residual negligible against the node residual,
  // i.e. the grid does not resolve the solution to the requested tolerance.
  Outcome newton(PathState& state, const std::vector<double>& target, double tol, bool final) {
    Outcome out;
    Evaluation e = evaluate(g_, state.h, target, P_);
    if (!e.admissible) return out;
    double m = merit(g_, e.F);
    for (int it = 0; it <= cfg_.max_newton_iters; ++it) {
      out.iterations = it;
      state.margin = e.margin;
      const double node = sup_norm(e.F);
      const double projected = final ? node : sup_norm(project(e.F));
      if (projected <= tol) {
        out.status = Status::kConverged;
        return out;
      }
      if (it == cfg_.max_newton_iters) break;
      const std::vector<double> d = system_.direction(e);
      if (d.empty()) return out;
      double s = 1.0;
      bool accepted = false;
      std::vector<double> trial(state.h.size());
      while (s >= cfg_.damping.min_step) {
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = state.h[i] + s * d[i];
        if (even_) trial = g_.symmetrize(trial);
        Evaluation et = evaluate(g_, trial, target, P_);
        if (et.admissible) {
          const double mt = merit(g_, et.F);
          if (mt <= (1.0 - 2e-4 * s) * m) {
            state.h = std::move(trial);
            e = std::move(et);
            m = mt;
            accepted = true;
            break;
          }
        }
        s *= cfg_.damping.backtrack;
      }
      if (!accepted) {
        const double p = sup_norm(project(e.F));
        if (p <= 1e-3 * node || p <= 1e-13) out.status = Status::kFloor;
        out.iterations = it + 1;
        return out;
      }
    }
    out.iterations = cfg_.max_newton_iters;
    return out;
  }

 private:
  std::vector<double> project(const std::vector<double>& F) const {
    return g_.dimension() == 2 ? F : g_.synthesize(g_.analyze(F));
  }

  const SphereGrid& g_;
  ProblemParams P_;
  const SolverConfig& cfg_;
  bool even_;
  NewtonSystem system_;
};

std::vector<double> log_density(const SphereGrid& g, const std::vector<double>& h, const ProblemParams& P) {
  const JetField j = g.jet(h);
  std::vector<double> d = curvature_density(j, P.p, P.q);
  for (double& x : d) x = std::log(x);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------

void SolverConfig::validate() const {
  if (!(residual_tol > 0.0)) throw std::invalid_argument("residual_tol must be positive");
  if (max_newton_iters < 1) throw std::invalid_argument("max_newton_iters must be at least 1");
  if (continuity_steps < 1) throw std::invalid_argument("continuity_steps must be at least 1");
  if (!(damping.backtrack > 0.0 && damping.backtrack < 1.0))
    throw std::invalid_argument("backtracking factor must lie in (0, 1)");
  if (!(damping.min_step > 0.0 && damping.min_step <= 1.0)) throw std::invalid_argument("min_step must lie in (0, 1]");
}

ScalarField residual(const ScalarField& h, const ScalarField& f, const ProblemParams& params) {
  if (h.grid() != f.grid()) throw std::invalid_argument("residual: h and f live on different grids");
  if (h.grid()->dimension() != params.n) throw std::invalid_argument("residual: dimension mismatch");
  for (double v : h.values())
    if (!(v > 0.0)) throw std::invalid_argument("residual: h must be positive");
  for (double v : f.values())
    if (!(v > 0.0)) throw std::invalid_argument("residual: f must be positive");
  const JetField j = jet(h);
  const int n = params.n;
  std::vector<double> F(h.size());
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double det = j.shifted_hessian_det(i);
    if (!(det > 0.0)) throw std::invalid_argument("residual: det(∇²h + hI) is not positive");
    const double r2 = h[i] * h[i] + j.gradient_norm2(i);
    F[i] = std::log(det) - (params.p - 1.0) * std::log(h[i]) - 0.5 * (n - params.q) * std::log(r2) - std::log(f[i]);
  }
  return ScalarField(h.grid(), std::move(F));
}

ScalarField LinearizedOperator::operator()(const ScalarField& psi) const {
  if (psi.grid()->dimension() != params_.n) throw std::invalid_argument("linearized_operator: dimension mismatch");
  std::vector<double> v = psi.grid()->laplacian(psi.values());
  const double shift = params_.q - params_.p;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += shift * psi[i];
  return ScalarField(psi.grid(), std::move(v));
}

double LinearizedOperator::eigenvalue(int k) const { return params_.q - params_.p - k * (k + params_.n - 2.0); }

LinearizedOperator linearized_operator(const ProblemParams& params) { return LinearizedOperator(params); }

SolveResult solve_lp_dual_minkowski(const ScalarField& f, const ProblemParams& params, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  params.validate_for_solver();
  cfg.validate();
  const GridPtr grid = f.grid();
  const SphereGrid& g = *grid;
  if (g.dimension() != params.n) throw std::invalid_argument("solve: grid dimension differs from n");
  for (double v : f.values())
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("solve: f must be positive and finite");

  PathState state;
  if (cfg.initialization) {
    const ScalarField& h0 = *cfg.initialization;
    if (h0.grid() != grid) throw std::invalid_argument("solve: initialization lives on another grid");
    for (double v : h0.values())
      if (!(v > 0.0)) throw std::invalid_argument("solve: initialization must be positive");
    if (!(convexity_certificate(h0) > 0.0)) throw std::invalid_argument("solve: initialization is not strictly convex");
    state.h = h0.vector();
  } else {
    state.h.assign(g.size(), 1.0);
  }
  const bool even = g.is_even(f.values()) && g.is_even(state.h);
  if (g.dimension() == 3) state.h = g.synthesize(g.analyze(state.h));
  if (even) state.h = g.symmetrize(state.h);

  std::vector<double> log_f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) log_f[i] = std::log(f[i]);
  const std::vector<double> log_start =
      cfg.initialization ? log_density(g, state.h, params) : std::vector<double>(g.size(), 0.0);
  auto target_at = [&](double t) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - t) * log_start[i] + t * log_f[i];
    if (even) v = g.symmetrize(v);
    return v;
  };

  SolveReport report;
  PathSolver solver(g, params, cfg, even);
  const double loose_tol = std::max(cfg.residual_tol, 1e-8);
  bool failed = false;
  bool floor = false;
  double t = 0.0;
  for (int step = 1; step <= cfg.continuity_steps && !failed; ++step) {
    const double t_end = static_cast<double>(step) / cfg.continuity_steps;
    int iterations = 0;
    double dt = t_end - t;
    int halvings = 0;
    while (t < t_end) {
      const double t_next = std::min(t_end, t + dt);
      const bool final = t_next == 1.0;
      PathState trial = state;
      const auto k = solver.newton(trial, target_at(t_next), final ? cfg.residual_tol : loose_tol, final);
      iterations += k.iterations;
      if (k.status == PathSolver::Status::kConverged) {
        state = std::move(trial);
        t = t_next;
        continue;
      }
      if (final && k.status == PathSolver::Status::kFloor) {
        state = std::move(trial);
        floor = failed = true;
        break;
      }
      if (++halvings > kMaxHalvings) {
        failed = true;
        break;
      }
      dt *= 0.5;
    }
    report.iterations.push_back(iterations);
    report.convexity_margin.push_back(state.margin);
  }

  const Evaluation e = evaluate(g, state.h, log_f, params);
  report.ill_conditioned = solver.ill_conditioned();
  report.final_residual = e.admissible ? sup_norm(e.F) : std::numeric_limits<double>::infinity();
  if (e.admissible) {
    const std::vector<double> d = curvature_density(e.jet, params.p, params.q);
    double err = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) err = std::max(err, std::abs(d[i] - f[i]));
    report.density_error = err / f.max();
  } else {
    report.density_error = std::numeric_limits<double>::infinity();
  }
  report.converged = !failed && report.final_residual <= cfg.residual_tol && report.density_error <= kDensityTol;
  if (report.converged) {
    report.message = "converged";
  } else if (floor) {
    report.message = "residual floor above tolerance: the grid does not resolve the solution";
  } else if (failed) {
    report.message = "continuation stalled at t=" + std::to_string(t);
  } else {
    report.message = "residual above tolerance";
  }
  ConvexBody body = ConvexBody::from_model(grid, spectral_model(grid, state.h));
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return SolveResult{std::move(body), std::move(report)};
}

// ---------------------------------------------------------------------------
// The minimization problem.

namespace {

void require_phi_params(const ConvexBody& K, const ProblemParams& P) {
  if (P.n != K.dimension()) throw std::invalid_argument("minimize_phi: dimension mismatch");
  if (!(P.p > 0.0 && P.p < 1.0)) throw std::invalid_argument("minimize_phi requires p in (0, 1)");
  if (!(P.q >= 1.0 && P.q <= P.n)) throw std::invalid_argument("minimize_phi requires q in [1, n]");
  if (!K.smooth()) throw std::invalid_argument("minimize_phi: K must be smooth");
}

// Pieces of Φ at L: A = (1/n)∫(h_L/h_K)^p d_K, V = Ṽ_q(L).
struct PhiParts {
  double A = 0.0;
  double V = 0.0;
  double value = 0.0;
};

PhiParts phi_parts(const ConvexBody& K, const std::vector<double>& dK, const ConvexBody& L, double p, double q) {
  const auto& g = *K.grid();
  const int n = g.dimension();
  std::vector<double> integrand(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) integrand[i] = std::pow(L.support()[i] / K.support()[i], p) * dK[i];
  PhiParts parts;
  parts.A = integrate(g, integrand) / n;
  parts.V = dual_quermassintegral(L, q);
  parts.value = std::pow(parts.V, -p / q) * parts.A;
  return parts;
}

// Relative Euler-Lagrange defect r = (h_L/h_K)^p d_K / ((A/V) d_L) - 1.
std::vector<double> el_defect(const ConvexBody& K, const std::vector<double>& dK, const ConvexBody& L,
                              const std::vector<double>& dL, const PhiParts& parts, double p) {
  std::vector<double> r(dK.size());
  const double ratio = parts.A / parts.V;
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = std::pow(L.support()[i] / K.support()[i], p) * dK[i] / (ratio * dL[i]) - 1.0;
  return r;
}

std::vector<double> density0(const ConvexBody& B, double q) {
  return dual_curvature_density(B, ProblemParams::make(B.dimension(), 0.0, q)).values.vector();
}

// (I - Δ)^{-1}.
std::vector<double> sobolev_smooth(const SphereGrid& g, const std::vector<double>& v) {
  std::vector<double> c = g.analyze(v);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] /= 1.0 - g.laplacian_eigenvalue(g.degree_of(k));
  return g.synthesize(c);
}

}  // namespace

double phi_value(const ConvexBody& K, const ConvexBody& L, double p, double q) {
  if (K.grid() != L.grid()) throw std::invalid_argument("phi_value: bodies live on different grids");
  return phi_parts(K, density0(K, q), L, p, q).value;
}

double phi_value(const ConvexBody& K, const ScalarField& phi, double p, double q) {
  if (K.grid() != phi.grid()) throw std::invalid_argument("phi_value: data on another grid");
  const auto& g = *K.grid();
  const std::vector<double> dK = density0(K, q);
  std::vector<double> integrand(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) integrand[i] = std::pow(phi[i] / K.support()[i], p) * dK[i];
  const double V = dual_quermassintegral(wulff_shape(phi), q);
  return std::pow(V, -p / q) * integrate(g, integrand) / g.dimension();
}

double euler_lagrange_defect(const ConvexBody& K, const ConvexBody& L, double p, double q) {
  if (K.grid() != L.grid()) throw std::invalid_argument("euler_lagrange_defect: bodies live on different grids");
  const std::vector<double> dK = density0(K, q);
  const PhiParts parts = phi_parts(K, dK, L, p, q);
  return sup_norm(el_defect(K, dK, L, density0(L, q), parts, p));
}

PhiResult minimize_phi(const ConvexBody& K, const ProblemParams& params, const SolverConfig& cfg) {
  require_phi_params(K, params);
  cfg.validate();
  const GridPtr grid = K.grid();
  const SphereGrid& g = *grid;
  const double p = params.p, q = params.q;
  const std::vector<double> dK = density0(K, q);
  const int budget = cfg.max_newton_iters * cfg.continuity_steps;

  std::vector<double> u(g.size(), 0.0);
  if (cfg.initialization) {
    if (cfg.initialization->grid() != grid) throw std::invalid_argument("minimize_phi: initialization on another grid");
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::log(cfg.initialization->values()[i]);
  }
  const bool even = g.is_even(u);

  // Wulff projection of e^u, rescaled to Ṽ_q = 1; nullopt when [e^u] is not
  // a smooth body (the density of L is needed for the next gradient).
  auto project = [&](const std::vector<double>& uu) -> std::optional<ConvexBody> {
    std::vector<double> phi(uu.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::exp(uu[i]);
    // On S^2 node data carry more degrees of freedom than the spectrum; keep
    // the iterate band-limited so its values and jet describe the same field.
    if (g.dimension() == 3) phi = g.synthesize(g.analyze(phi));
    if (even) phi = g.symmetrize(phi);
    for (double v : phi)
      if (!(v > 0.0)) return std::nullopt;
    // A certified band-limited iterate is its own Wulff shape.
    ScalarField field(grid, std::move(phi));
    if (!(convexity_certificate(field) > 0.0)) return std::nullopt;
    ConvexBody L = ConvexBody::from_model(grid, spectral_model(grid, field.vector()));
    const double V = dual_quermassintegral(L, q);
    return L.scaled(std::pow(V, -1.0 / q));
  };

  std::optional<ConvexBody> start = project(u);
  if (!start) throw std::invalid_argument("minimize_phi: initialization is not a smooth convex body");
  ConvexBody L = *start;
  PhiParts parts = phi_parts(K, dK, L, p, q);
  PhiResult out{L, parts.value, false, 0, {parts.value}, 0.0, {}};
  double step = 0.1;
  bool settled = false;
  for (int it = 0; it < budget; ++it) {
    const std::vector<double> dL = density0(L, q);
    const std::vector<double> r = el_defect(K, dK, L, dL, parts, p);
    out.stationarity = sup_norm(r);
    if (out.stationarity <= kPhiTarget) break;
    // L² gradient of Φ in u up to a positive factor: (A/V) d_L r; the descent
    // direction is its Sobolev smoothing with d_L normalized to unit mean.
    double mean_d = 0.0;
    for (double x : dL) mean_d += x;
    mean_d /= static_cast<double>(dL.size());
    std::vector<double> grad(g.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = dL[i] / mean_d * r[i];
    std::vector<double> dir = sobolev_smooth(g, grad);
    for (double& x : dir) x = -x;
    if (even) dir = g.symmetrize(dir);
    // dΦ/ds along dir, in units where the gradient is `grad`.
    const double unit = p / g.dimension() * parts.value * mean_d;
    double slope = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) slope += g.weights()[i] * grad[i] * dir[i];
    slope *= unit;

    std::vector<double> base(g.size());
    for (std::size_t i = 0; i < base.size(); ++i) base[i] = std::log(L.support()[i]);
    bool accepted = false;
    for (double s = step; s >= cfg.damping.min_step; s *= cfg.damping.backtrack) {
      std::vector<double> trial(base.size());
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = base[i] + s * dir[i];
      std::optional<ConvexBody> Lt = project(trial);
      if (!Lt) continue;
      const PhiParts pt = phi_parts(K, dK, *Lt, p, q);
      if (pt.value <= parts.value + 1e-4 * s * slope) {
        step = s == step ? std::min(1.0, 2.0 * s) : s;
        L = std::move(*Lt);
        parts = pt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      settled = true;
      break;
    }
    out.iterations = it + 1;
    out.trace.push_back(parts.value);
  }
  out.stationarity = sup_norm(el_defect(K, dK, L, density0(L, q), parts, p));
  out.converged = out.stationarity <= kPhiStationarity;
  if (out.converged) {
    out.message = "converged";
  } else {
    out.message = settled ? "line search failed" : "iteration budget exhausted";
  }
  out.body = L;
  out.value = parts.value;
  return out;
}

}  // namespace dmk
