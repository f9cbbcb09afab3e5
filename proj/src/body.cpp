#include "dmk/body.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dmk {

// ---------------------------------------------------------------------------
// ProblemParams

ProblemParams ProblemParams::make(int n, double p, double q) {
  if (n != 2 && n != 3) throw std::invalid_argument("n must be 2 or 3");
  if (!std::isfinite(p) || !std::isfinite(q)) throw std::invalid_argument("p and q must be finite");
  if (!(q > 0.0 && q <= n)) throw std::invalid_argument("q must lie in (0, n]");
  if (p < 0.0) throw std::invalid_argument("p must be non-negative");
  return ProblemParams{n, p, q};
}

void ProblemParams::validate_for_solver() const {
  if (!(q > 1.0 && q <= n)) throw std::invalid_argument("solver requires q in (1, n]");
  if (!(p > 0.0 && p < q)) throw std::invalid_argument("solver requires p in (0, q)");
}

// ---------------------------------------------------------------------------
// ConvexBody

struct ConvexBody::Cache {
  std::once_flag radial_once;
  std::unique_ptr<ScalarField> radial;
  std::once_flag resolved_once;
  std::unique_ptr<ScalarField> resolved;
  std::once_flag hull_once;
  DualHull hull;
};

namespace {

void require_positive(const ScalarField& h, const char* what) {
  for (double v : h.values())
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + ": values must be strictly positive");
}

// ρ(u_i) = min over the plane <y, u_i> = 1 of H(y), by damped Newton in the
// tangent coordinates. Returns false when the iteration does not settle.
bool radial_newton(const SupportModel& m, const SphereGrid& g, std::size_t i, double& rho) {
  const int dim = g.dimension() - 1;
  const Vec3& u = g.node(i);
  const Vec3 t[2] = {g.tangent(i, 0), dim == 2 ? g.tangent(i, 1) : Vec3::Zero()};
  Vec2 a = Vec2::Zero();
  auto eval = [&](const Vec2& c, Vec2* grad, Mat2* hess) {
    const Vec3 y = u + c(0) * t[0] + c(1) * t[1];
    const double r = y.norm();
    const Vec3 x = y / r;
    if (!grad) return r * m.value(x);
    const PointJet j = m.jet(x);
    for (int k = 0; k < dim; ++k) (*grad)(k) = j.gradient.dot(t[k]);
    for (int k = 0; k < dim; ++k)
      for (int l = 0; l < dim; ++l) (*hess)(k, l) = t[k].dot(j.hessian * t[l]) / r;
    return r * j.value;
  };
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Identity();
  double H = eval(a, &grad, &hess);
  for (int iter = 0; iter < 60; ++iter) {
    Vec2 step = Vec2::Zero();
    if (dim == 1) {
      step(0) = hess(0, 0) > 0.0 ? -grad(0) / hess(0, 0) : -grad(0);
    } else {
      Eigen::SelfAdjointEigenSolver<Mat2> es(hess);
      if (es.eigenvalues()(0) > 1e-14 * std::max(1.0, std::abs(es.eigenvalues()(1))))
        step = -hess.ldlt().solve(grad);
      else
        step = -grad;
    }
    const double decrement = -grad.dot(step);
    // H is quadratic at the minimum, so a step below 1e-8 leaves H exact to roundoff.
    if (step.norm() < 1e-8 * (1.0 + a.norm()) || decrement < 1e-20 * H) {
      rho = H;
      return true;
    }
    double s = 1.0;
    for (int ls = 0; ls < 40; ++ls, s *= 0.5) {
      const Vec2 trial = a + s * step;
      const double Ht = eval(trial, nullptr, nullptr);
      // Near the minimum the decrease drops below roundoff in H.
      if (Ht <= H - 1e-4 * s * decrement || Ht <= H + 4e-16 * std::abs(H)) {
        a = trial;
        break;
      }
      if (ls == 39) {
        // No measurable decrease left: H is within roundoff of the minimum.
        rho = H;
        return decrement < 1e-13 * H;
      }
    }
    H = eval(a, &grad, &hess);
  }
  rho = H;
  return false;
}

// h(u_i) = max over the plane <y, u_i> = 1 of ρ(y/|y|)/|y|, by Newton from
// the best node. Returns false when the iteration does not settle.
bool support_newton(const SupportModel& m, const SphereGrid& g, std::size_t i, const ScalarField& rho, double& h) {
  const int dim = g.dimension() - 1;
  const Vec3& u = g.node(i);
  const Vec3 t[2] = {g.tangent(i, 0), dim == 2 ? g.tangent(i, 1) : Vec3::Zero()};
  std::size_t best = i;
  double best_v = rho[i];
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double c = g.node(j).dot(u);
    if (c > 0.0 && rho[j] * c > best_v) {
      best_v = rho[j] * c;
      best = j;
    }
  }
  const Vec3 y0 = g.node(best) / g.node(best).dot(u);
  Vec2 a = Vec2::Zero();
  for (int k = 0; k < dim; ++k) a(k) = y0.dot(t[k]);
  // R(c) = F(y)/|y|² with F the degree-1 extension of ρ and y = u + T c.
  auto eval = [&](const Vec2& c, Vec2* grad, Mat2* hess) {
    const Vec3 y = u + c(0) * t[0] + c(1) * t[1];
    const double s = y.squaredNorm();
    const double r = std::sqrt(s);
    const Vec3 x = y / r;
    if (!grad) return m.value(x) / r;
    const PointJet j = m.jet(x);
    const double F = r * j.value;
    Vec2 TG = Vec2::Zero();
    Mat2 THT = Mat2::Zero();
    for (int k = 0; k < dim; ++k) TG(k) = j.gradient.dot(t[k]);
    for (int k = 0; k < dim; ++k)
      for (int l = 0; l < dim; ++l) THT(k, l) = t[k].dot(j.hessian * t[l]) / r;
    Vec2 cc = Vec2::Zero();
    cc.head(dim) = c.head(dim);
    *grad = TG / s - 2.0 * F * cc / (s * s);
    *hess = THT / s - 2.0 * (TG * cc.transpose() + cc * TG.transpose()) / (s * s) -
            2.0 * F * Mat2::Identity() / (s * s) + 8.0 * F * cc * cc.transpose() / (s * s * s);
    if (dim == 1) {
      (*grad)(1) = 0.0;
      hess->row(1).setZero();
      hess->col(1).setZero();
      (*hess)(1, 1) = -1.0;
    }
    return F / s;
  };
  Vec2 grad;
  Mat2 hess;
  double R = eval(a, &grad, &hess);
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::SelfAdjointEigenSolver<Mat2> es(hess);
    const Vec2 step = es.eigenvalues()(1) < 0.0 ? Vec2(-hess.ldlt().solve(grad)) : grad;
    const double increment = grad.dot(step);
    if (step.norm() < 1e-8 * (1.0 + a.norm()) || increment < 1e-20 * R) {
      h = R;
      return true;
    }
    double sc = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, sc *= 0.5) {
      const Vec2 trial = a + sc * step;
      const double Rt = eval(trial, nullptr, nullptr);
      if (Rt >= R + 1e-4 * sc * increment || Rt >= R - 4e-16 * std::abs(R)) {
        a = trial;
        moved = true;
        break;
      }
    }
    if (!moved) {
      h = R;
      return increment < 1e-13 * R;
    }
    R = eval(a, &grad, &hess);
  }
  h = R;
  return false;
}

// Local tensor-product Lagrange interpolation of node samples in (colatitude,
// longitude), or in the angle on S^1. Rows past a pole are the reflected rows
// shifted by half a turn, so the sampled function stays smooth in the
// extended coordinates.
double radial_discrete(const ScalarField& h, std::size_t j) {
  const auto& g = *h.grid();
  const Vec3& u = g.node(j);
  double best = h[j];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double c = g.node(i).dot(u);
    if (c > 0.0) best = std::min(best, h[i] / c);
  }
  return best;
}

ScalarField radial_values(const SupportModel* model, const ScalarField& h, bool symmetric) {
  const auto& g = *h.grid();
  std::vector<double> rho(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t a = g.antipode(i);
    if (symmetric && a < i) {
      rho[i] = rho[a];
      continue;
    }
    double r = 0.0;
    if (model && radial_newton(*model, g, i, r) && r <= h[i] * (1.0 + 1e-14))
      rho[i] = std::min(r, h[i]);
    else
      rho[i] = radial_discrete(h, i);
  }
  return ScalarField(h.grid(), std::move(rho));
}

}  // namespace

ConvexBody::ConvexBody(ScalarField support, ModelPtr model, double margin)
    : support_(std::move(support)), model_(std::move(model)), margin_(margin), cache_(std::make_shared<Cache>()) {
  symmetric_ = support_.grid()->is_even(support_.values());
}

ConvexBody ConvexBody::from_model(GridPtr grid, ModelPtr model) {
  ScalarField h(grid, model->node_values(*grid));
  require_positive(h, "from_model");
  const double margin = convexity_certificate(h);
  if (margin < -kConvexityTol * h.max())
    throw std::invalid_argument("support function is not convex (certificate " + std::to_string(margin) + ")");
  return ConvexBody(std::move(h), std::move(model), margin);
}

ConvexBody ConvexBody::from_support(const ScalarField& h) {
  require_positive(h, "from_support");
  const auto& g = *h.grid();
  if (g.spectral_tail(h.values()) <= kResolvedTail) {
    const double margin = convexity_certificate(h);
    if (margin < -kConvexityTol * h.max())
      throw std::invalid_argument("support function is not convex (certificate " + std::to_string(margin) + ")");
    return ConvexBody(h, spectral_model(h.grid(), h.vector()), margin);
  }
  return discrete(h);
}

ConvexBody ConvexBody::discrete(const ScalarField& h) {
  require_positive(h, "discrete");
  const ScalarField w = wulff_support(h);
  double gap = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) gap = std::max(gap, h[i] - w[i]);
  if (gap > 1e-10 * h.max())
    throw std::invalid_argument("support data is not discretely convex (Wulff gap " + std::to_string(gap) + ")");
  return ConvexBody(h, nullptr, 0.0);
}

const ScalarField& ConvexBody::radial() const {
  std::call_once(cache_->radial_once, [this] {
    cache_->radial = std::make_unique<ScalarField>(radial_values(model_.get(), support_, symmetric_));
  });
  return *cache_->radial;
}

const ScalarField& ConvexBody::resolved_radial() const {
  std::call_once(cache_->resolved_once, [this] {
    ScalarField rho = radial();
    if (model_) {
      const int n = dimension();
      const int cap = n == 2 ? 16 * grid()->resolution() : std::max(96, grid()->resolution());
      for (int res = 2 * grid()->resolution(); res <= cap && grid()->spectral_tail(rho.values()) > kResolvedTail;
           res *= 2) {
        const GridPtr fine = build_grid(n, res);
        rho = radial_values(model_.get(), ScalarField(fine, model_->node_values(*fine)), symmetric_);
        if (fine->spectral_tail(rho.values()) <= kResolvedTail) break;
      }
    }
    cache_->resolved = std::make_unique<ScalarField>(std::move(rho));
  });
  return *cache_->resolved;
}

const ConvexBody::DualHull& ConvexBody::dual_hull() const {
  std::call_once(cache_->hull_once, [this] {
    const auto& g = *grid();
    if (g.dimension() == 2) {
      std::vector<Eigen::Vector2d> pts(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.node(i).head<2>() / support_[i];
      cache_->hull.vertices_2d = hull_2d(pts);
    } else {
      std::vector<Vec3> pts(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.node(i) / support_[i];
      cache_->hull.hull_3d = hull_3d(pts);
    }
  });
  return cache_->hull;
}

ConvexBody ConvexBody::scaled(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("scale factor must be positive");
  std::vector<double> v(support_.vector());
  for (double& x : v) x *= t;
  return ConvexBody(ScalarField(grid(), std::move(v)), model_ ? scaled_model(model_, t) : nullptr, t * margin_);
}

// ---------------------------------------------------------------------------
// Certificates and constructors

double convexity_certificate(const ScalarField& h) {
  const JetField j = jet(h);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < j.size(); ++i) m = std::min(m, j.shifted_hessian_min_eig(i));
  return m;
}

ConvexBody ball(GridPtr grid, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
  return ConvexBody::from_model(grid, ball_model(r, grid->dimension()));
}

ConvexBody ellipsoid(GridPtr grid, const std::vector<double>& a) {
  const int n = grid->dimension();
  if (static_cast<int>(a.size()) != n) throw std::invalid_argument("ellipsoid needs one semiaxis per dimension");
  for (double x : a)
    if (!(x > 0.0)) throw std::invalid_argument("semiaxes must be positive");
  return ConvexBody::from_model(grid, ellipsoid_model(Vec3(a[0], a[1], n == 3 ? a[2] : 0.0)));
}

// ---------------------------------------------------------------------------
// Wulff shapes

ScalarField wulff_support(const ScalarField& f) {
  require_positive(f, "wulff_shape");
  const auto& g = *f.grid();
  const std::size_t N = g.size();
  std::vector<double> w(f.vector());
  if (g.dimension() == 2) {
    std::vector<Eigen::Vector2d> pts(N);
    for (std::size_t i = 0; i < N; ++i) pts[i] = g.node(i).head<2>() / f[i];
    const std::vector<int> hv = hull_2d(pts);
    std::vector<char> is_vertex(N, 0);
    for (int v : hv) is_vertex[v] = 1;
    // Edge lines {y : <ν, y> = d} of the dual hull.
    std::vector<Eigen::Vector2d> nu(hv.size());
    std::vector<double> d(hv.size());
    for (std::size_t k = 0; k < hv.size(); ++k) {
      const Eigen::Vector2d& a = pts[hv[k]];
      const Eigen::Vector2d& b = pts[hv[(k + 1) % hv.size()]];
      const Eigen::Vector2d e = b - a;
      nu[k] = Eigen::Vector2d(e.y(), -e.x()).normalized();
      d[k] = nu[k].dot(a);
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (is_vertex[i]) continue;
      double best = 0.0;
      const Eigen::Vector2d u = g.node(i).head<2>();
      for (std::size_t k = 0; k < hv.size(); ++k) best = std::max(best, nu[k].dot(u) / d[k]);
      w[i] = std::min(f[i], best);
    }
  } else {
    std::vector<Vec3> pts(N);
    for (std::size_t i = 0; i < N; ++i) pts[i] = g.node(i) / f[i];
    const Hull3 hull = hull_3d(pts);
    for (std::size_t i = 0; i < N; ++i) {
      if (hull.is_vertex[i]) continue;
      double best = 0.0;
      for (const auto& F : hull.faces) best = std::max(best, F.normal.dot(g.node(i)) / F.offset);
      w[i] = std::min(f[i], best);
    }
  }
  if (g.is_even(f.values())) w = g.symmetrize(w);
  return ScalarField(f.grid(), std::move(w));
}

ConvexBody wulff_shape(const ScalarField& f) { return wulff_shape(f, nullptr); }

ConvexBody wulff_shape(const ScalarField& f, ModelPtr model) {
  require_positive(f, "wulff_shape");
  const auto& g = *f.grid();
  const double fmax = f.max();
  const bool resolved = g.spectral_tail(f.values()) <= kResolvedTail;
  const double cert = resolved ? convexity_certificate(f) : -1.0;
  auto smooth_body = [&] {
    if (!model) model = spectral_model(f.grid(), f.vector());
    return ConvexBody::from_model(f.grid(), model);
  };
  // A strictly convex resolved f is its own Wulff shape; the hull is only
  // needed to confirm this on S^1 where it is cheap.
  if (g.dimension() == 3 && resolved && cert > 1e-6 * fmax) return smooth_body();
  const ScalarField w = wulff_support(f);
  double gap = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) gap = std::max(gap, f[i] - w[i]);
  if (resolved && cert >= -kConvexityTol * fmax && gap <= 1e-12 * fmax) return smooth_body();
  return ConvexBody::discrete(w);
}

// ---------------------------------------------------------------------------
// Support / radial conversion

ScalarField radial_from_support(const ConvexBody& K) { return K.radial(); }

ScalarField support_from_radial(const ScalarField& rho) {
  require_positive(rho, "support_from_radial");
  const auto& g = *rho.grid();
  const bool even = g.is_even(rho.values());
  const ModelPtr m = g.spectral_tail(rho.values()) <= kInterpolableTail ? spectral_model(rho.grid(), rho.vector()) : nullptr;
  std::vector<double> h(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t a = g.antipode(i);
    if (even && a < i) {
      h[i] = h[a];
      continue;
    }
    double v = 0.0;
    if (m && support_newton(*m, g, i, rho, v) && v >= rho[i] * (1.0 - 1e-14)) {
      h[i] = std::max(v, rho[i]);
      continue;
    }
    const Vec3& u = g.node(i);
    v = rho[i];
    for (std::size_t j = 0; j < g.size(); ++j) v = std::max(v, rho[j] * g.node(j).dot(u));
    h[i] = v;
  }
  return ScalarField(rho.grid(), std::move(h));
}

// ---------------------------------------------------------------------------
// L_p combinations

ConvexBody lp_combination(const ConvexBody& K, const ConvexBody& L, double lambda, double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("lp_combination: p must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lp_combination: lambda must lie in [0, 1]");
  if (K.grid() != L.grid()) throw std::invalid_argument("lp_combination: bodies live on different grids");
  if (lambda == 0.0) return K;
  if (lambda == 1.0) return L;
  const auto& hk = K.support();
  const auto& hl = L.support();
  std::vector<double> v(hk.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (p == 0.0) ? std::exp((1.0 - lambda) * std::log(hk[i]) + lambda * std::log(hl[i]))
                      : std::pow((1.0 - lambda) * std::pow(hk[i], p) + lambda * std::pow(hl[i], p), 1.0 / p);
  }
  ScalarField f(K.grid(), std::move(v));
  ModelPtr model;
  if (K.smooth() && L.smooth()) model = power_mean_model({{1.0 - lambda, K.model()}, {lambda, L.model()}}, p);
  if (p >= 1.0) {
    if (model) return ConvexBody::from_model(K.grid(), model);
    return ConvexBody::discrete(f);
  }
  return wulff_shape(f, model);
}

// ---------------------------------------------------------------------------
// Random bodies

namespace {

ConvexBody random_band_limited(GridPtr grid, std::uint64_t seed, double amplitude, int band, bool even_only) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) throw std::invalid_argument("amplitude must lie in [0, 1)");
  const int n = grid->dimension();
  const int max_band = n == 2 ? grid->resolution() / 2 - 1 : grid->resolution();
  if (band < 0 || band > max_band) throw std::invalid_argument("band exceeds the grid's resolution");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> c(grid->spectral_size(), 0.0);
  const int step = even_only ? 2 : 1;
  for (int k = even_only ? 2 : 1; k <= band; k += step) {
    const double scale = 1.0 / (static_cast<double>(k) * k);
    if (n == 2) {
      c[2 * k - 1] = scale * normal(rng);
      c[2 * k] = scale * normal(rng);
    } else {
      for (int m = -k; m <= k; ++m) c[k * k + k + m] = scale * normal(rng);
    }
  }
  std::vector<double> field = grid->synthesize(c);
  if (even_only) field = grid->symmetrize(field);
  double sup = 0.0;
  for (double x : field) sup = std::max(sup, std::abs(x));
  if (sup > 0.0)
    for (double& x : field) x /= sup;
  double a = amplitude;
  for (int attempt = 0; attempt < 200 && a > 0.0; ++attempt, a *= 0.8) {
    std::vector<double> h(field.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = 1.0 + a * field[i];
    ScalarField hs(grid, std::move(h));
    if (convexity_certificate(hs) >= kConvexityTol * hs.max())
      return ConvexBody::from_model(grid, spectral_model(grid, hs.vector()));
  }
  return ball(grid, 1.0);
}

}  // namespace

ConvexBody random_symmetric_body(GridPtr grid, std::uint64_t seed, double amplitude, int band) {
  return random_band_limited(std::move(grid), seed, amplitude, band, true);
}

ConvexBody random_body(GridPtr grid, std::uint64_t seed, double amplitude, int band) {
  return random_band_limited(std::move(grid), seed, amplitude, band, false);
}

// ---------------------------------------------------------------------------
// Body files

void write_body(std::ostream& os, const ConvexBody& K) {
  os << "dmk-body n=" << K.dimension() << " res=" << K.grid()->resolution() << "\n";
  os << std::setprecision(17);
  for (double v : K.support().values()) os << v << "\n";
}

ConvexBody read_body(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("body file: missing header");
  std::istringstream hs(line);
  std::string magic, nf, rf;
  hs >> magic >> nf >> rf;
  if (magic != "dmk-body" || nf.rfind("n=", 0) != 0 || rf.rfind("res=", 0) != 0)
    throw std::runtime_error("body file: malformed header '" + line + "'");
  int n = 0, res = 0;
  try {
    n = std::stoi(nf.substr(2));
    res = std::stoi(rf.substr(4));
  } catch (const std::exception&) {
    throw std::runtime_error("body file: malformed header '" + line + "'");
  }
  GridPtr g = build_grid(n, res);
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(is >> v[i])) throw std::runtime_error("body file: expected " + std::to_string(v.size()) + " values");
  }
  return ConvexBody::from_support(ScalarField(g, std::move(v)));
}

void save_body(const std::string& path, const ConvexBody& K) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_body(os, K);
}

ConvexBody load_body(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_body(is);
}

}  // namespace dmk
