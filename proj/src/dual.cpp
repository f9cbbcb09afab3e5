#include "dmk/dual.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace dmk {

namespace {

void require_q(double q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("q must be positive");
}

// Gauss-Legendre rule on [0, 1].
struct UnitRule {
  std::vector<double> x, w;
  explicit UnitRule(int n) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) {
          double q0 = 1.0, q1 = z;
          for (int k = 2; k <= n; ++k) {
            const double q2 = ((2.0 * k - 1.0) * z * q1 - (k - 1.0) * q0) / k;
            q0 = q1;
            q1 = q2;
          }
          const double d = n * (z * q1 - q0) / (z * z - 1.0);
          w[i] = 1.0 / ((1.0 - z * z) * d * d);
          break;
        }
      }
      x[i] = 0.5 * (1.0 - z);
    }
  }
};

const UnitRule& rule() {
  static const UnitRule r(16);
  return r;
}

// ∫ over the segment [a, b] of |y|^{q-2} ds, split into pieces no longer than `h`.
double segment_integral(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double h, double q) {
  const double len = (b - a).norm();
  if (len == 0.0) return 0.0;
  const int pieces = std::max(1, static_cast<int>(std::ceil(2.0 * len / h)));
  const auto& R = rule();
  double s = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const Eigen::Vector2d p0 = a + (b - a) * (static_cast<double>(k) / pieces);
    const Eigen::Vector2d d = (b - a) / pieces;
    for (std::size_t i = 0; i < R.x.size(); ++i) {
      const double r = (p0 + R.x[i] * d).norm();
      s += R.w[i] * std::exp((q - 2.0) * std::log(r));
    }
  }
  return s * len / pieces;
}

// Signed ∫ over the triangle (a, b, c) of |y|^{q-3} dA, oriented by `normal`.
double triangle_integral(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& normal, double h, double q,
                         int depth = 0) {
  const double diam = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
  if (diam == 0.0) return 0.0;
  if (diam > 0.5 * h && depth < 8) {
    const Vec3 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    return triangle_integral(a, ab, ca, normal, h, q, depth + 1) + triangle_integral(ab, b, bc, normal, h, q, depth + 1) +
           triangle_integral(ca, bc, c, normal, h, q, depth + 1) + triangle_integral(ab, bc, ca, normal, h, q, depth + 1);
  }
  const double area2 = normal.dot((b - a).cross(c - a));  // signed twice area
  if (area2 == 0.0) return 0.0;
  // Collapsed tensor Gauss rule: (s, t) -> a + s(b - a) + s t (c - b), Jacobian s.
  const auto& R = rule();
  double sum = 0.0;
  for (std::size_t i = 0; i < R.x.size(); ++i) {
    const double s = R.x[i];
    for (std::size_t j = 0; j < R.x.size(); ++j) {
      const double t = R.x[j];
      const Vec3 y = a + s * (b - a) + s * t * (c - b);
      sum += R.w[i] * R.w[j] * s * std::exp((q - 3.0) * std::log(y.norm()));
    }
  }
  return sum * area2;
}

// ∫ ρ^q over S^1 for the polygon ∩ {<x, u_i> ≤ h_i}.
double polygon_radial_integral(const ConvexBody& K, double q) {
  const auto& g = *K.grid();
  const auto& hv = K.dual_hull().vertices_2d;
  const std::size_t m = hv.size();
  std::vector<Eigen::Vector2d> corner(m);  // primal vertex between facets hv[k] and hv[k+1]
  for (std::size_t k = 0; k < m; ++k) {
    const int i = hv[k], j = hv[(k + 1) % m];
    Eigen::Matrix2d A;
    A.row(0) = g.node(i).head<2>().transpose();
    A.row(1) = g.node(j).head<2>().transpose();
    corner[k] = A.partialPivLu().solve(Eigen::Vector2d(K.support()[i], K.support()[j]));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double h = K.support()[hv[k]];
    // ρ^q dθ = h |y|^{q-2} ds along the facet.
    total += h * segment_integral(corner[(k + m - 1) % m], corner[k], h, q);
  }
  return total;
}

// ∫ ρ^q over S^2 for the polytope ∩ {<x, u_i> ≤ h_i}: each facet is fanned
// from the foot point h_i u_i; ρ^q du = h_i |y|^{q-3} dA on the facet.
double polytope_radial_integral(const ConvexBody& K, double q) {
  const auto& g = *K.grid();
  const auto& hull = K.dual_hull().hull_3d;
  std::vector<Vec3> corner(hull.faces.size());
  for (std::size_t f = 0; f < hull.faces.size(); ++f) corner[f] = hull.faces[f].normal / hull.faces[f].offset;
  double total = 0.0;
  for (std::size_t f = 0; f < hull.faces.size(); ++f) {
    const HullFace& F = hull.faces[f];
    for (int k = 0; k < 3; ++k) {
      const int a = F.v[k];
      const int G = F.neighbor[k];
      const double h = K.support()[a];
      const Vec3 foot = h * g.node(a);
      total += h * triangle_integral(foot, corner[f], corner[G], g.node(a), h, q);
    }
  }
  return std::abs(total);
}

}  // namespace

double dual_quermassintegral(const ConvexBody& K, double q) {
  require_q(q);
  const int n = K.dimension();
  if (!K.smooth()) {
    const double I = n == 2 ? polygon_radial_integral(K, q) : polytope_radial_integral(K, q);
    return I / n;
  }
  const auto& rho = K.resolved_radial();
  const auto& w = rho.grid()->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += w[i] * std::exp(q * std::log(rho[i]));
  return s / n;
}

double volume(const ConvexBody& K) { return dual_quermassintegral(K, K.dimension()); }

std::vector<double> curvature_density(const JetField& j, double p, double q) {
  const int n = j.grid->dimension();
  std::vector<double> d(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double h = j.value[i];
    const double r2 = h * h + j.gradient_norm2(i);
    d[i] = std::exp((1.0 - p) * std::log(h) + 0.5 * (q - n) * std::log(r2)) * j.shifted_hessian_det(i);
  }
  return d;
}

MeasureDensity dual_curvature_density(const ConvexBody& K, const ProblemParams& params) {
  if (!K.smooth()) throw std::invalid_argument("dual_curvature_density: body has no smooth support function");
  if (params.n != K.dimension()) throw std::invalid_argument("dual_curvature_density: dimension mismatch");
  const JetField j = jet(K.support());
  return MeasureDensity{ScalarField(K.grid(), curvature_density(j, params.p, params.q)), params.p, params.q};
}

ScalarField normalized_dual_curvature(const ConvexBody& K, double q) {
  const int n = K.dimension();
  const MeasureDensity d = dual_curvature_density(K, ProblemParams::make(n, 0.0, q));
  const double scale = 1.0 / (n * dual_quermassintegral(K, q));
  return d.values.map([scale](double v) { return v * scale; });
}

ScalarField reverse_gauss_jacobian(const ConvexBody& K) {
  if (!K.smooth()) throw std::invalid_argument("reverse_gauss_jacobian: body has no smooth support function");
  const int n = K.dimension();
  const JetField j = jet(K.support());
  std::vector<double> v(j.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double h = j.value[i];
    const double r2 = h * h + j.gradient_norm2(i);
    v[i] = h * j.shifted_hessian_det(i) / std::pow(r2, 0.5 * n);
  }
  return ScalarField(K.grid(), std::move(v));
}

VariationalDerivative variational_derivative(const ConvexBody& K, const ScalarField& g, double q, double step) {
  require_q(q);
  if (g.grid() != K.grid()) throw std::invalid_argument("variational_derivative: perturbation on another grid");
  auto perturbed = [&](double t) {
    std::vector<double> v(K.support().vector());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::exp(t * g[i]);
    ModelPtr model = K.smooth() ? exp_perturbed_model(K.model(), K.grid(), g.values(), t) : nullptr;
    return dual_quermassintegral(wulff_shape(ScalarField(K.grid(), std::move(v)), model), q);
  };
  VariationalDerivative out;
  out.numeric = (perturbed(step) - perturbed(-step)) / (2.0 * step);
  const MeasureDensity d = dual_curvature_density(K, ProblemParams::make(K.dimension(), 0.0, q));
  std::vector<double> gd(g.size());
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] = g[i] * d.values[i];
  out.analytic = q * integrate(*K.grid(), gd) / K.dimension();
  return out;
}

double change_of_variables_gap(const ConvexBody& K, const ProblemParams& params) {
  const MeasureDensity d = dual_curvature_density(K, params);
  std::vector<double> lhs(d.values.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] = std::pow(K.support()[i], params.p) * d.values[i];
  const double a = integrate(*K.grid(), lhs);
  const double b = K.dimension() * dual_quermassintegral(K, params.q);
  return std::abs(a - b) / std::abs(b);
}

}  // namespace dmk
