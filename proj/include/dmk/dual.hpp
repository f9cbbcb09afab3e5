#pragma once

// Dual quermassintegrals and L_p dual curvature densities.
//
// Densities follow the Monge-Ampère convention without a 1/n factor:
//   density_{p,q}(K) = h^{1-p} (h² + |∇h|²)^{(q-n)/2} det(∇²h + hI),
// so that ∫ density_{0,q}(K) = n·Ṽ_q(K).

#include <vector>

#include "dmk/body.hpp"

namespace dmk {

struct MeasureDensity {
  ScalarField values;
  double p = 0.0;
  double q = 0.0;
};

/// (1/n) ∫ ρ_K^q. Smooth bodies use the grid quadrature of ρ; discrete bodies
/// are integrated exactly facet by facet.
double dual_quermassintegral(const ConvexBody& K, double q);
double volume(const ConvexBody& K);

/// Node-wise density from a jet, with p, q, n as given.
std::vector<double> curvature_density(const JetField& j, double p, double q);

/// Density of C̃_{p,q}(K, ·). Throws std::invalid_argument for discrete bodies.
MeasureDensity dual_curvature_density(const ConvexBody& K, const ProblemParams& params);

/// Mass-1 normalization density_{0,q}(K) / (n·Ṽ_q(K)).
ScalarField normalized_dual_curvature(const ConvexBody& K, double q);

/// h det(∇²h + hI) / (h² + |∇h|²)^{n/2}.
ScalarField reverse_gauss_jacobian(const ConvexBody& K);

struct VariationalDerivative {
  double numeric = 0.0;
  double analytic = 0.0;
};

/// d/dt Ṽ_q([h_K e^{t g}]) at t = 0: central difference with `step` against
/// q·(1/n)∫ g density_{0,q}(K).
VariationalDerivative variational_derivative(const ConvexBody& K, const ScalarField& g, double q,
                                             double step = 1e-4);

/// |∫ h^p density_{p,q} − ∫ ρ^q| / ∫ ρ^q.
double change_of_variables_gap(const ConvexBody& K, const ProblemParams& params);

}  // namespace dmk
