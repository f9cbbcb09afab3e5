#pragma once

// Continuous representations of support functions, evaluable off the grid.
//
// A model describes the degree-1 homogeneous extension H of a support
// function; value/jet take a unit vector and return H and its Euclidean jet
// there. Composite models (power means, dilates, exponential perturbations)
// evaluate their parts exactly and combine jets by the chain rule, so bodies
// built from them carry no interpolation error from the grid.

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "dmk/sphere.hpp"

namespace dmk {

class SupportModel {
 public:
  virtual ~SupportModel() = default;
  virtual double value(const Vec3& x) const = 0;
  virtual PointJet jet(const Vec3& x) const = 0;
  /// True when H(-x) = H(x) mathematically.
  virtual bool even() const = 0;
  /// Values at the nodes of `grid`; bitwise even whenever even() holds.
  virtual std::vector<double> node_values(const SphereGrid& grid) const;
};

using ModelPtr = std::shared_ptr<const SupportModel>;

/// Band-limited interpolant of node values (the values are reproduced exactly at the nodes).
ModelPtr spectral_model(GridPtr grid, std::vector<double> values);

/// The constant r on S^{n-1}.
ModelPtr ball_model(double r, int n);

/// sqrt(Σ a_i² x_i²); for n = 2 pass a[2] = 0.
ModelPtr ellipsoid_model(const Vec3& semiaxes);

/// (Σ w_i H_i^p)^{1/p} for p > 0 and Π H_i^{w_i} for p = 0, with Σ w_i = 1.
ModelPtr power_mean_model(std::vector<std::pair<double, ModelPtr>> terms, double p);

/// c·H.
ModelPtr scaled_model(ModelPtr base, double c);

/// H·exp(t·g(x/|x|)) with g the band-limited interpolant of `g_values`.
ModelPtr exp_perturbed_model(ModelPtr base, GridPtr grid, std::span<const double> g_values, double t);

}  // namespace dmk
