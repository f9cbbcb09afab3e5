#pragma once

// Convex bodies containing the origin, represented by support values on a
// sphere grid.
//
// A body is either smooth (a resolved, certified support function with a
// continuous model for off-grid evaluation) or discrete (the polytope
// ∩_i {x : <x, u_i> <= h_i} over the grid nodes u_i, whose support values at
// the nodes are the stored h_i). Discrete bodies arise from Wulff shapes of
// non-convex data and from combinations of discrete bodies.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dmk/hull.hpp"
#include "dmk/sphere.hpp"
#include "dmk/support_model.hpp"

namespace dmk {

/// Exponents of the Monge-Ampère equation on S^{n-1}.
struct ProblemParams {
  int n = 2;
  double p = 0.5;
  double q = 1.8;

  /// q ∈ (0, n], p ≥ 0 finite, n ∈ {2, 3}. Throws std::invalid_argument.
  static ProblemParams make(int n, double p, double q);
  /// Additionally p ∈ (0, q) and q ∈ (1, n].
  void validate_for_solver() const;
};

/// Spectra above this relative tail count as unresolved (non-smooth).
inline constexpr double kResolvedTail = 1e-8;
/// Tail below which a radial field is refined on its spectral interpolant.
inline constexpr double kInterpolableTail = 1e-6;
/// Relative convexity tolerance: a certified body has margin ≥ -kConvexityTol·max h.
inline constexpr double kConvexityTol = 1e-8;

class ConvexBody {
 public:
  /// Smooth body whose support is given by `model`; node values are sampled
  /// from it. Throws std::invalid_argument when not positive or not convex.
  static ConvexBody from_model(GridPtr grid, ModelPtr model);
  /// Smooth body when `h` is resolved, discrete body otherwise. Throws when
  /// `h` is not positive or not (discretely) convex.
  static ConvexBody from_support(const ScalarField& h);
  /// Discrete body of support data that is already discretely convex.
  static ConvexBody discrete(const ScalarField& h);

  const GridPtr& grid() const { return support_.grid(); }
  int dimension() const { return support_.grid()->dimension(); }
  const ScalarField& support() const { return support_; }
  /// Radial function at the nodes (computed on first use).
  const ScalarField& radial() const;
  /// Radial function of a smooth body on the coarsest dyadic refinement of its
  /// grid where it is spectrally resolved (capped); radial() otherwise.
  const ScalarField& resolved_radial() const;
  /// Min over nodes of the smallest eigenvalue of ∇²h + hI; 0 for discrete bodies.
  double convexity_margin() const { return margin_; }
  bool symmetric() const { return symmetric_; }
  bool smooth() const { return model_ != nullptr; }
  const ModelPtr& model() const { return model_; }

  /// Dilate t·K.
  ConvexBody scaled(double t) const;

  /// Hull of the dual points u_i / h_i (computed on first use). For n = 2
  /// only the counter-clockwise vertex list is filled.
  struct DualHull {
    std::vector<int> vertices_2d;
    Hull3 hull_3d;
  };
  const DualHull& dual_hull() const;

 private:
  ConvexBody(ScalarField support, ModelPtr model, double margin);

  struct Cache;
  ScalarField support_;
  ModelPtr model_;
  double margin_ = 0.0;
  bool symmetric_ = false;
  std::shared_ptr<Cache> cache_;
};

/// Min over nodes of the smallest eigenvalue of ∇²h + hI (spectral jet).
double convexity_certificate(const ScalarField& h);

ConvexBody ball(GridPtr grid, double r);
/// Semiaxes a_1..a_n along the coordinate axes.
ConvexBody ellipsoid(GridPtr grid, const std::vector<double>& semiaxes);

/// Node values of the support function of [f] = ∩ {x : <x,u> ≤ f(u)}.
ScalarField wulff_support(const ScalarField& f);
/// The Wulff shape [f]. Smooth when f is already a resolved support function.
ConvexBody wulff_shape(const ScalarField& f);
/// As above; `model` describes f off the grid and is kept when [f] = f.
ConvexBody wulff_shape(const ScalarField& f, ModelPtr model);

ScalarField radial_from_support(const ConvexBody& K);
/// h(u) = max_v ρ(v)<v, u>. Resolved ρ is maximized continuously on its
/// spectral interpolant; otherwise the maximum runs over the nodes.
ScalarField support_from_radial(const ScalarField& rho);

/// (1-λ)K +_p λL. p ≥ 1: p-mean of supports; 0 ≤ p < 1: its Wulff shape.
ConvexBody lp_combination(const ConvexBody& K, const ConvexBody& L, double lambda, double p);

/// 1 + amplitude·g with g an even band-limited field of sup-norm 1 whose
/// degree-k coefficients decay like k^{-2}; the amplitude shrinks until the
/// body is certified convex. Deterministic per seed.
ConvexBody random_symmetric_body(GridPtr grid, std::uint64_t seed, double amplitude, int band);
/// Same construction with all degrees 1..band (not symmetric).
ConvexBody random_body(GridPtr grid, std::uint64_t seed, double amplitude, int band);

/// Body file: header `dmk-body n=<n> res=<res>`, then one support value per
/// node in grid order with 17 significant digits.
void write_body(std::ostream& os, const ConvexBody& K);
ConvexBody read_body(std::istream& is);
void save_body(const std::string& path, const ConvexBody& K);
ConvexBody load_body(const std::string& path);

}  // namespace dmk
