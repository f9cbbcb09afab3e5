#pragma once

// Discretized unit spheres S^1 and S^2 with spectral quadrature and covariant
// differential operators.
//
// S^1: N equally spaced angles, trapezoid weights, Fourier differentiation.
// S^2: Gauss-Legendre latitudes x uniform longitudes for band limit L
//      (L+1 latitudes, 2L+2 longitudes), real orthonormal spherical harmonics.
//
// Every point is stored as a 3-vector; on S^1 the z component is zero.

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dmk {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

class SphereGrid;
using GridPtr = std::shared_ptr<const SphereGrid>;

/// Values of a real function at the nodes of a grid.
class ScalarField {
 public:
  ScalarField(GridPtr grid, std::vector<double> values);

  static ScalarField constant(GridPtr grid, double c);
  static ScalarField sample(GridPtr grid, const std::function<double(const Vec3&)>& f);

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }

  double max() const;
  double min() const;
  double sup_norm() const;

  /// Node-wise image under `op`.
  ScalarField map(const std::function<double(double)>& op) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Spherical gradient and covariant Hessian at every node, expressed in the
/// node's orthonormal tangent frame. Only the leading (n-1) components are
/// meaningful; the rest are zero.
struct JetField {
  GridPtr grid;
  std::vector<double> value;
  std::vector<Vec2> gradient;
  std::vector<Mat2> hessian;

  std::size_t size() const { return value.size(); }
  /// ∇²h + h I at node i.
  Mat2 shifted_hessian(std::size_t i) const;
  double shifted_hessian_det(std::size_t i) const;
  double shifted_hessian_min_eig(std::size_t i) const;
  double gradient_norm2(std::size_t i) const;
};

/// Jet of the degree-1 homogeneous extension H(y) = |y| h(y/|y|) at a unit
/// vector x: value h(x), Euclidean gradient ∇H(x) = h x + ∇_S h, and
/// Euclidean Hessian D²H(x) (which annihilates x and restricts to ∇²h + hI
/// on the tangent plane).
struct PointJet {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();
};

class SphereGrid : public std::enable_shared_from_this<SphereGrid> {
 public:
  /// Nodes for S^{n-1}. For n = 2 `resolution` is the (even) node count, for
  /// n = 3 it is the band limit L. Throws std::invalid_argument.
  static GridPtr build(int n, int resolution);

  int dimension() const { return n_; }
  int resolution() const { return resolution_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Vec3>& nodes() const { return nodes_; }
  const Vec3& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t antipode(std::size_t i) const { return antipode_[i]; }
  /// k-th tangent vector of the frame at node i (k < n-1).
  const Vec3& tangent(std::size_t i, int k) const { return frames_[i][k]; }
  /// Surface measure of S^{n-1}.
  double measure() const;

  // S^2 layout: latitude index j, longitude index k, node = j * nlon + k.
  int latitudes() const { return nlat_; }
  int longitudes() const { return nlon_; }

  // Spectral representation. On S^1 the layout is [a0, a1, b1, a2, b2, ...]
  // for h = a0 + Σ a_k cos kθ + b_k sin kθ, up to k = N/2. On S^2 index
  // l*l + l + m holds the coefficient of the real harmonic Y_lm, m ∈ [-l, l]
  // (m < 0 are the sine harmonics).
  std::size_t spectral_size() const;
  int degree_of(std::size_t index) const;
  /// Laplace-Beltrami eigenvalue -k(k+n-2) at degree k.
  double laplacian_eigenvalue(int k) const;
  std::vector<double> analyze(std::span<const double> values) const;
  std::vector<double> synthesize(std::span<const double> coeffs) const;

  JetField jet(std::span<const double> values) const;
  std::vector<double> laplacian(std::span<const double> values) const;

  /// Evaluation of the band-limited interpolant at an arbitrary unit vector.
  double point_value(std::span<const double> coeffs, const Vec3& x) const;
  /// Euclidean jet of the interpolant. Near the poles of S^2 the jet falls
  /// back to finite differences of point values.
  PointJet point_jet(std::span<const double> coeffs, const Vec3& x) const;

  /// Euclidean jet at node i from the frame expression.
  PointJet node_point_jet(const JetField& jet, std::size_t i) const;

  /// Real harmonic of degree k; `index` ∈ [0, 2k] selects the member of the
  /// degree-k eigenspace (0 = cos/zonal). Returns node values.
  std::vector<double> harmonic(int k, int index) const;

  /// sqrt(energy in the top quarter of the spectrum / total energy), plus the
  /// relative part of the values the spectrum does not reproduce.
  double spectral_tail(std::span<const double> values) const;

  /// (v + v∘antipode)/2, bitwise even.
  std::vector<double> symmetrize(std::span<const double> values) const;
  bool is_even(std::span<const double> values) const;

  /// Orthonormal tangent frame at an arbitrary unit vector (not at the poles of S^2).
  void frame_at(const Vec3& x, Vec3& t1, Vec3& t2) const;

  SphereGrid(const SphereGrid&) = delete;
  SphereGrid& operator=(const SphereGrid&) = delete;

 private:
  SphereGrid() = default;
  static GridPtr build_uncached(int n, int resolution);
  void build_circle(int n_nodes);
  void build_sphere(int band);

  PointJet point_jet_circle(std::span<const double> coeffs, const Vec3& x) const;
  PointJet point_jet_sphere(std::span<const double> coeffs, const Vec3& x) const;
  PointJet point_jet_fd(std::span<const double> coeffs, const Vec3& x) const;

  int n_ = 0;
  int resolution_ = 0;
  std::vector<Vec3> nodes_;
  std::vector<double> weights_;
  std::vector<std::size_t> antipode_;
  std::vector<std::array<Vec3, 2>> frames_;

  // S^2 tables.
  int nlat_ = 0;
  int nlon_ = 0;
  std::vector<double> lat_cos_;
  std::vector<double> lat_sin_;
  std::vector<double> lat_weight_;
  Eigen::MatrixXd lon_basis_;  // nlon x (2L+1): cos 0φ, cos 1φ, sin 1φ, ...
  // Per order m: nlat x (L+1-m) tables of the normalized associated Legendre
  // functions (including the sqrt(2) for m > 0) and their θ-derivatives.
  std::vector<Eigen::MatrixXd> legendre_;
  std::vector<Eigen::MatrixXd> legendre_d_;
  std::vector<Eigen::MatrixXd> legendre_dd_;
};

// Free-function forms of the grid operations.
GridPtr build_grid(int n, int resolution);
JetField jet(const ScalarField& h);
double integrate(const ScalarField& f);
double integrate(const SphereGrid& grid, std::span<const double> f);
ScalarField laplace_beltrami(const ScalarField& f);

/// Normalized associated Legendre functions p_lm(cos θ) (orthonormal complex
/// normalization, no Condon-Shortley phase) and first/second θ-derivatives,
/// stored at index l*(l+1)/2 + m. Requires sin θ > 0 for the derivatives.
void legendre_jet(int band, double cos_theta, double sin_theta, std::vector<double>& p,
                  std::vector<double>& dp, std::vector<double>& ddp);

}  // namespace dmk
