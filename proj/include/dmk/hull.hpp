#pragma once

// Convex hulls of point clouds that contain the origin in their interior.
// Used for the polar construction of Wulff shapes and for integrating over
// the boundary of the resulting polytopes.

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace dmk {

/// Counter-clockwise indices of the strict hull vertices of planar points.
std::vector<int> hull_2d(const std::vector<Eigen::Vector2d>& pts);

struct HullFace {
  std::array<int, 3> v;         // counter-clockwise seen from outside
  std::array<int, 3> neighbor;  // face across edge v[k] -> v[k+1]
  Eigen::Vector3d normal;       // unit outward normal
  double offset = 0.0;          // plane is {y : normal . y = offset}
};

struct Hull3 {
  std::vector<HullFace> faces;
  std::vector<bool> is_vertex;  // per input point
};

/// Triangulated hull of points in R^3. Points within `rel_eps * max|p|` of a
/// face plane count as inside. Throws std::runtime_error on degenerate input.
Hull3 hull_3d(const std::vector<Eigen::Vector3d>& pts, double rel_eps = 1e-13);

}  // namespace dmk
