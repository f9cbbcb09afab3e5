#include "dmk/hull.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace dmk {

std::vector<int> hull_2d(const std::vector<Eigen::Vector2d>& pts) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return pts[a].x() < pts[b].x() || (pts[a].x() == pts[b].x() && pts[a].y() < pts[b].y());
  });
  auto cross = [&](int o, int a, int b) {
    const Eigen::Vector2d u = pts[a] - pts[o], v = pts[b] - pts[o];
    return u.x() * v.y() - u.y() * v.x();
  };
  std::vector<int> h(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], idx[i]) <= 0.0) --k;
    h[k++] = idx[i];
  }
  for (int i = n - 2, t = k + 1; i >= 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], idx[i]) <= 0.0) --k;
    h[k++] = idx[i];
  }
  h.resize(std::max(k - 1, 0));
  return h;
}

namespace {

struct Builder {
  const std::vector<Eigen::Vector3d>& p;
  double eps;
  std::vector<HullFace> faces;
  std::vector<char> alive;

  int add_face(int a, int b, int c) {
    HullFace f;
    f.v = {a, b, c};
    f.neighbor = {-1, -1, -1};
    const Eigen::Vector3d n = (p[b] - p[a]).cross(p[c] - p[a]);
    const double len = n.norm();
    f.normal = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
    f.offset = f.normal.dot(p[a]);
    faces.push_back(f);
    alive.push_back(1);
    return static_cast<int>(faces.size()) - 1;
  }

  double dist(int f, int i) const { return faces[f].normal.dot(p[i]) - faces[f].offset; }

  int find_visible(int hint, int i) const {
    int cur = hint;
    if (cur >= 0 && alive[cur]) {
      double d = dist(cur, i);
      for (int step = 0; step < 256; ++step) {
        if (d > eps) return cur;
        int best = -1;
        double bd = d;
        for (int nb : faces[cur].neighbor) {
          const double dn = dist(nb, i);
          if (dn > bd) bd = dn, best = nb;
        }
        if (best < 0) break;
        cur = best;
        d = bd;
      }
    }
    for (int f = 0; f < static_cast<int>(faces.size()); ++f)
      if (alive[f] && dist(f, i) > eps) return f;
    return -1;
  }
};

}  // namespace

Hull3 hull_3d(const std::vector<Eigen::Vector3d>& pts, double rel_eps) {
  const int n = static_cast<int>(pts.size());
  if (n < 4) throw std::runtime_error("hull_3d: need at least 4 points");
  double scale = 0.0;
  for (const auto& q : pts) scale = std::max(scale, q.norm());
  Builder B{pts, rel_eps * scale, {}, {}};

  // Initial simplex from extreme points.
  int i0 = 0;
  for (int i = 1; i < n; ++i)
    if (pts[i].x() < pts[i0].x()) i0 = i;
  int i1 = -1;
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).squaredNorm();
    if (d > best) best = d, i1 = i;
  }
  int i2 = -1;
  best = -1.0;
  const Eigen::Vector3d dir = (pts[i1] - pts[i0]).normalized();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d r = pts[i] - pts[i0];
    const double d = (r - r.dot(dir) * dir).squaredNorm();
    if (d > best) best = d, i2 = i;
  }
  const Eigen::Vector3d nrm = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = -1.0;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(nrm.dot(pts[i] - pts[i0]));
    if (d > best) best = d, i3 = i;
  }
  if (best <= B.eps) throw std::runtime_error("hull_3d: points are coplanar");
  if (nrm.dot(pts[i3] - pts[i0]) > 0.0) std::swap(i1, i2);
  // Faces of the tetrahedron (i0, i1, i2) with i3 behind it.
  const int f0 = B.add_face(i0, i1, i2);
  const int f1 = B.add_face(i0, i3, i1);
  const int f2 = B.add_face(i1, i3, i2);
  const int f3 = B.add_face(i2, i3, i0);
  {
    // Neighbors by matching reversed edges.
    const int fs[4] = {f0, f1, f2, f3};
    for (int a : fs)
      for (int k = 0; k < 3; ++k) {
        const int u = B.faces[a].v[k], w = B.faces[a].v[(k + 1) % 3];
        for (int b : fs) {
          if (b == a) continue;
          for (int m = 0; m < 3; ++m)
            if (B.faces[b].v[m] == w && B.faces[b].v[(m + 1) % 3] == u) B.faces[a].neighbor[k] = b;
        }
      }
  }

  std::vector<char> used(n, 0);
  used[i0] = used[i1] = used[i2] = used[i3] = 1;
  int hint = f0;
  std::vector<int> visible, stack;
  std::vector<char> mark;
  std::vector<std::pair<int, int>> horizon_edges;  // (face, edge index)
  std::unordered_map<int, int> start_at, end_at;

  for (int i = 0; i < n; ++i) {
    if (used[i]) continue;
    const int seed = B.find_visible(hint, i);
    if (seed < 0) continue;
    mark.resize(B.faces.size(), 0);
    visible.clear();
    stack.assign(1, seed);
    mark[seed] = 1;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      visible.push_back(f);
      for (int nb : B.faces[f].neighbor)
        if (!mark[nb] && B.dist(nb, i) > B.eps) {
          mark[nb] = 1;
          stack.push_back(nb);
        }
    }
    horizon_edges.clear();
    for (int f : visible)
      for (int k = 0; k < 3; ++k)
        if (!mark[B.faces[f].neighbor[k]]) horizon_edges.emplace_back(f, k);
    start_at.clear();
    end_at.clear();
    std::vector<int> created;
    created.reserve(horizon_edges.size());
    for (auto [f, k] : horizon_edges) {
      const int a = B.faces[f].v[k], b = B.faces[f].v[(k + 1) % 3];
      const int outside = B.faces[f].neighbor[k];
      const int nf = B.add_face(a, b, i);
      B.faces[nf].neighbor[0] = outside;
      for (int m = 0; m < 3; ++m)
        if (B.faces[outside].neighbor[m] == f) B.faces[outside].neighbor[m] = nf;
      start_at[a] = nf;
      end_at[b] = nf;
      created.push_back(nf);
    }
    for (int nf : created) {
      const int a = B.faces[nf].v[0], b = B.faces[nf].v[1];
      B.faces[nf].neighbor[1] = start_at.at(b);
      B.faces[nf].neighbor[2] = end_at.at(a);
    }
    for (int f : visible) {
      B.alive[f] = 0;
      mark[f] = 0;
    }
    used[i] = 1;
    hint = created.front();
  }

  Hull3 out;
  std::vector<int> remap(B.faces.size(), -1);
  for (std::size_t f = 0; f < B.faces.size(); ++f)
    if (B.alive[f]) {
      remap[f] = static_cast<int>(out.faces.size());
      out.faces.push_back(B.faces[f]);
    }
  out.is_vertex.assign(n, false);
  for (auto& f : out.faces) {
    for (int k = 0; k < 3; ++k) {
      f.neighbor[k] = remap[f.neighbor[k]];
      out.is_vertex[f.v[k]] = true;
    }
  }
  return out;
}

}  // namespace dmk
