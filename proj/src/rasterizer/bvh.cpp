#include "rmrecon/bvh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <limits>
#include <numeric>

namespace rmrecon {
namespace {

constexpr int kLeafSize = 4;

bool ray_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Eigen::Vector3d& origin,
             const Eigen::Vector3d& inv_dir, double t_min, double t_max) {
  for (int a = 0; a < 3; ++a) {
    double t0 = (lo[a] - origin[a]) * inv_dir[a];
    double t1 = (hi[a] - origin[a]) * inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf means the ray runs inside the slab plane; keep it.
    if (t0 == t0) t_min = std::max(t_min, t0);
    if (t1 == t1) t_max = std::min(t_max, t1);
    if (t_min > t_max) return false;
  }
  return true;
}

double box_distance_squared(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Eigen::Vector3d& p) {
  const Eigen::Vector3d d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
  return d.squaredNorm();
}

}  // namespace

TriangleBvh::TriangleBvh(const TriMesh& mesh) {
  mesh.validate();
  tris_.reserve(mesh.faces.size());
  std::vector<Eigen::Vector3d> centroids;
  centroids.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    const Eigen::Vector3d& a = mesh.vertices[std::size_t(t[0])];
    const Eigen::Vector3d& b = mesh.vertices[std::size_t(t[1])];
    const Eigen::Vector3d& c = mesh.vertices[std::size_t(t[2])];
    tris_.push_back({a, b - a, c - a, int(f)});
    centroids.push_back((a + b + c) / 3.0);
  }
  if (!tris_.empty()) {
    nodes_.reserve(2 * tris_.size() / kLeafSize + 2);
    build(0, int(tris_.size()), centroids);
  }
}

int TriangleBvh::build(int begin, int end, std::vector<Eigen::Vector3d>& centroids) {
  const int id = int(nodes_.size());
  nodes_.emplace_back();
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  Eigen::Vector3d clo = lo, chi = hi;
  for (int i = begin; i < end; ++i) {
    const Tri& t = tris_[std::size_t(i)];
    const Eigen::Vector3d b = t.v0 + t.e1, c = t.v0 + t.e2;
    lo = lo.cwiseMin(t.v0).cwiseMin(b).cwiseMin(c);
    hi = hi.cwiseMax(t.v0).cwiseMax(b).cwiseMax(c);
    clo = clo.cwiseMin(centroids[std::size_t(i)]);
    chi = chi.cwiseMax(centroids[std::size_t(i)]);
  }
  nodes_[std::size_t(id)].lo = lo;
  nodes_[std::size_t(id)].hi = hi;
  if (end - begin <= kLeafSize) {
    nodes_[std::size_t(id)].first = begin;
    nodes_[std::size_t(id)].count = end - begin;
    return id;
  }
  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  // Sort a permutation so triangles and centroids move together.
  std::vector<int> order(std::size_t(end - begin));
  std::iota(order.begin(), order.end(), begin);
  std::nth_element(order.begin(), order.begin() + (mid - begin), order.end(), [&](int x, int y) {
    const double cx = centroids[std::size_t(x)][axis], cy = centroids[std::size_t(y)][axis];
    return cx < cy || (cx == cy && tris_[std::size_t(x)].face < tris_[std::size_t(y)].face);
  });
  std::vector<Tri> tmp_t;
  std::vector<Eigen::Vector3d> tmp_c;
  tmp_t.reserve(order.size());
  tmp_c.reserve(order.size());
  for (int i : order) {
    tmp_t.push_back(tris_[std::size_t(i)]);
    tmp_c.push_back(centroids[std::size_t(i)]);
  }
  std::copy(tmp_t.begin(), tmp_t.end(), tris_.begin() + begin);
  std::copy(tmp_c.begin(), tmp_c.end(), centroids.begin() + begin);

  build(begin, mid, centroids);
  const int right = build(mid, end, centroids);
  nodes_[std::size_t(id)].first = right;
  nodes_[std::size_t(id)].count = 0;
  return id;
}

std::optional<RayHit> TriangleBvh::intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                             double t_min, double t_max, bool cull_backfaces) const {
  if (tris_.empty()) return std::nullopt;
  const Eigen::Vector3d inv_dir = dir.cwiseInverse();
  RayHit best;
  double best_t = t_max;
  int stack[128];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[std::size_t(stack[--sp])];
    if (!ray_box(node.lo, node.hi, origin, inv_dir, t_min, best_t)) continue;
    if (node.count == 0) {
      const int self = int(&node - nodes_.data());
      stack[sp++] = node.first;
      stack[sp++] = self + 1;
      continue;
    }
    for (int i = node.first; i < node.first + node.count; ++i) {
      const Tri& tri = tris_[std::size_t(i)];
      if (cull_backfaces && tri.e1.cross(tri.e2).dot(dir) >= 0.0) continue;
      const Eigen::Vector3d pvec = dir.cross(tri.e2);
      const double det = tri.e1.dot(pvec);
      if (det == 0.0) continue;
      const double inv_det = 1.0 / det;
      const Eigen::Vector3d tvec = origin - tri.v0;
      const double u = tvec.dot(pvec) * inv_det;
      if (u < 0.0 || u > 1.0) continue;
      const Eigen::Vector3d qvec = tvec.cross(tri.e1);
      const double v = dir.dot(qvec) * inv_det;
      if (v < 0.0 || u + v > 1.0) continue;
      const double t = tri.e2.dot(qvec) * inv_det;
      if (!(t > t_min) || t > best_t) continue;
      if (t == best_t && best.face >= 0 && tri.face > best.face) continue;
      best = {tri.face, t, u, v};
      best_t = t;
    }
  }
  if (best.face < 0) return std::nullopt;
  return best;
}

ClosestPoint TriangleBvh::closest_point(const Eigen::Vector3d& p) const {
  ClosestPoint best;
  best.distance_squared = std::numeric_limits<double>::infinity();
  if (tris_.empty()) return best;
  int stack[128];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[std::size_t(stack[--sp])];
    if (box_distance_squared(node.lo, node.hi, p) > best.distance_squared) continue;
    if (node.count == 0) {
      const int self = int(&node - nodes_.data());
      const Node& l = nodes_[std::size_t(self + 1)];
      const Node& r = nodes_[std::size_t(node.first)];
      const double dl = box_distance_squared(l.lo, l.hi, p), dr = box_distance_squared(r.lo, r.hi, p);
      // Visit the nearer child first.
      if (dl < dr) {
        stack[sp++] = node.first;
        stack[sp++] = self + 1;
      } else {
        stack[sp++] = self + 1;
        stack[sp++] = node.first;
      }
      continue;
    }
    for (int i = node.first; i < node.first + node.count; ++i) {
      const Tri& tri = tris_[std::size_t(i)];
      const Eigen::Vector3d q = closest_point_on_triangle(p, tri.v0, tri.v0 + tri.e1, tri.v0 + tri.e2);
      const double d2 = (q - p).squaredNorm();
      if (d2 < best.distance_squared || (d2 == best.distance_squared && tri.face < best.face)) {
        best = {tri.face, q, d2};
      }
    }
  }
  return best;
}

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace rmrecon
