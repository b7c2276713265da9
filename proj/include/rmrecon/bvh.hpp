#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/mesh.hpp"

namespace rmrecon {

struct RayHit {
  int face = -1;
  double t = 0.0;
  double b1 = 0.0;  // barycentric weight of vertex 1
  double b2 = 0.0;  // barycentric weight of vertex 2
};

struct ClosestPoint {
  int face = -1;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  double distance_squared = 0.0;
};

/// Bounding volume hierarchy over the triangles of a mesh (median split on
/// the longest centroid axis). Holds its own copy of the triangle corners.
class TriangleBvh {
 public:
  explicit TriangleBvh(const TriMesh& mesh);

  bool empty() const { return tris_.empty(); }

  /// Nearest hit with t in (t_min, t_max). Exact-t ties go to the lower face
  /// id, so the result does not depend on traversal order. With
  /// cull_backfaces, triangles whose outward normal faces along the ray are
  /// ignored.
  std::optional<RayHit> intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double t_min,
                                  double t_max, bool cull_backfaces) const;

  /// Nearest surface point; requires a nonempty mesh.
  ClosestPoint closest_point(const Eigen::Vector3d& p) const;

 private:
  struct Tri {
    Eigen::Vector3d v0, e1, e2;
    int face;
  };
  struct Node {
    Eigen::Vector3d lo, hi;
    int first = 0;  // leaf: first triangle; inner: index of the right child
    int count = 0;  // leaf: triangle count; inner: 0 (left child follows the node)
  };

  int build(int begin, int end, std::vector<Eigen::Vector3d>& centroids);

  std::vector<Tri> tris_;
  std::vector<Node> nodes_;
};

/// Closest point on triangle (a, b, c) to p.
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

}  // namespace rmrecon
