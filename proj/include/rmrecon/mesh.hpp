#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/scene.hpp"

namespace rmrecon {

/// Indexed triangle mesh; faces are counter-clockwise seen from outside.
struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;

  bool empty() const { return faces.empty(); }
  Eigen::Vector3d face_normal(std::size_t f) const;  // unit, zero for degenerate faces
  double face_area(std::size_t f) const;
  double surface_area() const;
  AxisBox bounds() const;

  /// Throws Consistency if a face references a missing vertex.
  void validate() const;
};

TriMesh load_obj(const std::filesystem::path& path);
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

/// Geodesic sphere by subdividing an icosahedron.
TriMesh make_icosphere(const Eigen::Vector3d& center, double radius, int subdivisions);

/// Superquadric surface |x/a|^(2/e2) + |y/b|^(2/e2))^(e2/e1) + |z/c|^(2/e1) = 1.
TriMesh make_superquadric(double e1, double e2, const Eigen::Vector3d& scale, int segments);

/// Counts edges by how many faces use them; a closed 2-manifold mesh has
/// every undirected edge used exactly twice, once per direction.
struct EdgeAudit {
  std::size_t edges = 0;
  std::size_t boundary_edges = 0;      // used once
  std::size_t nonmanifold_edges = 0;   // used more than twice
  std::size_t inconsistent_edges = 0;  // two uses with the same direction
  bool closed() const { return boundary_edges == 0 && nonmanifold_edges == 0 && inconsistent_edges == 0; }
};
EdgeAudit audit_edges(const TriMesh& mesh);

}  // namespace rmrecon
