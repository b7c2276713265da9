#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/camera.hpp"
#include "rmrecon/image.hpp"
#include "rmrecon/mesh.hpp"

namespace rmrecon {

class TriangleBvh;

/// Per-pixel geometry of one view. Normals and view directions are in the
/// camera's view frame (see Camera::view_rotation); positions are world
/// points; depth is the camera-frame z of the hit.
struct GBuffer {
  int width = 0;
  int height = 0;
  Eigen::Matrix3d view_rotation = Eigen::Matrix3d::Identity();
  std::vector<std::uint8_t> coverage;
  std::vector<int> face;  // -1 when uncovered
  std::vector<Eigen::Vector3d> barycentric;
  std::vector<Eigen::Vector3d> normal;
  std::vector<Eigen::Vector3d> position;
  std::vector<double> depth;
  std::vector<Eigen::Vector3d> view_dir;

  GBuffer() = default;
  GBuffer(int w, int h);

  std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
  std::size_t covered_count() const;
  MaskImage coverage_mask() const;
  /// 3-channel float image of the view-frame normals (zero where uncovered).
  ImageF normal_image() const;
  ImageF depth_image() const;
  ImageF position_image() const;
};

/// Z-buffered rasterization at pixel centers by ray casting against a BVH.
/// Flat face normals; back faces are culled; exact depth ties resolve to the
/// lower face id.
GBuffer render_gbuffer(const TriMesh& mesh, const Camera& camera, int width, int height);
GBuffer render_gbuffer(const TriMesh& mesh, const TriangleBvh& bvh, const Camera& camera, int width, int height);

/// Chains per-pixel dL/dn (view frame) through each covered pixel's flat face
/// normal to the face's three vertices. Visibility is held fixed. Pixels
/// that are uncovered must carry a zero gradient.
std::vector<Eigen::Vector3d> backward_normals(const GBuffer& gbuffer, const TriMesh& mesh,
                                              std::span<const Eigen::Vector3d> dL_dn);

/// Gradient of the unit normal of triangle (v0, v1, v2) contracted with
/// dL/dn (world frame), accumulated into the three vertex gradients.
void accumulate_face_normal_gradient(const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
                                     const Eigen::Vector3d& v2, const Eigen::Vector3d& dL_dn,
                                     Eigen::Vector3d& g0, Eigen::Vector3d& g1, Eigen::Vector3d& g2);

}  // namespace rmrecon
