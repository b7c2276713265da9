#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/camera.hpp"
#include "rmrecon/mesh.hpp"
#include "rmrecon/reflectance_map.hpp"

namespace rmrecon {

class TriangleBvh;

struct SurfaceSamples {
  std::vector<Eigen::Vector3d> points;
  std::vector<int> faces;
};

/// Area-uniform random points on the mesh, deterministic for a given seed.
SurfaceSamples sample_surface(const TriMesh& mesh, std::size_t count, std::uint64_t seed);

/// A sample is visible when some camera images it inside the frame, sees its
/// face from the front, and the first hit along the camera ray is that point.
std::vector<std::uint8_t> visible_samples(const TriMesh& mesh, const TriangleBvh& bvh, const SurfaceSamples& samples,
                                          std::span<const Camera> cameras);

struct GeometryMetrics {
  double rms1 = 0.0;  // recovered -> truth, percent of the truth bounding-box diagonal
  double rms2 = 0.0;  // truth -> recovered
  std::size_t recon_samples = 0;  // visible samples used
  std::size_t truth_samples = 0;
  double diagonal = 0.0;
};

/// Visibility-filtered two-sided RMS distance. Throws EmptyObservation when
/// either side has no visible sample.
GeometryMetrics eval_geometry(const TriMesh& recon, const TriMesh& truth, std::span<const Camera> cameras,
                              std::size_t samples = 100000, std::uint64_t seed = 0);

/// Mean over valid-disc pixels and channels of |log R_est - log R_true|.
double eval_rm(const ReflectanceMap& estimate, const ReflectanceMap& truth);

}  // namespace rmrecon
