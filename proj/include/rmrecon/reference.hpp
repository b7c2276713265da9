#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "rmrecon/camera.hpp"
#include "rmrecon/envmap.hpp"
#include "rmrecon/gbuffer.hpp"
#include "rmrecon/mesh.hpp"
#include "rmrecon/reflectance_map.hpp"
#include "rmrecon/sdf_grid.hpp"
#include "rmrecon/weighted_map.hpp"

/// Single-threaded, unoptimized versions of the parallel kernels. They are
/// the comparison baseline for the tests and the benchmark.
namespace rmrecon::reference {

/// eval_field at every lattice point.
Lattice sample_lattice(const SdfGrid& grid, int factor);

/// Every pixel ray against every triangle.
GBuffer render_gbuffer(const TriMesh& mesh, const Camera& camera, int width, int height);

/// Direct double loop over map pixels and observations.
MappedFeatures weighted_map(const ImageF& features, std::span<const Eigen::Vector3d> normals,
                            std::span<const std::uint8_t> coverage, const ConfidenceMap& confidence,
                            const Eigen::Vector3d& omega_o, const MapKernelParams& params, int resolution);

/// Quadrature through eval_brdf for every sample, no precomputed tables.
ReflectanceMap rm_from_scene(const EnvMap& env, const Brdf& brdf, const Eigen::Vector3d& omega_o,
                             const Eigen::Matrix3d& view_rotation, int resolution, int n_samples = 1 << 16);

}  // namespace rmrecon::reference
