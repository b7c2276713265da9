#include "rmrecon/visual_hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmrecon/distance_transform.hpp"
#include "rmrecon/error.hpp"
#include "rmrecon/png_mask.hpp"

namespace rmrecon {

SdfGrid make_grid_layout(const AxisBox& volume, int grid_res) {
  const Eigen::Vector3d extent = volume.extent();
  if (!(extent.minCoeff() > 0.0)) throw Error(ErrorKind::InvalidArgument, "volume must have positive extent");
  if (grid_res < 5) throw Error(ErrorKind::InvalidArgument, "grid_res must be >= 5");
  const double h = extent.maxCoeff() / double(grid_res - 3);
  std::array<int, 3> dims{};
  Eigen::Vector3d origin;
  for (int a = 0; a < 3; ++a) {
    dims[a] = std::max(4, int(std::ceil(extent[a] / h - 1e-9)) + 3);
    origin[a] = volume.center()[a] - 0.5 * h * double(dims[a] - 1);
  }
  return SdfGrid(origin, h, dims, 0.0);
}

std::vector<std::uint8_t> hull_occupancy(const SdfGrid& layout, std::span<const SilhouetteView> views,
                                         const HullOptions& options) {
  if (views.size() < 2) throw Error(ErrorKind::InvalidArgument, "visual hull needs at least 2 views");
  const auto& n = layout.dims();
  std::vector<std::uint8_t> occ(layout.size(), 0);
  // Only nodes at least two layers from the border may be occupied so the
  // zero level set closes inside the grid interior.
#pragma omp parallel for schedule(static)
  for (int k = 2; k < n[2] - 2; ++k) {
    for (int j = 2; j < n[1] - 2; ++j) {
      for (int i = 2; i < n[0] - 2; ++i) occ[layout.index(i, j, k)] = 1;
    }
  }
  const double h = layout.spacing();
  for (const SilhouetteView& view : views) {
    const Camera& cam = view.camera;
    if (view.mask.width != cam.width() || view.mask.height != cam.height()) {
      throw Error(ErrorKind::InvalidArgument, "mask size does not match its camera");
    }
    std::vector<double> dist2;
    if (options.conservative) {
      const std::array<int, 2> dims2{view.mask.width, view.mask.height};
      dist2 = squared_distance_to(view.mask.data, dims2);
    }
    const double focal = std::max(cam.intrinsics().fx, cam.intrinsics().fy);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n[2]; ++k) {
      for (int j = 0; j < n[1]; ++j) {
        for (int i = 0; i < n[0]; ++i) {
          const std::size_t idx = layout.index(i, j, k);
          if (!occ[idx]) continue;
          const Eigen::Vector3d x = layout.node_position(i, j, k);
          const Eigen::Vector3d pc = cam.rotation() * x + cam.translation();
          bool inside = false;
          if (pc.z() > 0.0) {
            const double u = cam.intrinsics().fx * pc.x() / pc.z() + cam.intrinsics().cx;
            const double v = cam.intrinsics().fy * pc.y() / pc.z() + cam.intrinsics().cy;
            if (u >= 0.0 && v >= 0.0 && u < cam.width() && v < cam.height()) {
              const int px = int(u), py = int(v);
              if (options.conservative) {
                const double radius = pc.z() > h ? focal * h / (pc.z() - h) : std::numeric_limits<double>::infinity();
                const double d = std::sqrt(dist2[std::size_t(py) * std::size_t(cam.width()) + std::size_t(px)]);
                inside = d <= radius + 0.7072;
              } else {
                inside = view.mask.at(px, py);
              }
            }
          }
          if (!inside) occ[idx] = 0;
        }
      }
    }
  }
  return occ;
}

std::vector<double> signed_distance_from_occupancy(std::span<const std::uint8_t> occupancy,
                                                   const std::array<int, 3>& dims, double spacing) {
  std::vector<std::uint8_t> free_nodes(occupancy.size());
  for (std::size_t i = 0; i < occupancy.size(); ++i) free_nodes[i] = occupancy[i] ? 0 : 1;
  const std::vector<double> to_occupied = squared_distance_to(occupancy, dims);
  const std::vector<double> to_free = squared_distance_to(free_nodes, dims);
  std::vector<double> sdf(occupancy.size());
  for (std::size_t i = 0; i < sdf.size(); ++i) {
    if (occupancy[i]) {
      sdf[i] = -spacing * (std::sqrt(to_free[i]) - 0.5);
    } else {
      sdf[i] = spacing * (std::sqrt(to_occupied[i]) - 0.5);
    }
  }
  return sdf;
}

SdfGrid visual_hull(const SdfGrid& layout, std::span<const SilhouetteView> views, const HullOptions& options) {
  const std::vector<std::uint8_t> occ = hull_occupancy(layout, views, options);
  if (std::none_of(occ.begin(), occ.end(), [](std::uint8_t v) { return v != 0; })) {
    throw Error(ErrorKind::Initialization, "visual hull is empty: no grid node projects inside every silhouette");
  }
  return SdfGrid(layout.origin(), layout.spacing(), layout.dims(),
                 signed_distance_from_occupancy(occ, layout.dims(), layout.spacing()));
}

SdfGrid visual_hull(const SceneConfig& scene, const HullOptions& options) {
  scene.validate();
  std::vector<SilhouetteView> views;
  for (const ViewConfig& v : scene.views) views.push_back({v.camera, load_mask_png(v.mask)});
  return visual_hull(make_grid_layout(scene.volume, scene.grid_res), views, options);
}

}  // namespace rmrecon
