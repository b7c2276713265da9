#pragma once

#include <span>
#include <vector>

#include "rmrecon/scene.hpp"
#include "rmrecon/sdf_grid.hpp"

namespace rmrecon {

struct SilhouetteView {
  Camera camera;
  MaskImage mask;
};

struct HullOptions {
  /// Nodes whose h-ball projection touches a mask pixel count as inside that
  /// view. Keeps the node-sampled hull a superset of the object.
  bool conservative = true;
};

/// Node occupancy: inside iff the node projects into the image and onto the
/// silhouette in every view.
std::vector<std::uint8_t> hull_occupancy(const SdfGrid& layout, std::span<const SilhouetteView> views,
                                         const HullOptions& options = {});

/// Signed distance (world units, negative inside) of an occupancy field; the
/// zero level lies halfway between occupied and free nodes.
std::vector<double> signed_distance_from_occupancy(std::span<const std::uint8_t> occupancy,
                                                   const std::array<int, 3>& dims, double spacing);

/// Grid covering `volume` with `grid_res` nodes on the longest axis plus a
/// one-node margin on each side (so the whole volume lies in the interior).
SdfGrid make_grid_layout(const AxisBox& volume, int grid_res);

/// Throws Initialization when no node is occupied.
SdfGrid visual_hull(const SdfGrid& layout, std::span<const SilhouetteView> views,
                    const HullOptions& options = {});
SdfGrid visual_hull(const SceneConfig& scene, const HullOptions& options = {});

}  // namespace rmrecon
