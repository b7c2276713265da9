#pragma once

#include <Eigen/Core>

namespace rmrecon {

/// Angular fisheye projection of the visible normal hemisphere (n_z > 0 in
/// the view frame) onto the unit disc inscribed in [0,1]^2: the radius is
/// proportional to the angle from the view axis, reaching the rim at 90
/// degrees. Throws OutOfHemisphere when n_z <= 0.
Eigen::Vector2d fisheye_project(const Eigen::Vector3d& n);

/// Inverse of fisheye_project. Throws InvalidPixel outside the open disc.
Eigen::Vector3d fisheye_unproject(const Eigen::Vector2d& uv);

bool fisheye_in_disc(const Eigen::Vector2d& uv);

/// (u, v) of the center of raster pixel (col, row) in an M x M map.
inline Eigen::Vector2d fisheye_pixel_center(int col, int row, int resolution) {
  return {(col + 0.5) / resolution, (row + 0.5) / resolution};
}

inline bool fisheye_pixel_valid(int col, int row, int resolution) {
  return fisheye_in_disc(fisheye_pixel_center(col, row, resolution));
}

}  // namespace rmrecon
