#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/image.hpp"

namespace rmrecon {

/// Per-pixel observation weight in [0, 1].
struct ConfidenceMap {
  int width = 0;
  int height = 0;
  std::vector<double> weights;

  ConfidenceMap() = default;
  ConfidenceMap(int w, int h, double fill = 1.0);

  double at(int x, int y) const { return weights[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
  void validate() const;  // throws InvalidArgument outside [0, 1]
};

struct MapKernelParams {
  double s = 200.0;
  double s_fill = 8.0;
  double eps_den = 1e-6;

  void validate() const;
};

/// Result of mapping image features onto the fisheye normal raster.
struct MappedFeatures {
  int resolution = 0;
  int channels = 0;
  std::vector<double> values;   // resolution^2 * channels, zero outside the disc
  std::vector<double> weights;  // sum of kernel weights per pixel
  std::vector<std::uint8_t> filled;  // 1 where the wide second-pass kernel was used
  std::size_t filled_count = 0;

  double value(int col, int row, int c) const {
    return values[(std::size_t(row) * std::size_t(resolution) + std::size_t(col)) * std::size_t(channels) +
                  std::size_t(c)];
  }
  ImageF to_image() const;
};

/// Normalized kernel-weighted average of observed features at every valid
/// fisheye pixel n':
///   R'(n') = sum_m w'_m f_m / sum_m w'_m,
///   w'_m = c_m max(n_m . w_o, 0) exp(s (n_m . n' - 1)),
/// with c_m the confidences divided by their maximum. Both rescalings cancel
/// in the ratio; they make the hole threshold eps_den independent of the
/// confidence scale and of s. Pixels whose weight sum is below eps_den are
/// recomputed with s_fill. Normals and w_o are in the view frame.
/// Throws EmptyObservation when no covered pixel has positive weight.
MappedFeatures weighted_map(const ImageF& features, std::span<const Eigen::Vector3d> normals,
                            std::span<const std::uint8_t> coverage, const ConfidenceMap& confidence,
                            const Eigen::Vector3d& omega_o, const MapKernelParams& params, int resolution);

}  // namespace rmrecon
