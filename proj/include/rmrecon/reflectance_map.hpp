#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/envmap.hpp"
#include "rmrecon/image.hpp"

namespace rmrecon {

/// Camera-view reflectance map R(n): radiance as a function of the
/// view-frame surface normal, stored as an M x M RGB raster under the
/// angular fisheye projection. Only pixels whose centers fall inside the
/// inscribed disc carry data; the rest are zero.
class ReflectanceMap {
 public:
  ReflectanceMap() = default;
  ReflectanceMap(int resolution, const Eigen::Matrix3d& view_rotation);
  ReflectanceMap(ImageF data, const Eigen::Matrix3d& view_rotation);

  int resolution() const { return data_.width; }
  const ImageF& data() const { return data_; }
  ImageF& data() { return data_; }
  const Eigen::Matrix3d& view_rotation() const { return view_rotation_; }
  bool valid(int col, int row) const { return valid_[std::size_t(row) * std::size_t(resolution()) + std::size_t(col)] != 0; }
  const std::vector<std::uint8_t>& valid_mask() const { return valid_; }
  std::size_t valid_count() const;

  Eigen::Vector3d pixel(int col, int row) const;
  void set_pixel(int col, int row, const Eigen::Vector3d& value);

  /// Bilinear lookup at fisheye_project(n), blending only valid pixels.
  /// Throws OutOfHemisphere when n_z <= 0.
  Eigen::Vector3d lookup(const Eigen::Vector3d& n) const;

 private:
  ImageF data_;
  Eigen::Matrix3d view_rotation_ = Eigen::Matrix3d::Identity();
  std::vector<std::uint8_t> valid_;
};

/// R(n) = integral of L_i(w_i) f(w_i, w_o, n) max(w_i . n, 0) dw_i, per valid
/// pixel, by quadrature over `n_samples` Halton sphere directions. The
/// quadrature weights are normalized so the clamped-cosine kernel integrates
/// to exactly pi. `omega_o` is the world-space viewing direction.
ReflectanceMap rm_from_scene(const EnvMap& env, const Brdf& brdf, const Eigen::Vector3d& omega_o,
                             const Eigen::Matrix3d& view_rotation, int resolution, int n_samples = 1 << 16);

struct RenderedImage {
  ImageF image;
  std::size_t out_of_hemisphere = 0;  // covered pixels with n_z <= 0, rendered as 0
};

/// Per covered pixel, the reflectance map at the pixel's view-frame normal.
RenderedImage render_from_rm(const ReflectanceMap& rm, std::span<const Eigen::Vector3d> normals,
                             std::span<const std::uint8_t> coverage, int width, int height);

/// PFM raster plus `<stem>.json` sidecar {resolution, view_R, convention}.
void save_reflectance_map(const ReflectanceMap& rm, const std::filesystem::path& pfm_path);
ReflectanceMap load_reflectance_map(const std::filesystem::path& pfm_path);

inline constexpr const char* kFisheyeConvention = "angular-fisheye-v1";

}  // namespace rmrecon
