#pragma once

#include <variant>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/image.hpp"

namespace rmrecon {

/// Latitude-longitude incident radiance. Row 0 looks toward +z (polar angle
/// 0), the last row toward -z; columns sweep the azimuth atan2(y, x) from -pi.
class EnvMap {
 public:
  EnvMap() = default;
  explicit EnvMap(ImageF pixels);  // 3 channels, nonnegative

  static EnvMap constant(const Eigen::Vector3d& radiance, int width = 64, int height = 32);

  const ImageF& pixels() const { return pixels_; }
  /// Bilinear lookup, wrapping in azimuth.
  Eigen::Vector3d radiance(const Eigen::Vector3d& direction) const;

 private:
  ImageF pixels_;
};

struct EnvLobe {
  Eigen::Vector3d direction;  // world, normalized on use
  Eigen::Vector3d intensity;
  double sharpness = 10.0;    // L = intensity * exp(sharpness * (w . d - 1))
};

/// Rasterizes an ambient term plus a sum of exponential lobes.
EnvMap make_lobe_envmap(const Eigen::Vector3d& ambient, const std::vector<EnvLobe>& lobes, int width = 256,
                        int height = 128);

struct Lambertian {
  Eigen::Vector3d albedo = Eigen::Vector3d::Constant(0.8);
};

/// Normalized Blinn-Phong: rho_d / pi + k_s (alpha + 8) / (8 pi) (n . h)^alpha.
struct BlinnPhong {
  Eigen::Vector3d diffuse = Eigen::Vector3d::Constant(0.5);
  double specular = 0.2;
  double exponent = 20.0;
};

using Brdf = std::variant<Lambertian, BlinnPhong>;

/// Throws InvalidArgument for negative parameters or albedo above one.
void validate_brdf(const Brdf& brdf);

/// f(w_i, w_o, n) per channel; all vectors unit, world frame.
Eigen::Vector3d eval_brdf(const Brdf& brdf, const Eigen::Vector3d& wi, const Eigen::Vector3d& wo,
                          const Eigen::Vector3d& n);

/// Deterministic Halton (bases 2 and 3) directions on the unit sphere,
/// mapped with z = 1 - 2u, phi = 2 pi v (equal area).
std::vector<Eigen::Vector3d> halton_sphere(int count);

}  // namespace rmrecon
