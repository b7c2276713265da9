#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "rmrecon/image.hpp"
#include "rmrecon/reflectance_map.hpp"
#include "rmrecon/weighted_map.hpp"

namespace rmrecon {

inline constexpr double kDefaultConfidenceSharpness = 10.0;

/// w_m = exp(-k * ||log rendered_m - log input_m||_1) over channels, with the
/// default log floor. Stays in (0, 1]: underflow is clamped to the smallest
/// normal double.
ConfidenceMap confidence_update(const ImageF& input, const ImageF& rendered, double k = kDefaultConfidenceSharpness);

struct RmEstimateParams {
  MapKernelParams kernel;
  int resolution = 128;
  int rounds = 3;
  double confidence_sharpness = kDefaultConfidenceSharpness;
};

struct RmEstimate {
  ReflectanceMap rm;
  ConfidenceMap confidence;
  MappedFeatures mapped;  // last round's raw mapping
};

/// Alternates weighted_map on the raw radiance with confidence updates from
/// the re-rendered image, starting from uniform confidence.
RmEstimate estimate_rm(const ImageF& image, std::span<const Eigen::Vector3d> normals,
                       std::span<const std::uint8_t> coverage, const Eigen::Vector3d& omega_o,
                       const Eigen::Matrix3d& view_rotation, const RmEstimateParams& params = {});

/// Observations for the image reconstruction term.
struct RmObservation {
  const ImageF* image = nullptr;
  std::span<const Eigen::Vector3d> normals;
  std::span<const std::uint8_t> coverage;
};

struct RmLosses {
  double log_l1 = 0.0;
  double log_gradient = 0.0;
  double image_recon = 0.0;
  double total = 0.0;  // 1 * log_l1 + 0.1 * log_gradient + 1 * image_recon
};

/// Log-space comparison of an estimated map against the truth over the valid
/// disc. The image term weights each observation by
/// exp(-10 ||log R(n_m) - log I_m||_1) computed from the true map and is zero
/// when no observation is given.
RmLosses rm_losses(const ReflectanceMap& estimate, const ReflectanceMap& truth,
                   const std::optional<RmObservation>& observation = std::nullopt);

}  // namespace rmrecon
