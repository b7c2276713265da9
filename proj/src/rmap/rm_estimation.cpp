#include "rmrecon/rm_estimation.hpp"

#include <cmath>
#include <limits>

#include "rmrecon/error.hpp"

namespace rmrecon {
namespace {

double safe_log(double v) { return std::log(std::max(v, kDefaultLogFloor)); }

double log_l1_gap(const Eigen::Vector3d& a, const float* b, int channels) {
  double gap = 0.0;
  for (int c = 0; c < channels; ++c) gap += std::abs(safe_log(a[c]) - safe_log(b[c]));
  return gap;
}

}  // namespace

ConfidenceMap confidence_update(const ImageF& input, const ImageF& rendered, double k) {
  if (input.width != rendered.width || input.height != rendered.height || input.channels != rendered.channels) {
    throw Error(ErrorKind::InvalidArgument, "confidence_update: image sizes differ");
  }
  ConfidenceMap conf(input.width, input.height);
  const std::size_t nc = std::size_t(input.channels);
  for (std::size_t i = 0; i < conf.weights.size(); ++i) {
    double gap = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      gap += std::abs(safe_log(rendered.data[i * nc + c]) - safe_log(input.data[i * nc + c]));
    }
    conf.weights[i] = std::max(std::exp(-k * gap), std::numeric_limits<double>::min());
  }
  return conf;
}

RmEstimate estimate_rm(const ImageF& image, std::span<const Eigen::Vector3d> normals,
                       std::span<const std::uint8_t> coverage, const Eigen::Vector3d& omega_o,
                       const Eigen::Matrix3d& view_rotation, const RmEstimateParams& params) {
  if (params.rounds < 1) throw Error(ErrorKind::InvalidArgument, "estimate_rm needs at least one round");
  RmEstimate est;
  est.confidence = ConfidenceMap(image.width, image.height, 1.0);
  for (int round = 0; round < params.rounds; ++round) {
    est.mapped = weighted_map(image, normals, coverage, est.confidence, omega_o, params.kernel, params.resolution);
    est.rm = ReflectanceMap(est.mapped.to_image(), view_rotation);
    const RenderedImage rendered = render_from_rm(est.rm, normals, coverage, image.width, image.height);
    est.confidence = confidence_update(image, rendered.image, params.confidence_sharpness);
  }
  return est;
}

RmLosses rm_losses(const ReflectanceMap& estimate, const ReflectanceMap& truth,
                   const std::optional<RmObservation>& observation) {
  const int m = estimate.resolution();
  if (truth.resolution() != m) throw Error(ErrorKind::InvalidArgument, "rm_losses: resolutions differ");
  RmLosses out;
  double l1 = 0.0;
  std::size_t l1_count = 0;
  double grad = 0.0;
  std::size_t grad_count = 0;
  auto lg = [](const ReflectanceMap& r, int x, int y, int c) { return safe_log(r.data().at(x, y, c)); };
  for (int y = 0; y < m; ++y) {
    for (int x = 0; x < m; ++x) {
      if (!estimate.valid(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double e = lg(estimate, x, y, c), t = lg(truth, x, y, c);
        l1 += std::abs(e - t);
        ++l1_count;
        if (x + 1 < m && estimate.valid(x + 1, y)) {
          grad += std::abs((lg(estimate, x + 1, y, c) - e) - (lg(truth, x + 1, y, c) - t));
          ++grad_count;
        }
        if (y + 1 < m && estimate.valid(x, y + 1)) {
          grad += std::abs((lg(estimate, x, y + 1, c) - e) - (lg(truth, x, y + 1, c) - t));
          ++grad_count;
        }
      }
    }
  }
  out.log_l1 = l1_count ? l1 / double(l1_count) : 0.0;
  out.log_gradient = grad_count ? grad / double(grad_count) : 0.0;

  if (observation && observation->image) {
    const ImageF& img = *observation->image;
    if (img.channels != 3 || observation->normals.size() != img.pixel_count() ||
        observation->coverage.size() != img.pixel_count()) {
      throw Error(ErrorKind::InvalidArgument, "rm_losses: observation buffers must match a 3-channel image");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      const Eigen::Vector3d& n = observation->normals[i];
      if (!observation->coverage[i] || !(n.z() > 0.0)) continue;
      const float* obs = &img.data[3 * i];
      const double alpha = std::exp(-kDefaultConfidenceSharpness * log_l1_gap(truth.lookup(n), obs, 3));
      num += alpha * log_l1_gap(estimate.lookup(n), obs, 3);
      den += alpha;
    }
    out.image_recon = den > 0.0 ? num / den : 0.0;
  }
  out.total = out.log_l1 + 0.1 * out.log_gradient + out.image_recon;
  return out;
}

}  // namespace rmrecon
