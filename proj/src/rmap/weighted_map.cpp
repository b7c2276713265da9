#include "rmrecon/weighted_map.hpp"

#include <algorithm>
#include <cmath>

#include "rmrecon/error.hpp"
#include "rmrecon/fisheye.hpp"

namespace rmrecon {

ConfidenceMap::ConfidenceMap(int w, int h, double fill)
    : width(w), height(h), weights(std::size_t(w) * std::size_t(h), fill) {}

void ConfidenceMap::validate() const {
  if (weights.size() != std::size_t(width) * std::size_t(height)) {
    throw Error(ErrorKind::InvalidArgument, "confidence map size mismatch");
  }
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorKind::InvalidArgument, "confidence outside [0, 1]");
  }
}

void MapKernelParams::validate() const {
  if (!(s > 0.0) || !(s_fill > 0.0) || !(s_fill < s) || !(eps_den > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "kernel parameters need s > s_fill > 0 and eps_den > 0");
  }
}

ImageF MappedFeatures::to_image() const {
  ImageF img(resolution, resolution, channels);
  for (std::size_t i = 0; i < values.size(); ++i) img.data[i] = float(values[i]);
  return img;
}

MappedFeatures weighted_map(const ImageF& features, std::span<const Eigen::Vector3d> normals,
                            std::span<const std::uint8_t> coverage, const ConfidenceMap& confidence,
                            const Eigen::Vector3d& omega_o, const MapKernelParams& params, int resolution) {
  params.validate();
  if (resolution < 2) throw Error(ErrorKind::InvalidArgument, "resolution must be >= 2");
  const std::size_t npix = features.pixel_count();
  if (normals.size() != npix || coverage.size() != npix || confidence.weights.size() != npix) {
    throw Error(ErrorKind::InvalidArgument, "weighted_map: inputs must share the image size");
  }
  const int nc = features.channels;

  double cmax = 0.0;
  for (std::size_t i = 0; i < npix; ++i) {
    if (coverage[i]) cmax = std::max(cmax, confidence.weights[i]);
  }

  // Compact list of contributing observations.
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < npix; ++i) {
    if (coverage[i] && cmax > 0.0 && confidence.weights[i] / cmax * std::max(normals[i].dot(omega_o), 0.0) > 0.0) {
      used.push_back(i);
    }
  }
  if (used.empty()) throw Error(ErrorKind::EmptyObservation, "no covered pixel with positive weight");
  const Eigen::Index nobs = Eigen::Index(used.size());
  Eigen::ArrayXd nx(nobs), ny(nobs), nz(nobs), base(nobs);
  Eigen::ArrayXXd feat(nobs, nc);
  for (Eigen::Index m = 0; m < nobs; ++m) {
    const std::size_t i = used[std::size_t(m)];
    const Eigen::Vector3d& n = normals[i];
    nx[m] = n.x();
    ny[m] = n.y();
    nz[m] = n.z();
    base[m] = confidence.weights[i] / cmax * std::max(n.dot(omega_o), 0.0);
    for (int c = 0; c < nc; ++c) feat(m, c) = features.data[i * std::size_t(nc) + std::size_t(c)];
  }

  MappedFeatures out;
  out.resolution = resolution;
  out.channels = nc;
  const std::size_t m2 = std::size_t(resolution) * std::size_t(resolution);
  out.values.assign(m2 * std::size_t(nc), 0.0);
  out.weights.assign(m2, 0.0);
  out.filled.assign(m2, 0);

  std::size_t filled = 0;
#pragma omp parallel reduction(+ : filled)
  {
    Eigen::ArrayXd kern(nobs);
#pragma omp for schedule(dynamic, 1)
    for (int row = 0; row < resolution; ++row) {
      for (int col = 0; col < resolution; ++col) {
        if (!fisheye_pixel_valid(col, row, resolution)) continue;
        const Eigen::Vector3d q = fisheye_unproject(fisheye_pixel_center(col, row, resolution));
        const std::size_t pix = std::size_t(row) * std::size_t(resolution) + std::size_t(col);
        for (int pass = 0; pass < 2; ++pass) {
          const double s = pass == 0 ? params.s : params.s_fill;
          kern = base * (s * (nx * q.x() + ny * q.y() + nz * q.z() - 1.0)).exp();
          const double wsum = kern.sum();
          if (pass == 0 && wsum < params.eps_den) {
            out.filled[pix] = 1;
            ++filled;
            continue;
          }
          out.weights[pix] = wsum;
          for (int c = 0; c < nc; ++c) {
            out.values[pix * std::size_t(nc) + std::size_t(c)] = (kern * feat.col(c)).sum() / wsum;
          }
          break;
        }
      }
    }
  }
  out.filled_count = filled;
  return out;
}

}  // namespace rmrecon
