#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/image.hpp"
#include "rmrecon/reflectance_map.hpp"
#include "rmrecon/vmf.hpp"

namespace rmrecon {

/// Centers of a coarse K x K fisheye raster that fall inside the disc.
std::vector<Eigen::Vector3d> make_candidates(int k = 8);

/// Per covered pixel, a probability vector over the candidates.
struct LikelihoodMap {
  int width = 0;
  int height = 0;
  int candidates = 0;
  std::vector<std::uint8_t> coverage;
  std::vector<double> probs;  // pixel-major, `candidates` entries per pixel

  std::span<const double> at(std::size_t pixel) const {
    return {probs.data() + pixel * std::size_t(candidates), std::size_t(candidates)};
  }
};

inline constexpr double kDefaultLikelihoodBeta = 20.0;

/// exp(-beta d_i) / sum_j exp(-beta d_j) with the minimum distance subtracted.
void softmax_neg_distance(std::span<const double> distances, double beta, std::span<double> out);

/// Softmax over candidates of the negated L2 distance between the pixel's log
/// radiance and the map's log radiance at each candidate normal.
LikelihoodMap observation_likelihood(const ImageF& image, std::span<const std::uint8_t> coverage,
                                     const ReflectanceMap& rm, std::span<const Eigen::Vector3d> candidates,
                                     double beta = kDefaultLikelihoodBeta);

/// Weighted spherical k-means over the candidates with moment-matched
/// concentrations. Deterministic seeding: the most probable candidate, then
/// repeatedly the candidate with the largest p (1 - max cos) to the seeds.
VmfMixture fit_vmf_pixel(std::span<const double> probs, std::span<const Eigen::Vector3d> candidates, int kv = 2);

struct VmfMixtureMap {
  int width = 0;
  int height = 0;
  std::vector<VmfMixture> pixels;  // empty mixture where uncovered
  std::size_t capped = 0;
};

VmfMixtureMap fit_vmf_mixture(const LikelihoodMap& likelihood, std::span<const Eigen::Vector3d> candidates,
                              int kv = 2);

/// n = (p, q, 1) / sqrt(p^2 + q^2 + 1).
Eigen::Vector3d pq_to_normal(double p, double q);
/// Inverse; throws Domain when n_z <= 0.
Eigen::Vector2d normal_to_pq(const Eigen::Vector3d& n);

/// ||log I - log R(n)||_1 over channels.
double photometric_objective(const float* pixel, const ReflectanceMap& rm, const Eigen::Vector3d& n);

/// Per-pixel golden-section descent along p and q from the coarse normal.
/// A step is kept only when it lowers the objective.
std::vector<Eigen::Vector3d> refine_normals(std::span<const Eigen::Vector3d> coarse, std::span<const std::uint8_t> valid,
                                            const ImageF& image, const ReflectanceMap& rm, int iterations = 4);

struct SfsParams {
  int candidate_grid = 8;
  double beta = kDefaultLikelihoodBeta;
  int components = 2;
  int refine_iterations = 4;
};

struct SfsResult {
  std::vector<Eigen::Vector3d> normals;  // view frame
  std::vector<std::uint8_t> valid;
  VmfMixtureMap mixtures;
  std::size_t fallbacks = 0;  // pixels whose mean direction was undefined
};

/// likelihood -> vMF mixture -> mean direction -> refinement, per covered pixel.
SfsResult estimate_normals(const ImageF& image, std::span<const std::uint8_t> coverage, const ReflectanceMap& rm,
                           const SfsParams& params = {});

}  // namespace rmrecon
