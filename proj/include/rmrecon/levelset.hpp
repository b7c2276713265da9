#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/gbuffer.hpp"
#include "rmrecon/mesh.hpp"
#include "rmrecon/sdf_grid.hpp"

namespace rmrecon {

struct SfsLossResult {
  double loss = 0.0;  // mean over valid covered pixels of the per-pixel L1 normal error
  std::size_t pixels = 0;
  std::vector<Eigen::Vector3d> vertex_grads;
};

/// Shape-from-shading normal loss of one view and its vertex gradients.
/// `target` holds view-frame unit normals; `valid` selects pixels that have
/// an estimate. Throws LossUndefined when no pixel is both valid and covered.
SfsLossResult sfs_loss_and_vertex_grads(const GBuffer& gbuffer, const TriMesh& mesh,
                                        std::span<const Eigen::Vector3d> target,
                                        std::span<const std::uint8_t> valid);

/// Per-pixel dL/dn for the loss above (zero off the valid covered set).
std::vector<Eigen::Vector3d> sfs_loss_pixel_grads(const GBuffer& gbuffer, std::span<const Eigen::Vector3d> target,
                                                  std::span<const std::uint8_t> valid, double* loss,
                                                  std::size_t* pixels);

/// Level-set chain rule: dL/df(v_j) = -grad f(v_j) . dL/dv_j, scattered to
/// the coefficients through the B-spline basis weights. Throws Domain naming
/// the first vertex outside the grid interior.
std::vector<double> chain_to_theta(const TriMesh& mesh, std::span<const Eigen::Vector3d> dL_dv, const SdfGrid& grid);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate, double b1 = 0.9, double b2 = 0.999, double epsilon = 1e-8);
};

/// One bias-corrected Adam update in place. Throws Optimizer on a non-finite
/// gradient entry, before touching any state.
void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state);

/// theta = max(theta, theta_hull) elementwise; keeps the surface inside the hull.
void hull_clamp(SdfGrid& grid, const SdfGrid& hull);

}  // namespace rmrecon
