#include "rmrecon/levelset.hpp"

#include <cmath>
#include <sstream>

#include "rmrecon/error.hpp"

namespace rmrecon {
namespace {

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::vector<Eigen::Vector3d> sfs_loss_pixel_grads(const GBuffer& gbuffer, std::span<const Eigen::Vector3d> target,
                                                  std::span<const std::uint8_t> valid, double* loss,
                                                  std::size_t* pixels) {
  const std::size_t n = gbuffer.pixel_count();
  if (target.size() != n || valid.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "target normals and validity mask must match the G-buffer size");
  }
  std::size_t count = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!gbuffer.coverage[i] || !valid[i]) continue;
    ++count;
    sum += (gbuffer.normal[i] - target[i]).cwiseAbs().sum();
  }
  if (count == 0) throw Error(ErrorKind::LossUndefined, "SfS loss has no valid covered pixel");
  std::vector<Eigen::Vector3d> grads(n, Eigen::Vector3d::Zero());
  const double inv = 1.0 / double(count);
  for (std::size_t i = 0; i < n; ++i) {
    if (!gbuffer.coverage[i] || !valid[i]) continue;
    const Eigen::Vector3d d = gbuffer.normal[i] - target[i];
    grads[i] = Eigen::Vector3d(sign0(d.x()), sign0(d.y()), sign0(d.z())) * inv;
  }
  if (loss) *loss = sum * inv;
  if (pixels) *pixels = count;
  return grads;
}

SfsLossResult sfs_loss_and_vertex_grads(const GBuffer& gbuffer, const TriMesh& mesh,
                                        std::span<const Eigen::Vector3d> target,
                                        std::span<const std::uint8_t> valid) {
  SfsLossResult out;
  const auto pixel_grads = sfs_loss_pixel_grads(gbuffer, target, valid, &out.loss, &out.pixels);
  out.vertex_grads = backward_normals(gbuffer, mesh, pixel_grads);
  return out;
}

std::vector<double> chain_to_theta(const TriMesh& mesh, std::span<const Eigen::Vector3d> dL_dv, const SdfGrid& grid) {
  if (dL_dv.size() != mesh.vertices.size()) {
    throw Error(ErrorKind::InvalidArgument, "dL/dv must have one entry per vertex");
  }
  std::vector<double> out(grid.size(), 0.0);
  // Fixed vertex order keeps the accumulation reproducible.
  for (std::size_t j = 0; j < mesh.vertices.size(); ++j) {
    const Eigen::Vector3d& v = mesh.vertices[j];
    if (!grid.in_interior(v)) {
      std::ostringstream os;
      os << "vertex " << j << " at (" << v.x() << ", " << v.y() << ", " << v.z() << ") lies outside the grid interior";
      throw Error(ErrorKind::Domain, os.str());
    }
    if (dL_dv[j].squaredNorm() == 0.0) continue;
    const double dL_df = -eval_gradient(grid, v).dot(dL_dv[j]);
    if (dL_df == 0.0) continue;
    const BasisWeights bw = basis_weights(grid, v);
    for (std::size_t q = 0; q < bw.nodes.size(); ++q) out[bw.nodes[q]] += bw.weights[q] * dL_df;
  }
  return out;
}

AdamState::AdamState(std::size_t n, double learning_rate, double b1, double b2, double epsilon)
    : m(n, 0.0), v(n, 0.0), lr(learning_rate), beta1(b1), beta2(b2), eps(epsilon) {}

void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state) {
  if (theta.size() != grad.size() || state.m.size() != theta.size() || state.v.size() != theta.size()) {
    throw Error(ErrorKind::InvalidArgument, "Adam: parameter, gradient and moment sizes differ");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw Error(ErrorKind::Optimizer, "non-finite gradient at parameter " + std::to_string(i));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.step));
  const double b1 = state.beta1, b2 = state.beta2, lr = state.lr, eps = state.eps;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(theta.size()); ++i) {
    const double g = grad[std::size_t(i)];
    double& m = state.m[std::size_t(i)];
    double& v = state.v[std::size_t(i)];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    theta[std::size_t(i)] -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
  }
}

void hull_clamp(SdfGrid& grid, const SdfGrid& hull) {
  if (!grid.same_layout(hull)) throw Error(ErrorKind::InvalidArgument, "hull_clamp: grid layouts differ");
  auto theta = grid.coeffs();
  const auto bound = hull.coeffs();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = std::max(theta[i], bound[i]);
}

}  // namespace rmrecon
