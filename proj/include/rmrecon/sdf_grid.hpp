#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace rmrecon {

/// Regular grid of cubic B-spline coefficients. The field is
///   f(x) = sum_ijk theta_ijk B((x - x_ijk) / h)
/// with B the tensor-product uniform cubic B-spline. Evaluation needs the
/// 4x4x4 node neighbourhood, so the valid domain is the interior box
/// [origin + h, origin + (n - 2) h] on every axis.
class SdfGrid {
 public:
  SdfGrid() = default;
  SdfGrid(const Eigen::Vector3d& origin, double spacing, const std::array<int, 3>& dims, double fill = 0.0);
  SdfGrid(const Eigen::Vector3d& origin, double spacing, const std::array<int, 3>& dims,
          std::vector<double> coeffs);

  const Eigen::Vector3d& origin() const { return origin_; }
  double spacing() const { return h_; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t size() const { return coeffs_.size(); }

  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(dims_[0]) * (std::size_t(j) + std::size_t(dims_[1]) * std::size_t(k));
  }
  Eigen::Vector3d node_position(int i, int j, int k) const {
    return origin_ + h_ * Eigen::Vector3d(i, j, k);
  }
  std::array<int, 3> node_of(std::size_t index) const;

  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }

  Eigen::Vector3d interior_min() const { return origin_ + Eigen::Vector3d::Constant(h_); }
  Eigen::Vector3d interior_max() const;
  bool in_interior(const Eigen::Vector3d& x) const;

  bool same_layout(const SdfGrid& other) const;

 private:
  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  double h_ = 1.0;
  std::array<int, 3> dims_{0, 0, 0};
  std::vector<double> coeffs_;
};

/// Uniform cubic B-spline B(t), support |t| < 2.
double cubic_bspline(double t);

/// Throws Domain when x is outside the valid interior.
double eval_field(const SdfGrid& grid, const Eigen::Vector3d& x);
Eigen::Vector3d eval_gradient(const SdfGrid& grid, const Eigen::Vector3d& x);

struct FieldSample {
  double value = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
};
FieldSample eval_field_and_gradient(const SdfGrid& grid, const Eigen::Vector3d& x);

/// df(x)/dtheta over the 64 supporting nodes.
struct BasisWeights {
  std::array<std::size_t, 64> nodes{};
  std::array<double, 64> weights{};
};
BasisWeights basis_weights(const SdfGrid& grid, const Eigen::Vector3d& x);

/// Field sampled on a regular lattice spanning the grid interior with
/// spacing h / factor, i.e. factor * (n - 3) + 1 samples per axis.
struct Lattice {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  double spacing = 1.0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> values;

  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(dims[0]) * (std::size_t(j) + std::size_t(dims[1]) * std::size_t(k));
  }
  Eigen::Vector3d position(int i, int j, int k) const { return origin + spacing * Eigen::Vector3d(i, j, k); }
};

/// Separable OpenMP evaluation; matches pointwise eval_field.
Lattice sample_lattice(const SdfGrid& grid, int factor);

/// Checkpoint: `<stem>.json` header plus `<stem>.raw` little-endian float64 coefficients.
void save_grid(const SdfGrid& grid, const std::filesystem::path& json_path);
SdfGrid load_grid(const std::filesystem::path& json_path);

}  // namespace rmrecon
