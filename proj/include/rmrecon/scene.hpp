#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rmrecon/camera.hpp"
#include "rmrecon/image.hpp"

namespace rmrecon {

struct AxisBox {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  Eigen::Vector3d center() const { return 0.5 * (min + max); }
  Eigen::Vector3d extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
};

struct ViewConfig {
  std::filesystem::path image;
  std::filesystem::path mask;
  Camera camera;
  std::optional<std::filesystem::path> reference_rm;  // ground-truth reflectance map, when known
};

struct OptimizerConfig {
  std::optional<double> lr;  // defaults to 0.02 * grid spacing
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int steps_per_round = 100;
  int rounds = 8;
};

struct SceneConfig {
  std::vector<ViewConfig> views;
  AxisBox volume;
  int grid_res = 128;
  std::optional<OptimizerConfig> optimizer;
  std::optional<std::filesystem::path> reference_mesh;  // ground-truth surface, when known

  /// Throws InvalidArgument unless there are >= 2 views and the volume has
  /// strictly positive extent.
  void validate() const;
};

/// Paths inside the JSON are resolved relative to the scene file's directory.
SceneConfig load_scene(const std::filesystem::path& path);
void save_scene(const SceneConfig& scene, const std::filesystem::path& path);

struct LoadedView {
  ImageF image;
  MaskImage mask;
  Camera camera;
};

/// Loads every image and mask of the scene; checks sizes against cameras.
std::vector<LoadedView> load_views(const SceneConfig& scene);

}  // namespace rmrecon
