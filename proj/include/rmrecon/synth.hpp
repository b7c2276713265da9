#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "rmrecon/envmap.hpp"
#include "rmrecon/gbuffer.hpp"
#include "rmrecon/mesh.hpp"
#include "rmrecon/reflectance_map.hpp"
#include "rmrecon/scene.hpp"

namespace rmrecon {

struct ShapeSpec {
  enum class Kind { Sphere, Superquadric, Mesh };
  Kind kind = Kind::Sphere;
  double radius = 1.0;
  int subdivisions = 6;
  double e1 = 1.0;
  double e2 = 1.0;
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  int segments = 128;
  std::filesystem::path mesh;
};

struct EnvSpec {
  enum class Kind { Constant, Lobes, File };
  Kind kind = Kind::Constant;
  Eigen::Vector3d constant = Eigen::Vector3d::Ones();
  Eigen::Vector3d ambient = Eigen::Vector3d::Constant(0.05);
  std::vector<EnvLobe> lobes;
  std::filesystem::path file;
};

struct SynthSpec {
  ShapeSpec shape;
  Brdf brdf = Lambertian{};
  EnvSpec env;
  int n_views = 10;
  int width = 128;
  int height = 128;
  double orbit_radius = 4.0;
  double elevation_deg = 25.0;  // cameras alternate between +elevation and -elevation
  int rm_resolution = 128;
  int rm_samples = 1 << 16;
  int grid_res = 128;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parses the spec JSON; relative file paths resolve against `base`.
SynthSpec parse_synth_spec(const nlohmann::json& j, const std::filesystem::path& base = {});
SynthSpec load_synth_spec(const std::filesystem::path& path);

/// Three colored lobes plus a weak ambient term, giving an injective
/// reflectance map for Lambertian surfaces.
EnvSpec three_lobe_env();

struct SynthView {
  Camera camera;
  ImageF image;
  MaskImage mask;
  ReflectanceMap rm;     // ground truth in the view frame
  GBuffer gbuffer;       // of the ground-truth mesh
};

struct SynthScene {
  SceneConfig scene;  // paths filled in by write_synth
  TriMesh mesh;
  EnvMap env;
  std::vector<SynthView> views;
};

/// Ring cameras around the shape centroid, images shaded through the
/// per-view reflectance map of the environment and BRDF. Throws
/// InvalidArgument for a degenerate shape.
SynthScene synthesize(const SynthSpec& spec);

/// Writes scene.json, images, masks, the ground-truth mesh, reflectance maps
/// and normal maps under `out_dir`; updates the scene paths.
void write_synth(SynthScene& synth, const std::filesystem::path& out_dir);

/// Normal map export: 3-channel PFM plus a sidecar naming the convention.
void save_normal_map(const std::vector<Eigen::Vector3d>& normals, const std::vector<std::uint8_t>& valid, int width,
                     int height, const Eigen::Matrix3d& view_rotation, const std::filesystem::path& pfm_path);

}  // namespace rmrecon
