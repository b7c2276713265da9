#include "rmrecon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "rmrecon/bvh.hpp"
#include "rmrecon/camera.hpp"
#include "rmrecon/error.hpp"
#include "rmrecon/pfm.hpp"
#include "rmrecon/png_mask.hpp"

namespace rmrecon {

using nlohmann::json;

namespace {

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Parse, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

double signed_volume(const TriMesh& mesh) {
  double v = 0.0;
  for (const auto& f : mesh.faces) {
    v += mesh.vertices[std::size_t(f[0])].dot(
             mesh.vertices[std::size_t(f[1])].cross(mesh.vertices[std::size_t(f[2])])) / 6.0;
  }
  return v;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_views < 2) throw Error(ErrorKind::InvalidArgument, "n_views must be >= 2");
  if (width < 1 || height < 1 || rm_resolution < 2 || rm_samples < 1 || grid_res < 4) {
    throw Error(ErrorKind::InvalidArgument, "image, map and grid sizes must be positive");
  }
  if (!(orbit_radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "orbit_radius must be positive");
  validate_brdf(brdf);
}

EnvSpec three_lobe_env() {
  EnvSpec env;
  env.kind = EnvSpec::Kind::Lobes;
  env.ambient = Eigen::Vector3d::Constant(0.05);
  env.lobes = {
      {Eigen::Vector3d(1.0, 0.2, 0.6).normalized(), Eigen::Vector3d(4.0, 0.6, 0.3), 1.0},
      {Eigen::Vector3d(-0.6, 0.9, 0.3).normalized(), Eigen::Vector3d(0.4, 3.5, 0.6), 1.0},
      {Eigen::Vector3d(-0.3, -0.8, 0.7).normalized(), Eigen::Vector3d(0.4, 0.6, 4.0), 1.0},
  };
  return env;
}

SynthSpec parse_synth_spec(const json& j, const std::filesystem::path& base) {
  SynthSpec spec;
  try {
    if (j.contains("shape")) {
      const json& s = j["shape"];
      const std::string type = s.value("type", "sphere");
      if (type == "sphere") {
        spec.shape.kind = ShapeSpec::Kind::Sphere;
        spec.shape.radius = s.value("radius", 1.0);
        spec.shape.subdivisions = s.value("subdivisions", 6);
      } else if (type == "superquadric") {
        spec.shape.kind = ShapeSpec::Kind::Superquadric;
        spec.shape.e1 = s.value("e1", 1.0);
        spec.shape.e2 = s.value("e2", 1.0);
        if (s.contains("scale")) spec.shape.scale = vec3(s["scale"]);
        spec.shape.segments = s.value("segments", 128);
      } else if (type == "mesh") {
        spec.shape.kind = ShapeSpec::Kind::Mesh;
        spec.shape.mesh = base / s.at("path").get<std::string>();
      } else {
        throw Error(ErrorKind::Parse, "unknown shape type '" + type + "'");
      }
    }
    if (j.contains("brdf")) {
      const json& b = j["brdf"];
      const std::string type = b.value("type", "lambertian");
      if (type == "lambertian") {
        Lambertian l;
        if (b.contains("albedo")) l.albedo = vec3(b["albedo"]);
        spec.brdf = l;
      } else if (type == "blinn_phong") {
        BlinnPhong p;
        if (b.contains("diffuse")) p.diffuse = vec3(b["diffuse"]);
        p.specular = b.value("specular", p.specular);
        p.exponent = b.value("exponent", p.exponent);
        spec.brdf = p;
      } else {
        throw Error(ErrorKind::Parse, "unknown brdf type '" + type + "'");
      }
    }
    if (j.contains("env")) {
      const json& e = j["env"];
      const std::string type = e.value("type", "constant");
      if (type == "constant") {
        spec.env.kind = EnvSpec::Kind::Constant;
        if (e.contains("value")) spec.env.constant = vec3(e["value"]);
      } else if (type == "lobes") {
        spec.env.kind = EnvSpec::Kind::Lobes;
        if (e.contains("ambient")) spec.env.ambient = vec3(e["ambient"]);
        if (e.contains("lobes")) {
          for (const json& l : e["lobes"]) {
            spec.env.lobes.push_back({vec3(l.at("direction")), vec3(l.at("intensity")), l.value("sharpness", 10.0)});
          }
        } else {
          spec.env = three_lobe_env();
        }
      } else if (type == "file") {
        spec.env.kind = EnvSpec::Kind::File;
        spec.env.file = base / e.at("path").get<std::string>();
      } else {
        throw Error(ErrorKind::Parse, "unknown env type '" + type + "'");
      }
    }
    spec.n_views = j.value("n_views", spec.n_views);
    if (j.contains("image_size")) {
      spec.width = j["image_size"].at(0).get<int>();
      spec.height = j["image_size"].at(1).get<int>();
    }
    spec.orbit_radius = j.value("orbit_radius", spec.orbit_radius);
    spec.elevation_deg = j.value("elevation_deg", spec.elevation_deg);
    spec.rm_resolution = j.value("rm_resolution", spec.rm_resolution);
    spec.rm_samples = j.value("rm_samples", spec.rm_samples);
    spec.grid_res = j.value("grid_res", spec.grid_res);
    spec.seed = j.value("seed", spec.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return parse_synth_spec(j, path.parent_path());
}

SynthScene synthesize(const SynthSpec& spec) {
  spec.validate();
  SynthScene out;
  switch (spec.shape.kind) {
    case ShapeSpec::Kind::Sphere:
      out.mesh = make_icosphere(Eigen::Vector3d::Zero(), spec.shape.radius, spec.shape.subdivisions);
      break;
    case ShapeSpec::Kind::Superquadric:
      out.mesh = make_superquadric(spec.shape.e1, spec.shape.e2, spec.shape.scale, spec.shape.segments);
      break;
    case ShapeSpec::Kind::Mesh:
      out.mesh = load_obj(spec.shape.mesh);
      break;
  }
  if (out.mesh.empty() || !(std::abs(signed_volume(out.mesh)) > 1e-12)) {
    throw Error(ErrorKind::InvalidArgument, "synthetic shape has zero volume");
  }
  switch (spec.env.kind) {
    case EnvSpec::Kind::Constant:
      out.env = EnvMap::constant(spec.env.constant);
      break;
    case EnvSpec::Kind::Lobes:
      out.env = make_lobe_envmap(spec.env.ambient, spec.env.lobes);
      break;
    case EnvSpec::Kind::File:
      out.env = EnvMap(load_pfm(spec.env.file));
      break;
  }

  const AxisBox box = out.mesh.bounds();
  const Eigen::Vector3d center = box.center();
  double bound_radius = 0.0;
  for (const auto& v : out.mesh.vertices) bound_radius = std::max(bound_radius, (v - center).norm());
  if (!(spec.orbit_radius > bound_radius * 1.05)) {
    throw Error(ErrorKind::InvalidArgument, "orbit_radius must clear the shape's bounding sphere");
  }
  // Bounding sphere fills about 85% of the shorter image side.
  const double half_angle = std::asin(bound_radius / spec.orbit_radius);
  const double focal = 0.5 * std::min(spec.width, spec.height) / (std::tan(half_angle) / 0.85);
  const Intrinsics k{focal, focal, 0.5 * spec.width, 0.5 * spec.height};

  std::mt19937_64 rng(spec.seed);
  const double phase = spec.seed == 0 ? 0.0
                                      : std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi /
                                                                                        spec.n_views)(rng);
  const double elev = spec.elevation_deg * std::numbers::pi / 180.0;
  const TriangleBvh bvh(out.mesh);
  for (int v = 0; v < spec.n_views; ++v) {
    const double az = phase + 2.0 * std::numbers::pi * v / spec.n_views;
    const double el = (v % 2 == 0) ? elev : -elev;
    const Eigen::Vector3d eye =
        center + spec.orbit_radius * Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    SynthView view;
    view.camera = look_at_camera(eye, center, Eigen::Vector3d::UnitZ(), k, spec.width, spec.height);
    const Eigen::Vector3d omega_o = viewing_direction(view.camera, center);
    view.rm = rm_from_scene(out.env, spec.brdf, omega_o, view.camera.view_rotation(), spec.rm_resolution,
                            spec.rm_samples);
    view.gbuffer = render_gbuffer(out.mesh, bvh, view.camera, spec.width, spec.height);
    view.image = render_from_rm(view.rm, view.gbuffer.normal, view.gbuffer.coverage, spec.width, spec.height).image;
    view.mask = view.gbuffer.coverage_mask();
    ViewConfig cfg;
    cfg.camera = view.camera;
    out.scene.views.push_back(cfg);
    out.views.push_back(std::move(view));
  }
  // Leave room for the visual hull, which is larger than the object.
  const Eigen::Vector3d half = 0.5 * box.extent().cwiseMax(1e-6) * 1.3;
  out.scene.volume.min = center - half;
  out.scene.volume.max = center + half;
  out.scene.grid_res = spec.grid_res;
  return out;
}

void save_normal_map(const std::vector<Eigen::Vector3d>& normals, const std::vector<std::uint8_t>& valid, int width,
                     int height, const Eigen::Matrix3d& view_rotation, const std::filesystem::path& pfm_path) {
  ImageF img(width, height, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (!valid[i]) continue;
    for (int c = 0; c < 3; ++c) img.data[3 * i + std::size_t(c)] = float(normals[i][c]);
  }
  save_pfm(img, pfm_path);
  std::filesystem::path sidecar = pfm_path;
  sidecar.replace_extension(".json");
  std::vector<double> r(9);
  for (int i = 0; i < 9; ++i) r[std::size_t(i)] = view_rotation(i / 3, i % 3);
  const json j = {{"frame", "camera view: x right, y up, z toward the viewer"},
                  {"convention", "n = (p, q, 1) / sqrt(p^2 + q^2 + 1); zero where invalid"},
                  {"view_R", r}};
  std::ofstream out(sidecar);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + sidecar.string());
  out << j.dump(2) << '\n';
}

void write_synth(SynthScene& synth, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  char name[64];
  for (std::size_t v = 0; v < synth.views.size(); ++v) {
    SynthView& view = synth.views[v];
    ViewConfig& cfg = synth.scene.views[v];
    std::snprintf(name, sizeof name, "view_%02zu.pfm", v);
    cfg.image = out_dir / name;
    save_pfm(view.image, cfg.image);
    std::snprintf(name, sizeof name, "mask_%02zu.png", v);
    cfg.mask = out_dir / name;
    save_mask_png(view.mask, cfg.mask);
    std::snprintf(name, sizeof name, "gt_rm_%02zu.pfm", v);
    cfg.reference_rm = out_dir / name;
    save_reflectance_map(view.rm, *cfg.reference_rm);
    std::snprintf(name, sizeof name, "gt_normals_%02zu.pfm", v);
    save_normal_map(view.gbuffer.normal, view.gbuffer.coverage, view.gbuffer.width, view.gbuffer.height,
                    view.gbuffer.view_rotation, out_dir / name);
  }
  synth.scene.reference_mesh = out_dir / "gt_mesh.obj";
  save_obj(synth.mesh, *synth.scene.reference_mesh);
  save_scene(synth.scene, out_dir / "scene.json");
}

}  // namespace rmrecon
