#include "rmrecon/scene.hpp"

#include <fstream>
#include <json.hpp>

#include "rmrecon/pfm.hpp"
#include "rmrecon/png_mask.hpp"

namespace rmrecon {

using nlohmann::json;

namespace {

Eigen::Vector3d vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Parse, std::string(what) + " must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

void SceneConfig::validate() const {
  if (views.size() < 2) throw Error(ErrorKind::InvalidArgument, "scene needs at least 2 views");
  const Eigen::Vector3d e = volume.extent();
  if (!(e.minCoeff() > 0.0)) throw Error(ErrorKind::InvalidArgument, "scene volume must have positive extent");
  if (grid_res < 4) throw Error(ErrorKind::InvalidArgument, "grid_res must be >= 4");
}

SceneConfig load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open scene " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "scene " + path.string() + ": " + e.what());
  }
  const std::filesystem::path base = path.parent_path();
  SceneConfig scene;
  try {
    for (const json& v : j.at("views")) {
      ViewConfig view;
      view.image = base / v.at("image").get<std::string>();
      view.mask = base / v.at("mask").get<std::string>();
      const auto k = v.at("K").get<std::vector<double>>();
      const auto r = v.at("R").get<std::vector<double>>();
      if (k.size() != 4 || r.size() != 9) throw Error(ErrorKind::Parse, "K needs 4 and R needs 9 entries");
      Eigen::Matrix3d rot;
      for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r[std::size_t(i)];
      int w = 0;
      int h = 0;
      if (v.contains("width") && v.contains("height")) {
        w = v["width"].get<int>();
        h = v["height"].get<int>();
      } else {
        const ImageF probe = load_pfm(view.image);
        w = probe.width;
        h = probe.height;
      }
      view.camera = Camera(Intrinsics{k[0], k[1], k[2], k[3]}, rot, vec3(v.at("t"), "t"), w, h);
      if (v.contains("reference_rm")) view.reference_rm = base / v["reference_rm"].get<std::string>();
      scene.views.push_back(std::move(view));
    }
    scene.volume.min = vec3(j.at("volume").at("min"), "volume.min");
    scene.volume.max = vec3(j.at("volume").at("max"), "volume.max");
    scene.grid_res = j.at("grid_res").get<int>();
    if (j.contains("reference_mesh")) scene.reference_mesh = base / j["reference_mesh"].get<std::string>();
    if (j.contains("optimizer")) {
      const json& o = j["optimizer"];
      OptimizerConfig cfg;
      if (o.contains("lr")) cfg.lr = o["lr"].get<double>();
      cfg.beta1 = o.value("beta1", cfg.beta1);
      cfg.beta2 = o.value("beta2", cfg.beta2);
      cfg.eps = o.value("eps", cfg.eps);
      cfg.steps_per_round = o.value("steps_per_round", cfg.steps_per_round);
      cfg.rounds = o.value("rounds", cfg.rounds);
      scene.optimizer = cfg;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "scene " + path.string() + ": " + e.what());
  }
  scene.validate();
  return scene;
}

void save_scene(const SceneConfig& scene, const std::filesystem::path& path) {
  json j;
  j["views"] = json::array();
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    return std::filesystem::relative(std::filesystem::absolute(p), base).generic_string();
  };
  for (const ViewConfig& v : scene.views) {
    const Camera& c = v.camera;
    std::vector<double> r(9);
    for (int i = 0; i < 9; ++i) r[std::size_t(i)] = c.rotation()(i / 3, i % 3);
    j["views"].push_back({
        {"image", rel(v.image)},
        {"mask", rel(v.mask)},
        {"K", {c.intrinsics().fx, c.intrinsics().fy, c.intrinsics().cx, c.intrinsics().cy}},
        {"R", r},
        {"t", to_json(c.translation())},
        {"width", c.width()},
        {"height", c.height()},
    });
    if (v.reference_rm) {
      j["views"].back()["reference_rm"] = rel(*v.reference_rm);
    }
  }
  j["volume"] = {{"min", to_json(scene.volume.min)}, {"max", to_json(scene.volume.max)}};
  j["grid_res"] = scene.grid_res;
  if (scene.reference_mesh) {
    j["reference_mesh"] = rel(*scene.reference_mesh);
  }
  if (scene.optimizer) {
    const OptimizerConfig& o = *scene.optimizer;
    json oj = {{"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps},
               {"steps_per_round", o.steps_per_round}, {"rounds", o.rounds}};
    if (o.lr) oj["lr"] = *o.lr;
    j["optimizer"] = oj;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write scene " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<LoadedView> load_views(const SceneConfig& scene) {
  std::vector<LoadedView> out;
  out.reserve(scene.views.size());
  for (const ViewConfig& v : scene.views) {
    LoadedView lv{load_pfm(v.image), load_mask_png(v.mask), v.camera};
    if (!lv.image.is_valid_radiance()) {
      throw Error(ErrorKind::InvalidArgument, v.image.string() + " holds negative or non-finite radiance");
    }
    if (lv.image.width != v.camera.width() || lv.image.height != v.camera.height() ||
        lv.mask.width != lv.image.width || lv.mask.height != lv.image.height) {
      throw Error(ErrorKind::InvalidArgument, "image/mask/camera size mismatch for " + v.image.string());
    }
    out.push_back(std::move(lv));
  }
  return out;
}

}  // namespace rmrecon
