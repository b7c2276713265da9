#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "rmrecon/bvh.hpp"
#include "rmrecon/error.hpp"
#include "rmrecon/gbuffer.hpp"
#include "rmrecon/metrics.hpp"
#include "rmrecon/pfm.hpp"
#include "rmrecon/png_mask.hpp"
#include "rmrecon/reconstruct.hpp"
#include "rmrecon/synth.hpp"

using namespace rmrecon;
using nlohmann::json;

namespace {

int fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return 1;
}

std::vector<Camera> scene_cameras(const SceneConfig& scene) {
  std::vector<Camera> cams;
  for (const auto& v : scene.views) cams.push_back(v.camera);
  return cams;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
  SynthScene s = synthesize(load_synth_spec(spec_path));
  write_synth(s, out_dir);
  std::cout << json{{"scene", (std::filesystem::path(out_dir) / "scene.json").string()},
                    {"views", s.views.size()},
                    {"faces", s.mesh.faces.size()}}
                   .dump()
            << std::endl;
  return 0;
}

int run_reconstruct(const std::string& scene_path, const std::string& out_dir, const ReconOptions& base) {
  const SceneConfig scene = load_scene(scene_path);
  const std::vector<LoadedView> views = load_views(scene);
  ReconOptions opts = base;
  opts.dump_dir = std::filesystem::path(out_dir);
  opts.log = [](const std::string& s) { std::cerr << s << std::endl; };
  if (scene.reference_mesh) opts.reference_mesh = load_obj(*scene.reference_mesh);
  bool all_refs = true;
  for (const auto& v : scene.views) all_refs = all_refs && v.reference_rm.has_value();
  if (all_refs) {
    for (const auto& v : scene.views) opts.reference_rms.push_back(load_reflectance_map(*v.reference_rm));
  }
  const ReconResult res = reconstruct(scene, views, opts);
  write_recon_outputs(res, out_dir);
  std::cout << res.report.to_json().dump(2) << std::endl;
  return 0;
}

int run_eval_geom(const std::string& rec, const std::string& gt, const std::string& scene_path, std::size_t samples,
                  std::uint64_t seed) {
  const SceneConfig scene = load_scene(scene_path);
  const GeometryMetrics m = eval_geometry(load_obj(rec), load_obj(gt), scene_cameras(scene), samples, seed);
  std::cout << json{{"rms1", m.rms1}, {"rms2", m.rms2}, {"recon_samples", m.recon_samples},
                    {"truth_samples", m.truth_samples}}
                   .dump()
            << std::endl;
  return 0;
}

int run_eval_rm(const std::string& est, const std::string& gt) {
  const double v = eval_rm(load_reflectance_map(est), load_reflectance_map(gt));
  std::printf("%.17g\n", v);
  return 0;
}

int run_render(const std::string& scene_path, const std::string& mesh_path, const std::string& out_dir,
               const std::string& rm_dir, bool dump_gbuffer) {
  if (rm_dir.empty() && !dump_gbuffer) {
    throw Error(ErrorKind::InvalidArgument, "render needs --rm-dir and/or --dump-gbuffer");
  }
  const SceneConfig scene = load_scene(scene_path);
  const TriMesh mesh = load_obj(mesh_path);
  const TriangleBvh bvh(mesh);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  char name[64];
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    const Camera& cam = scene.views[v].camera;
    const GBuffer gb = render_gbuffer(mesh, bvh, cam, cam.width(), cam.height());
    if (dump_gbuffer) {
      std::snprintf(name, sizeof name, "normal_%02zu.pfm", v);
      save_normal_map(gb.normal, gb.coverage, gb.width, gb.height, gb.view_rotation, out / name);
      std::snprintf(name, sizeof name, "depth_%02zu.pfm", v);
      save_pfm(gb.depth_image(), out / name);
      std::snprintf(name, sizeof name, "position_%02zu.pfm", v);
      save_pfm(gb.position_image(), out / name);
      std::snprintf(name, sizeof name, "coverage_%02zu.png", v);
      save_mask_png(gb.coverage_mask(), out / name);
    }
    if (!rm_dir.empty()) {
      std::snprintf(name, sizeof name, "rm_%02zu.pfm", v);
      const ReflectanceMap rm = load_reflectance_map(std::filesystem::path(rm_dir) / name);
      const RenderedImage img = render_from_rm(rm, gb.normal, gb.coverage, gb.width, gb.height);
      if (img.out_of_hemisphere) {
        std::cerr << "view " << v << ": " << img.out_of_hemisphere << " pixels outside the visible hemisphere"
                  << std::endl;
      }
      std::snprintf(name, sizeof name, "render_%02zu.pfm", v);
      save_pfm(img.image, out / name);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view reconstruction from reflectance maps and shape from shading"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, scene_path, rec_path, gt_path, mesh_path, rm_dir;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  synth->add_option("spec", spec_path, "Synthesis spec JSON")->required();
  synth->add_option("out", out_dir, "Output directory")->required();

  ReconOptions opts;
  int rounds = 0, steps = 0;
  auto* recon = app.add_subcommand("reconstruct", "Reconstruct a surface from a scene");
  recon->add_option("scene", scene_path, "Scene JSON")->required();
  recon->add_option("out", out_dir, "Output directory")->required();
  recon->add_option("--rounds", rounds, "Outer rounds")->check(CLI::PositiveNumber);
  recon->add_option("--steps", steps, "Optimizer steps per round")->check(CLI::PositiveNumber);
  recon->add_option("--rm-res", opts.rm_resolution, "Reflectance map resolution")->check(CLI::Range(2, 4096));
  recon->add_option("--seed", opts.seed, "Seed for metric sampling");

  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  auto* egeom = app.add_subcommand("eval-geom", "RMS1/RMS2 between two meshes");
  egeom->add_option("recon", rec_path, "Reconstructed OBJ")->required();
  egeom->add_option("truth", gt_path, "Ground-truth OBJ")->required();
  egeom->add_option("scene", scene_path, "Scene JSON with the cameras")->required();
  egeom->add_option("--samples", samples, "Surface samples per mesh");
  egeom->add_option("--seed", seed, "Sampling seed");

  std::string est_path;
  auto* erm = app.add_subcommand("eval-rm", "Log-MAE between two reflectance maps");
  erm->add_option("estimate", est_path, "Estimated map PFM")->required();
  erm->add_option("truth", gt_path, "Ground-truth map PFM")->required();

  bool dump = false;
  auto* render = app.add_subcommand("render", "Render G-buffers or shaded images of a mesh");
  render->add_option("scene", scene_path, "Scene JSON with the cameras")->required();
  render->add_option("mesh", mesh_path, "Mesh OBJ")->required();
  render->add_option("out", out_dir, "Output directory")->required();
  render->add_option("--rm-dir", rm_dir, "Directory with rm_XX.pfm maps to shade with");
  render->add_flag("--dump-gbuffer", dump, "Write normal, depth, position and coverage per view");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return 2;
  }

  try {
    if (*synth) return run_synth(spec_path, out_dir);
    if (*recon) {
      if (rounds > 0) opts.rounds = rounds;
      if (steps > 0) opts.steps = steps;
      return run_reconstruct(scene_path, out_dir, opts);
    }
    if (*egeom) return run_eval_geom(rec_path, gt_path, scene_path, samples, seed);
    if (*erm) return run_eval_rm(est_path, gt_path);
    if (*render) return run_render(scene_path, mesh_path, out_dir, rm_dir, dump);
  } catch (const Error& e) {
    return fail(std::string(to_string(e.kind())), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
