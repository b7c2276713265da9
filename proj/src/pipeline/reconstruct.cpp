#include "rmrecon/reconstruct.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rmrecon/bvh.hpp"
#include "rmrecon/error.hpp"
#include "rmrecon/gbuffer.hpp"
#include "rmrecon/levelset.hpp"
#include "rmrecon/marching_cubes.hpp"
#include "rmrecon/synth.hpp"
#include "rmrecon/visual_hull.hpp"

namespace rmrecon {

using nlohmann::json;

namespace {

json metrics_json(const GeometryMetrics& m) {
  return {{"rms1", m.rms1}, {"rms2", m.rms2}, {"recon_samples", m.recon_samples},
          {"truth_samples", m.truth_samples}, {"diagonal", m.diagonal}};
}

void write_losses_csv(const std::vector<StepLoss>& losses, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "round,step,loss\n";
  char line[96];
  for (const StepLoss& l : losses) {
    std::snprintf(line, sizeof line, "%d,%d,%.17g\n", l.round, l.step, l.loss);
    out << line;
  }
}

std::size_t count_hull_violations(const SdfGrid& grid, const SdfGrid& hull) {
  std::size_t n = 0;
  const auto a = grid.coeffs();
  const auto b = hull.coeffs();
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] < b[i];
  return n;
}

}  // namespace

json ReconReport::to_json() const {
  json j;
  j["round_losses"] = round_losses;
  j["rm_log_mae"] = rm_log_mae;
  if (hull_metrics) j["hull"] = metrics_json(*hull_metrics);
  if (final_metrics) {
    j["final"] = metrics_json(*final_metrics);
    j["rms1"] = final_metrics->rms1;
    j["rms2"] = final_metrics->rms2;
  }
  if (!round_metrics.empty()) {
    json per_round = json::array();
    for (const GeometryMetrics& m : round_metrics) per_round.push_back(metrics_json(m));
    j["round_metrics"] = per_round;
  }
  j["rounds_run"] = rounds_run;
  j["stopped_early"] = stopped_early;
  j["hull_violations"] = hull_violations;
  j["seed"] = seed;
  j["steps_recorded"] = step_losses.size();
  j["timing"] = {{"wall_seconds", wall_seconds}};
  return j;
}

ReconResult reconstruct(const SceneConfig& scene, const std::vector<LoadedView>& views, const ReconOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  scene.validate();
  if (views.size() != scene.views.size()) throw Error(ErrorKind::InvalidArgument, "view count does not match the scene");
  for (const LoadedView& v : views) {
    if (v.mask.count() == 0) throw Error(ErrorKind::InvalidArgument, "every view needs a nonempty mask");
  }
  if (!options.fixed_rms.empty() && options.fixed_rms.size() != views.size()) {
    throw Error(ErrorKind::InvalidArgument, "fixed reflectance maps must cover every view");
  }
  auto log = [&](const std::string& s) {
    if (options.log) options.log(s);
  };
  const OptimizerConfig opt = scene.optimizer.value_or(OptimizerConfig{});
  const int rounds = options.rounds.value_or(opt.rounds);
  const int steps = options.steps.value_or(opt.steps_per_round);
  if (rounds < 1 || steps < 1) throw Error(ErrorKind::InvalidArgument, "rounds and steps must be >= 1");

  ReconResult res;
  res.report.seed = options.seed;
  {
    std::vector<SilhouetteView> sil;
    for (const LoadedView& v : views) sil.push_back({v.camera, v.mask});
    res.hull = visual_hull(make_grid_layout(scene.volume, scene.grid_res), sil);
  }
  res.grid = options.initial_grid.value_or(res.hull);
  if (!res.grid.same_layout(res.hull)) throw Error(ErrorKind::InvalidArgument, "initial grid layout differs from the scene grid");
  hull_clamp(res.grid, res.hull);

  std::vector<Camera> cameras;
  for (const LoadedView& v : views) cameras.push_back(v.camera);
  if (options.reference_mesh) {
    res.report.hull_metrics = eval_geometry(marching_cubes(res.hull, options.sample_factor), *options.reference_mesh,
                                            cameras, options.metric_samples, options.seed);
  }

  const double lr = options.lr ? *options.lr : (opt.lr ? *opt.lr : 0.02 * res.grid.spacing());
  AdamState adam(res.grid.size(), lr, opt.beta1, opt.beta2, opt.eps);
  const Eigen::Vector3d center = scene.volume.center();
  const std::size_t nv = views.size();

  auto dump_and_throw = [&](const std::string& what) {
    if (options.dump_dir) {
      std::filesystem::create_directories(*options.dump_dir);
      save_grid(res.grid, *options.dump_dir / "diverged_grid.json");
      write_losses_csv(res.report.step_losses, *options.dump_dir / "losses.csv");
    }
    throw Error(ErrorKind::Divergence, what);
  };

  res.mesh = marching_cubes(res.grid, options.sample_factor);
  res.rms.resize(nv);
  res.normals.resize(nv);
  double previous = std::numeric_limits<double>::infinity();
  for (int round = 0; round < rounds; ++round) {
    if (res.mesh.empty()) dump_and_throw("surface vanished before round " + std::to_string(round));
    const auto round_start = std::chrono::steady_clock::now();
    {
      const TriangleBvh bvh(res.mesh);
      for (std::size_t v = 0; v < nv; ++v) {
        const LoadedView& view = views[v];
        const GBuffer gb = render_gbuffer(res.mesh, bvh, view.camera, view.image.width, view.image.height);
        std::vector<std::uint8_t> cov(gb.pixel_count());
        for (std::size_t i = 0; i < cov.size(); ++i) cov[i] = gb.coverage[i] && view.mask.data[i];
        if (options.fixed_rms.empty()) {
          const Eigen::Vector3d omega_o = gb.view_rotation * viewing_direction(view.camera, center);
          RmEstimateParams p = options.rm_params;
          p.resolution = options.rm_resolution;
          res.rms[v] = estimate_rm(view.image, gb.normal, cov, omega_o, gb.view_rotation, p).rm;
        } else {
          res.rms[v] = options.fixed_rms[v];
        }
        res.normals[v] = estimate_normals(view.image, view.mask.data, res.rms[v], options.sfs_params);
      }
    }

    const auto steps_start = std::chrono::steady_clock::now();
    double round_loss = 0.0;
    for (int step = 0; step < steps; ++step) {
      if (step > 0) res.mesh = marching_cubes(res.grid, options.sample_factor);
      if (res.mesh.empty()) dump_and_throw("surface vanished at round " + std::to_string(round));
      const TriangleBvh bvh(res.mesh);
      std::vector<Eigen::Vector3d> grads(res.mesh.vertices.size(), Eigen::Vector3d::Zero());
      double loss_sum = 0.0;
      int used = 0;
      for (std::size_t v = 0; v < nv; ++v) {
        const LoadedView& view = views[v];
        const GBuffer gb = render_gbuffer(res.mesh, bvh, view.camera, view.image.width, view.image.height);
        SfsLossResult lr_v;
        try {
          lr_v = sfs_loss_and_vertex_grads(gb, res.mesh, res.normals[v].normals, res.normals[v].valid);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::LossUndefined) throw;
          continue;
        }
        loss_sum += lr_v.loss;
        ++used;
        for (std::size_t j = 0; j < grads.size(); ++j) grads[j] += lr_v.vertex_grads[j];
      }
      if (used == 0) dump_and_throw("no view has a valid SfS pixel at round " + std::to_string(round));
      const double loss = loss_sum / used;
      if (!std::isfinite(loss)) dump_and_throw("non-finite SfS loss at round " + std::to_string(round));
      res.report.step_losses.push_back({round, step, loss});
      if (step == 0) round_loss = loss;
      const std::vector<double> g = chain_to_theta(res.mesh, grads, res.grid);
      try {
        adam_step(res.grid.coeffs(), g, adam);
      } catch (const Error& e) {
        dump_and_throw(e.what());
      }
      hull_clamp(res.grid, res.hull);
    }
    res.mesh = marching_cubes(res.grid, options.sample_factor);
    res.report.hull_violations += count_hull_violations(res.grid, res.hull);
    res.report.round_losses.push_back(round_loss);
    res.report.rounds_run = round + 1;
    const auto round_end = std::chrono::steady_clock::now();
    char msg[160];
    std::snprintf(msg, sizeof msg, "round %d: SfS loss %.6f, %zu faces, estimation %.1fs, %d steps %.1fs", round,
                  round_loss, res.mesh.faces.size(),
                  std::chrono::duration<double>(steps_start - round_start).count(), steps,
                  std::chrono::duration<double>(round_end - steps_start).count());
    std::string line = msg;
    if (options.reference_mesh && !res.mesh.empty()) {
      res.report.round_metrics.push_back(
          eval_geometry(res.mesh, *options.reference_mesh, cameras, options.metric_samples, options.seed));
      std::snprintf(msg, sizeof msg, ", RMS1 %.4f%%", res.report.round_metrics.back().rms1);
      line += msg;
    }
    log(line);
    if (previous - round_loss < options.min_improvement) {
      res.report.stopped_early = round + 1 < rounds;
      break;
    }
    previous = round_loss;
  }

  if (!options.reference_rms.empty()) {
    for (std::size_t v = 0; v < nv && v < options.reference_rms.size(); ++v) {
      res.report.rm_log_mae.push_back(eval_rm(res.rms[v], options.reference_rms[v]));
    }
  }
  if (!res.report.round_metrics.empty()) res.report.final_metrics = res.report.round_metrics.back();
  res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

void write_recon_outputs(const ReconResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_obj(result.mesh, out_dir / "mesh.obj");
  save_grid(result.grid, out_dir / "grid.json");
  char name[64];
  for (std::size_t v = 0; v < result.rms.size(); ++v) {
    std::snprintf(name, sizeof name, "rm_%02zu.pfm", v);
    save_reflectance_map(result.rms[v], out_dir / name);
    const SfsResult& n = result.normals[v];
    if (!n.normals.empty()) {
      std::snprintf(name, sizeof name, "normals_%02zu.pfm", v);
      save_normal_map(n.normals, n.valid, n.mixtures.width, n.mixtures.height, result.rms[v].view_rotation(),
                      out_dir / name);
    }
  }
  std::ofstream out(out_dir / "report.json");
  if (!out) throw Error(ErrorKind::Io, "cannot write report.json");
  out << result.report.to_json().dump(2) << '\n';
  write_losses_csv(result.report.step_losses, out_dir / "losses.csv");
}

}  // namespace rmrecon
