#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmrecon/mesh.hpp"
#include "rmrecon/metrics.hpp"
#include "rmrecon/reflectance_map.hpp"
#include "rmrecon/rm_estimation.hpp"
#include "rmrecon/scene.hpp"
#include "rmrecon/sdf_grid.hpp"
#include "rmrecon/sfs.hpp"

namespace rmrecon {

struct ReconOptions {
  std::optional<int> rounds;  // default: scene optimizer or 8
  std::optional<int> steps;   // per round; default: scene optimizer or 100
  std::optional<double> lr;   // default: scene optimizer or 0.02 h
  int rm_resolution = 128;
  int sample_factor = 1;      // marching-cubes lattice refinement per grid cell
  std::uint64_t seed = 0;     // drives metric sampling only; the loop itself is deterministic
  double min_improvement = 1e-4;
  RmEstimateParams rm_params;
  SfsParams sfs_params;
  std::optional<SdfGrid> initial_grid;     // replaces the visual-hull start
  std::vector<ReflectanceMap> fixed_rms;   // one per view: skip RM estimation
  std::optional<TriMesh> reference_mesh;   // for RMS1/RMS2 in the report
  std::vector<ReflectanceMap> reference_rms;
  std::size_t metric_samples = 100000;
  std::optional<std::filesystem::path> dump_dir;  // diagnostics on divergence
  std::function<void(const std::string&)> log;
};

struct StepLoss {
  int round = 0;
  int step = 0;
  double loss = 0.0;  // mean over views of the per-view SfS normal loss
};

struct ReconReport {
  std::vector<double> round_losses;  // loss at the first step of each round
  std::vector<StepLoss> step_losses;
  std::vector<double> rm_log_mae;    // per view, when reference maps are known
  std::optional<GeometryMetrics> hull_metrics;
  std::optional<GeometryMetrics> final_metrics;
  std::vector<GeometryMetrics> round_metrics;  // after each round, with a reference mesh
  int rounds_run = 0;
  bool stopped_early = false;
  std::size_t hull_violations = 0;  // coefficients below the hull bound after any clamp
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  /// Everything except wall-clock time, which lives under "timing".
  nlohmann::json to_json() const;
};

struct ReconResult {
  SdfGrid grid;
  SdfGrid hull;
  TriMesh mesh;
  std::vector<ReflectanceMap> rms;
  std::vector<SfsResult> normals;
  ReconReport report;
};

ReconResult reconstruct(const SceneConfig& scene, const std::vector<LoadedView>& views, const ReconOptions& options);

/// mesh.obj, grid.json/raw, rm_XX.pfm, normals_XX.pfm, report.json, losses.csv.
void write_recon_outputs(const ReconResult& result, const std::filesystem::path& out_dir);

}  // namespace rmrecon
