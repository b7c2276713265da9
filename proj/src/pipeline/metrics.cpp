#include "rmrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rmrecon/bvh.hpp"
#include "rmrecon/error.hpp"

namespace rmrecon {

SurfaceSamples sample_surface(const TriMesh& mesh, std::size_t count, std::uint64_t seed) {
  std::vector<double> cdf(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cdf[f] = total;
  }
  SurfaceSamples out;
  if (!(total > 0.0)) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  out.points.reserve(count);
  out.faces.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = uni(rng) * total;
    std::size_t f = std::size_t(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
    f = std::min(f, cdf.size() - 1);
    double a = uni(rng), b = uni(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const auto& tri = mesh.faces[f];
    const Eigen::Vector3d& v0 = mesh.vertices[std::size_t(tri[0])];
    const Eigen::Vector3d& v1 = mesh.vertices[std::size_t(tri[1])];
    const Eigen::Vector3d& v2 = mesh.vertices[std::size_t(tri[2])];
    out.points.push_back(v0 + a * (v1 - v0) + b * (v2 - v0));
    out.faces.push_back(int(f));
  }
  return out;
}

std::vector<std::uint8_t> visible_samples(const TriMesh& mesh, const TriangleBvh& bvh, const SurfaceSamples& samples,
                                          std::span<const Camera> cameras) {
  std::vector<std::uint8_t> vis(samples.points.size(), 0);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(samples.points.size()); ++i) {
    const Eigen::Vector3d& p = samples.points[std::size_t(i)];
    const int face = samples.faces[std::size_t(i)];
    const Eigen::Vector3d n = mesh.face_normal(std::size_t(face));
    for (const Camera& cam : cameras) {
      const Eigen::Vector3d c = cam.center();
      const Eigen::Vector3d d = p - c;
      const double dist = d.norm();
      if (!(dist > 0.0) || n.dot(d) >= 0.0) continue;
      const Projection pr = cam.project(p);
      if (!pr.in_front || pr.pixel.x() < 0.0 || pr.pixel.y() < 0.0 || pr.pixel.x() >= cam.width() ||
          pr.pixel.y() >= cam.height()) {
        continue;
      }
      const Eigen::Vector3d dir = d / dist;
      const auto hit = bvh.intersect(c, dir, 0.0, dist * (1.0 + 1e-9) + 1e-12, true);
      if (!hit || hit->face == face || hit->t >= dist * (1.0 - 1e-7)) {
        vis[std::size_t(i)] = 1;
        break;
      }
    }
  }
  return vis;
}

namespace {

// Squared distances from the visible samples of `from` to the surface `to`.
double rms_to(const SurfaceSamples& from, const std::vector<std::uint8_t>& vis, const TriangleBvh& to,
              std::size_t* used) {
  std::vector<double> d2(from.points.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(from.points.size()); ++i) {
    if (vis[std::size_t(i)]) d2[std::size_t(i)] = to.closest_point(from.points[std::size_t(i)]).distance_squared;
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < d2.size(); ++i) {
    if (!vis[i]) continue;
    sum += d2[i];
    ++n;
  }
  *used = n;
  return n ? std::sqrt(sum / double(n)) : 0.0;
}

}  // namespace

GeometryMetrics eval_geometry(const TriMesh& recon, const TriMesh& truth, std::span<const Camera> cameras,
                              std::size_t samples, std::uint64_t seed) {
  if (recon.empty() || truth.empty()) throw Error(ErrorKind::InvalidArgument, "eval_geometry needs two nonempty meshes");
  const TriangleBvh recon_bvh(recon);
  const TriangleBvh truth_bvh(truth);
  const SurfaceSamples rs = sample_surface(recon, samples, seed);
  const SurfaceSamples ts = sample_surface(truth, samples, seed);
  const auto rvis = visible_samples(recon, recon_bvh, rs, cameras);
  const auto tvis = visible_samples(truth, truth_bvh, ts, cameras);
  GeometryMetrics m;
  m.diagonal = truth.bounds().diagonal();
  const double r1 = rms_to(rs, rvis, truth_bvh, &m.recon_samples);
  const double r2 = rms_to(ts, tvis, recon_bvh, &m.truth_samples);
  if (m.recon_samples == 0 || m.truth_samples == 0) {
    throw Error(ErrorKind::EmptyObservation, "no surface sample is visible from the cameras");
  }
  m.rms1 = 100.0 * r1 / m.diagonal;
  m.rms2 = 100.0 * r2 / m.diagonal;
  return m;
}

double eval_rm(const ReflectanceMap& estimate, const ReflectanceMap& truth) {
  const int m = estimate.resolution();
  if (truth.resolution() != m) throw Error(ErrorKind::InvalidArgument, "eval_rm: resolutions differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < m; ++y) {
    for (int x = 0; x < m; ++x) {
      if (!estimate.valid(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double a = std::max<double>(estimate.data().at(x, y, c), kDefaultLogFloor);
        const double b = std::max<double>(truth.data().at(x, y, c), kDefaultLogFloor);
        sum += std::abs(std::log(a) - std::log(b));
        ++n;
      }
    }
  }
  return n ? sum / double(n) : 0.0;
}

}  // namespace rmrecon
