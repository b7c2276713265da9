#include "rmrecon/reflectance_map.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>

#include "rmrecon/error.hpp"
#include "rmrecon/fisheye.hpp"
#include "rmrecon/pfm.hpp"

namespace rmrecon {
namespace {

std::vector<std::uint8_t> disc_mask(int m) {
  std::vector<std::uint8_t> mask(std::size_t(m) * std::size_t(m));
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) mask[std::size_t(r) * std::size_t(m) + std::size_t(c)] = fisheye_pixel_valid(c, r, m);
  }
  return mask;
}

}  // namespace

ReflectanceMap::ReflectanceMap(int resolution, const Eigen::Matrix3d& view_rotation)
    : ReflectanceMap(ImageF(resolution, resolution, 3), view_rotation) {}

ReflectanceMap::ReflectanceMap(ImageF data, const Eigen::Matrix3d& view_rotation)
    : data_(std::move(data)), view_rotation_(view_rotation) {
  if (data_.width != data_.height || data_.channels != 3 || data_.width < 2) {
    throw Error(ErrorKind::InvalidArgument, "reflectance map must be a square 3-channel raster");
  }
  if (!data_.is_valid_radiance()) {
    throw Error(ErrorKind::InvalidArgument, "reflectance map holds negative or non-finite values");
  }
  valid_ = disc_mask(data_.width);
  for (std::size_t i = 0; i < valid_.size(); ++i) {
    if (!valid_[i]) {
      for (int c = 0; c < 3; ++c) data_.data[3 * i + std::size_t(c)] = 0.0f;
    }
  }
}

std::size_t ReflectanceMap::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid_) n += v;
  return n;
}

Eigen::Vector3d ReflectanceMap::pixel(int col, int row) const {
  return {data_.at(col, row, 0), data_.at(col, row, 1), data_.at(col, row, 2)};
}

void ReflectanceMap::set_pixel(int col, int row, const Eigen::Vector3d& value) {
  for (int c = 0; c < 3; ++c) data_.at(col, row, c) = float(value[c]);
}

Eigen::Vector3d ReflectanceMap::lookup(const Eigen::Vector3d& n) const {
  const Eigen::Vector2d uv = fisheye_project(n);
  const int m = resolution();
  const double x = uv.x() * m - 0.5;
  const double y = uv.y() * m - 0.5;
  const int x0 = int(std::floor(x));
  const int y0 = int(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  double wsum = 0.0;
  for (int dy = 0; dy < 2; ++dy) {
    const int yy = y0 + dy;
    if (yy < 0 || yy >= m) continue;
    const double wy = dy ? fy : 1.0 - fy;
    for (int dx = 0; dx < 2; ++dx) {
      const int xx = x0 + dx;
      if (xx < 0 || xx >= m || !valid(xx, yy)) continue;
      const double w = wy * (dx ? fx : 1.0 - fx);
      if (w == 0.0) continue;
      acc += w * pixel(xx, yy);
      wsum += w;
    }
  }
  if (wsum > 0.0) return acc / wsum;
  // Near the rim every bilinear neighbour can fall outside the disc; use the
  // nearest valid pixel instead.
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
  for (int yy = std::max(0, y0 - 2); yy <= std::min(m - 1, y0 + 3); ++yy) {
    for (int xx = std::max(0, x0 - 2); xx <= std::min(m - 1, x0 + 3); ++xx) {
      if (!valid(xx, yy)) continue;
      const double d = (xx - x) * (xx - x) + (yy - y) * (yy - y);
      if (d < best) {
        best = d;
        value = pixel(xx, yy);
      }
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorKind::InvalidPixel, "no valid reflectance-map pixel near lookup");
  return value;
}

ReflectanceMap rm_from_scene(const EnvMap& env, const Brdf& brdf, const Eigen::Vector3d& omega_o,
                             const Eigen::Matrix3d& view_rotation, int resolution, int n_samples) {
  if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "n_samples must be >= 1");
  validate_brdf(brdf);
  const std::vector<Eigen::Vector3d> dirs = halton_sphere(n_samples);
  const std::size_t ns = dirs.size();
  std::vector<double> dx(ns), dy(ns), dz(ns), lr(ns), lg(ns), lb(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    dx[k] = dirs[k].x();
    dy[k] = dirs[k].y();
    dz[k] = dirs[k].z();
    const Eigen::Vector3d l = env.radiance(dirs[k]);
    lr[k] = l.x();
    lg[k] = l.y();
    lb[k] = l.z();
  }
  const Eigen::Vector3d wo = omega_o.normalized();
  const bool lambertian = std::holds_alternative<Lambertian>(brdf);
  ReflectanceMap rm(resolution, view_rotation);
  const Eigen::Matrix3d to_world = view_rotation.transpose();
  const int m = resolution;
#pragma omp parallel for schedule(dynamic, 1)
  for (int row = 0; row < m; ++row) {
    for (int col = 0; col < m; ++col) {
      if (!rm.valid(col, row)) continue;
      const Eigen::Vector3d n = to_world * fisheye_unproject(fisheye_pixel_center(col, row, m));
      const double nx = n.x(), ny = n.y(), nz = n.z();
      double wsum = 0.0;
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      if (lambertian) {
        double ar = 0.0, ag = 0.0, ab = 0.0;
        for (std::size_t k = 0; k < ns; ++k) {
          const double c = std::max(0.0, dx[k] * nx + dy[k] * ny + dz[k] * nz);
          wsum += c;
          ar += c * lr[k];
          ag += c * lg[k];
          ab += c * lb[k];
        }
        acc = std::get<Lambertian>(brdf).albedo.cwiseProduct(Eigen::Vector3d(ar, ag, ab)) / std::numbers::pi;
      } else {
        for (std::size_t k = 0; k < ns; ++k) {
          const double c = dx[k] * nx + dy[k] * ny + dz[k] * nz;
          if (c <= 0.0) continue;
          wsum += c;
          const Eigen::Vector3d f = eval_brdf(brdf, dirs[k], wo, n);
          acc += c * f.cwiseProduct(Eigen::Vector3d(lr[k], lg[k], lb[k]));
        }
      }
      // sum_k c_k * (pi / sum_j c_j) integrates max(w.n, 0) to exactly pi.
      const Eigen::Vector3d value = wsum > 0.0 ? Eigen::Vector3d(acc * (std::numbers::pi / wsum))
                                               : Eigen::Vector3d::Zero();
      rm.set_pixel(col, row, value);
    }
  }
  return rm;
}

RenderedImage render_from_rm(const ReflectanceMap& rm, std::span<const Eigen::Vector3d> normals,
                             std::span<const std::uint8_t> coverage, int width, int height) {
  const std::size_t n = std::size_t(width) * std::size_t(height);
  if (normals.size() != n || coverage.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "render_from_rm: normal map and coverage must match the image size");
  }
  RenderedImage out{ImageF(width, height, 3), 0};
  std::size_t bad = 0;
#pragma omp parallel for schedule(static) reduction(+ : bad)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
    if (!coverage[std::size_t(i)]) continue;
    const Eigen::Vector3d& nrm = normals[std::size_t(i)];
    if (!(nrm.z() > 0.0)) {
      ++bad;
      continue;
    }
    const Eigen::Vector3d v = rm.lookup(nrm);
    for (int c = 0; c < 3; ++c) out.image.data[3 * std::size_t(i) + std::size_t(c)] = float(v[c]);
  }
  out.out_of_hemisphere = bad;
  return out;
}

void save_reflectance_map(const ReflectanceMap& rm, const std::filesystem::path& pfm_path) {
  save_pfm(rm.data(), pfm_path);
  std::filesystem::path sidecar = pfm_path;
  sidecar.replace_extension(".json");
  std::vector<double> r(9);
  for (int i = 0; i < 9; ++i) r[std::size_t(i)] = rm.view_rotation()(i / 3, i % 3);
  nlohmann::json j = {{"resolution", rm.resolution()}, {"view_R", r}, {"convention", kFisheyeConvention}};
  std::ofstream out(sidecar);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + sidecar.string());
  out << j.dump(2) << '\n';
}

ReflectanceMap load_reflectance_map(const std::filesystem::path& pfm_path) {
  ImageF data = load_pfm(pfm_path);
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  std::filesystem::path sidecar = pfm_path;
  sidecar.replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    nlohmann::json j;
    try {
      in >> j;
      if (j.value("convention", std::string(kFisheyeConvention)) != kFisheyeConvention) {
        throw Error(ErrorKind::Parse, sidecar.string() + ": unsupported projection convention");
      }
      const auto r = j.at("view_R").get<std::vector<double>>();
      if (r.size() != 9) throw Error(ErrorKind::Parse, sidecar.string() + ": view_R needs 9 entries");
      for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r[std::size_t(i)];
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, sidecar.string() + ": " + e.what());
    }
  }
  return ReflectanceMap(std::move(data), rot);
}

}  // namespace rmrecon
