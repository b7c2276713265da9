#include "rmrecon/envmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rmrecon/error.hpp"

namespace rmrecon {

EnvMap::EnvMap(ImageF pixels) : pixels_(std::move(pixels)) {
  if (pixels_.channels != 3 || pixels_.width < 1 || pixels_.height < 1) {
    throw Error(ErrorKind::InvalidArgument, "environment map must be a nonempty 3-channel image");
  }
  if (!pixels_.is_valid_radiance()) {
    throw Error(ErrorKind::InvalidArgument, "environment map holds negative or non-finite radiance");
  }
}

EnvMap EnvMap::constant(const Eigen::Vector3d& radiance, int width, int height) {
  ImageF img(width, height, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) img.data[3 * i + std::size_t(c)] = float(radiance[c]);
  }
  return EnvMap(std::move(img));
}

Eigen::Vector3d EnvMap::radiance(const Eigen::Vector3d& d) const {
  const double pi = std::numbers::pi;
  const double phi = std::atan2(d.y(), d.x());
  const double theta = std::acos(std::clamp(d.z() / d.norm(), -1.0, 1.0));
  const int w = pixels_.width, h = pixels_.height;
  const double x = (phi + pi) / (2.0 * pi) * w - 0.5;
  const double y = theta / pi * h - 0.5;
  const int x0 = int(std::floor(x));
  const int y0 = int(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int dy = 0; dy < 2; ++dy) {
    const int yy = std::clamp(y0 + dy, 0, h - 1);
    const double wy = dy ? fy : 1.0 - fy;
    for (int dx = 0; dx < 2; ++dx) {
      const int xx = ((x0 + dx) % w + w) % w;
      const double wgt = wy * (dx ? fx : 1.0 - fx);
      for (int c = 0; c < 3; ++c) out[c] += wgt * pixels_.at(xx, yy, c);
    }
  }
  return out;
}

EnvMap make_lobe_envmap(const Eigen::Vector3d& ambient, const std::vector<EnvLobe>& lobes, int width, int height) {
  const double pi = std::numbers::pi;
  ImageF img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    const double theta = (y + 0.5) / height * pi;
    for (int x = 0; x < width; ++x) {
      const double phi = (x + 0.5) / width * 2.0 * pi - pi;
      const Eigen::Vector3d w(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
      Eigen::Vector3d l = ambient;
      for (const EnvLobe& lobe : lobes) {
        l += lobe.intensity * std::exp(lobe.sharpness * (w.dot(lobe.direction.normalized()) - 1.0));
      }
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = float(l[c]);
    }
  }
  return EnvMap(std::move(img));
}

void validate_brdf(const Brdf& brdf) {
  std::visit(
      [](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, Lambertian>) {
          if (b.albedo.minCoeff() < 0.0 || b.albedo.maxCoeff() > 1.0) {
            throw Error(ErrorKind::InvalidArgument, "Lambertian albedo must lie in [0, 1]");
          }
        } else {
          if (b.diffuse.minCoeff() < 0.0 || b.diffuse.maxCoeff() > 1.0 || b.specular < 0.0 || b.exponent < 0.0) {
            throw Error(ErrorKind::InvalidArgument, "Blinn-Phong parameters must be nonnegative, diffuse <= 1");
          }
        }
      },
      brdf);
}

Eigen::Vector3d eval_brdf(const Brdf& brdf, const Eigen::Vector3d& wi, const Eigen::Vector3d& wo,
                          const Eigen::Vector3d& n) {
  const double inv_pi = 1.0 / std::numbers::pi;
  if (const auto* l = std::get_if<Lambertian>(&brdf)) return l->albedo * inv_pi;
  const auto& bp = std::get<BlinnPhong>(brdf);
  Eigen::Vector3d out = bp.diffuse * inv_pi;
  const Eigen::Vector3d half = wi + wo;
  const double len = half.norm();
  if (len > 0.0) {
    const double nh = std::max(0.0, n.dot(half) / len);
    out.array() += bp.specular * (bp.exponent + 8.0) / (8.0 * std::numbers::pi) * std::pow(nh, bp.exponent);
  }
  return out;
}

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv_base = 1.0 / double(base);
  double f = inv_base;
  double r = 0.0;
  while (i > 0) {
    r += f * double(i % base);
    i /= base;
    f *= inv_base;
  }
  return r;
}

}  // namespace

std::vector<Eigen::Vector3d> halton_sphere(int count) {
  std::vector<Eigen::Vector3d> dirs(std::size_t(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    const double u = radical_inverse(std::uint64_t(k) + 1, 2);
    const double v = radical_inverse(std::uint64_t(k) + 1, 3);
    const double z = 1.0 - 2.0 * u;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * std::numbers::pi * v;
    dirs[std::size_t(k)] = {r * std::cos(phi), r * std::sin(phi), z};
  }
  return dirs;
}

}  // namespace rmrecon
