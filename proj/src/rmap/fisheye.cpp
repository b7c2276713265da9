#include "rmrecon/fisheye.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rmrecon/error.hpp"

namespace rmrecon {

Eigen::Vector2d fisheye_project(const Eigen::Vector3d& n) {
  if (!(n.z() > 0.0)) {
    std::ostringstream os;
    os << "normal (" << n.x() << ", " << n.y() << ", " << n.z() << ") is outside the visible hemisphere";
    throw Error(ErrorKind::OutOfHemisphere, os.str());
  }
  const double rho = std::hypot(n.x(), n.y());
  if (rho == 0.0) return {0.5, 0.5};
  const double r = std::atan2(rho, n.z()) / (0.5 * std::numbers::pi);
  return {0.5 + 0.5 * r * n.x() / rho, 0.5 + 0.5 * r * n.y() / rho};
}

bool fisheye_in_disc(const Eigen::Vector2d& uv) {
  const double dx = 2.0 * uv.x() - 1.0, dy = 2.0 * uv.y() - 1.0;
  return dx * dx + dy * dy < 1.0;
}

Eigen::Vector3d fisheye_unproject(const Eigen::Vector2d& uv) {
  if (!fisheye_in_disc(uv)) {
    std::ostringstream os;
    os << "fisheye coordinate (" << uv.x() << ", " << uv.y() << ") is outside the valid disc";
    throw Error(ErrorKind::InvalidPixel, os.str());
  }
  const double dx = 2.0 * uv.x() - 1.0, dy = 2.0 * uv.y() - 1.0;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) return {0.0, 0.0, 1.0};
  const double theta = r * 0.5 * std::numbers::pi;
  const double s = std::sin(theta) / r;
  return {s * dx, s * dy, std::cos(theta)};
}

}  // namespace rmrecon
