#include "rmrecon/camera.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <sstream>

#include "rmrecon/error.hpp"

namespace rmrecon {

Camera::Camera(const Intrinsics& k, const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
               int width, int height)
    : k_(k), r_(rotation), t_(translation), width_(width), height_(height) {
  const double ortho = (r_ * r_.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho < 1e-9) || !(r_.determinant() > 0.0)) {
    std::ostringstream os;
    os << "camera rotation is not a proper rotation (orthonormality error " << ortho << ")";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  if (!(k.fx > 0.0) || !(k.fy > 0.0) || width <= 0 || height <= 0) {
    throw Error(ErrorKind::InvalidArgument, "camera needs positive focal lengths and image size");
  }
}

Projection Camera::project(const Eigen::Vector3d& world) const {
  const Eigen::Vector3d pc = r_ * world + t_;
  if (pc.squaredNorm() == 0.0) {
    throw Error(ErrorKind::Domain, "projection of the camera center is undefined");
  }
  Projection p;
  p.depth = pc.z();
  p.in_front = pc.z() > 0.0;
  if (pc.z() != 0.0) {
    p.pixel = {k_.fx * pc.x() / pc.z() + k_.cx, k_.fy * pc.y() / pc.z() + k_.cy};
  } else {
    p.pixel.setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return p;
}

Eigen::Vector3d Camera::unproject(const Eigen::Vector2d& pixel, double depth) const {
  const Eigen::Vector3d pc((pixel.x() - k_.cx) / k_.fx * depth, (pixel.y() - k_.cy) / k_.fy * depth, depth);
  return r_.transpose() * (pc - t_);
}

Eigen::Vector3d Camera::ray_direction(const Eigen::Vector2d& pixel) const {
  const Eigen::Vector3d dc((pixel.x() - k_.cx) / k_.fx, (pixel.y() - k_.cy) / k_.fy, 1.0);
  return r_.transpose() * dc;
}

Eigen::Matrix3d Camera::view_rotation() const {
  Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
  flip(1, 1) = -1.0;
  flip(2, 2) = -1.0;
  return flip * r_;
}

Camera look_at_camera(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                      const Intrinsics& k, int width, int height) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(-up);
  if (x.norm() < 1e-12) throw Error(ErrorKind::InvalidArgument, "look_at: up is parallel to the view axis");
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return Camera(k, r, -r * eye, width, height);
}

Eigen::Vector3d viewing_direction(const Camera& camera, const Eigen::Vector3d& scene_center) {
  const Eigen::Vector3d d = camera.center() - scene_center;
  if (d.norm() == 0.0) throw Error(ErrorKind::Domain, "camera sits at the scene center");
  return d.normalized();
}

}  // namespace rmrecon
