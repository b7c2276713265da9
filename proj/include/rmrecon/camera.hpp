#pragma once

#include <Eigen/Core>

namespace rmrecon {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct Projection {
  Eigen::Vector2d pixel;  // continuous, pixel (i, j) has its center at (i + 0.5, j + 0.5)
  double depth = 0.0;     // camera-frame z
  bool in_front = false;  // false when depth <= 0
};

/// Pinhole camera. Extrinsics map world to camera: x_c = R x_w + t, with the
/// camera looking down +z, x to the right and y down the image.
class Camera {
 public:
  Camera() = default;
  Camera(const Intrinsics& k, const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
         int width, int height);

  const Intrinsics& intrinsics() const { return k_; }
  const Eigen::Matrix3d& rotation() const { return r_; }
  const Eigen::Vector3d& translation() const { return t_; }
  int width() const { return width_; }
  int height() const { return height_; }

  Eigen::Vector3d center() const { return -r_.transpose() * t_; }

  /// Throws Domain when the point coincides with the camera center.
  Projection project(const Eigen::Vector3d& world) const;
  Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth) const;

  /// World-space ray direction through a pixel, scaled so that its
  /// camera-frame z component is 1 (ray parameter == depth).
  Eigen::Vector3d ray_direction(const Eigen::Vector2d& pixel) const;

  /// Rotation from world into the view frame used by normal maps and
  /// reflectance maps: x right, y up, z toward the viewer. Normals of
  /// visible surfaces have positive z in this frame.
  Eigen::Matrix3d view_rotation() const;

 private:
  Intrinsics k_;
  Eigen::Matrix3d r_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t_ = Eigen::Vector3d::Zero();
  int width_ = 0;
  int height_ = 0;
};

/// Camera looking at `target` from `eye`; `up` fixes the roll (image y points
/// along -up).
Camera look_at_camera(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                      const Eigen::Vector3d& up, const Intrinsics& k, int width, int height);

/// Unit vector from the scene center toward the camera center, in world space.
Eigen::Vector3d viewing_direction(const Camera& camera, const Eigen::Vector3d& scene_center);

}  // namespace rmrecon
