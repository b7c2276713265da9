#include "rmrecon/gbuffer.hpp"

#include <Eigen/Geometry>

#include "rmrecon/bvh.hpp"
#include "rmrecon/error.hpp"

namespace rmrecon {

GBuffer::GBuffer(int w, int h) : width(w), height(h) {
  const std::size_t n = std::size_t(w) * std::size_t(h);
  coverage.assign(n, 0);
  face.assign(n, -1);
  barycentric.assign(n, Eigen::Vector3d::Zero());
  normal.assign(n, Eigen::Vector3d::Zero());
  position.assign(n, Eigen::Vector3d::Zero());
  depth.assign(n, 0.0);
  view_dir.assign(n, Eigen::Vector3d::Zero());
}

std::size_t GBuffer::covered_count() const {
  std::size_t c = 0;
  for (auto v : coverage) c += v != 0;
  return c;
}

MaskImage GBuffer::coverage_mask() const {
  MaskImage m(width, height);
  m.data = coverage;
  return m;
}

namespace {

ImageF vector_image(const GBuffer& g, const std::vector<Eigen::Vector3d>& src) {
  ImageF img(g.width, g.height, 3);
  for (std::size_t i = 0; i < g.pixel_count(); ++i) {
    if (!g.coverage[i]) continue;
    for (int c = 0; c < 3; ++c) img.data[3 * i + std::size_t(c)] = float(src[i][c]);
  }
  return img;
}

}  // namespace

ImageF GBuffer::normal_image() const { return vector_image(*this, normal); }
ImageF GBuffer::position_image() const { return vector_image(*this, position); }

ImageF GBuffer::depth_image() const {
  ImageF img(width, height, 1);
  for (std::size_t i = 0; i < pixel_count(); ++i) img.data[i] = coverage[i] ? float(depth[i]) : 0.0f;
  return img;
}

GBuffer render_gbuffer(const TriMesh& mesh, const Camera& camera, int width, int height) {
  const TriangleBvh bvh(mesh);
  return render_gbuffer(mesh, bvh, camera, width, height);
}

GBuffer render_gbuffer(const TriMesh& mesh, const TriangleBvh& bvh, const Camera& camera, int width, int height) {
  GBuffer g(width, height);
  g.view_rotation = camera.view_rotation();
  if (mesh.empty()) return g;
  // Pixel coordinates are rescaled when the buffer size differs from the camera's.
  const double sx = double(camera.width()) / width;
  const double sy = double(camera.height()) / height;
  const Eigen::Vector3d origin = camera.center();
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector2d pix((x + 0.5) * sx, (y + 0.5) * sy);
      const Eigen::Vector3d dir = camera.ray_direction(pix);
      const auto hit = bvh.intersect(origin, dir, 0.0, std::numeric_limits<double>::infinity(), true);
      if (!hit) continue;
      const std::size_t i = std::size_t(y) * std::size_t(width) + std::size_t(x);
      g.coverage[i] = 1;
      g.face[i] = hit->face;
      g.barycentric[i] = {1.0 - hit->b1 - hit->b2, hit->b1, hit->b2};
      g.normal[i] = g.view_rotation * mesh.face_normal(std::size_t(hit->face));
      g.position[i] = origin + hit->t * dir;
      g.depth[i] = hit->t;
      g.view_dir[i] = g.view_rotation * (origin - g.position[i]).normalized();
    }
  }
  return g;
}

void accumulate_face_normal_gradient(const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
                                     const Eigen::Vector3d& v2, const Eigen::Vector3d& dL_dn,
                                     Eigen::Vector3d& g0, Eigen::Vector3d& g1, Eigen::Vector3d& g2) {
  const Eigen::Vector3d e1 = v1 - v0;
  const Eigen::Vector3d e2 = v2 - v0;
  const Eigen::Vector3d c = e1.cross(e2);
  const double len = c.norm();
  if (len == 0.0) return;
  const Eigen::Vector3d n = c / len;
  // d(c/|c|)/dc = (I - n n^T) / |c|
  const Eigen::Vector3d dL_dc = (dL_dn - n * n.dot(dL_dn)) / len;
  const Eigen::Vector3d d_e1 = e2.cross(dL_dc);
  const Eigen::Vector3d d_e2 = dL_dc.cross(e1);
  g1 += d_e1;
  g2 += d_e2;
  g0 -= d_e1 + d_e2;
}

std::vector<Eigen::Vector3d> backward_normals(const GBuffer& gbuffer, const TriMesh& mesh,
                                              std::span<const Eigen::Vector3d> dL_dn) {
  if (dL_dn.size() != gbuffer.pixel_count()) {
    throw Error(ErrorKind::InvalidArgument, "dL/dn must have one entry per pixel");
  }
  // Sum pixel gradients per face (fixed pixel order), then push each face's
  // total through its normal Jacobian.
  std::vector<Eigen::Vector3d> per_face(mesh.faces.size(), Eigen::Vector3d::Zero());
  std::vector<std::uint8_t> touched(mesh.faces.size(), 0);
  const Eigen::Matrix3d to_world = gbuffer.view_rotation.transpose();
  for (std::size_t i = 0; i < gbuffer.pixel_count(); ++i) {
    if (!gbuffer.coverage[i]) {
      if (dL_dn[i].squaredNorm() != 0.0) {
        throw Error(ErrorKind::Consistency, "gradient given on uncovered pixel " + std::to_string(i));
      }
      continue;
    }
    const int f = gbuffer.face[i];
    if (f < 0 || std::size_t(f) >= mesh.faces.size()) {
      throw Error(ErrorKind::Consistency, "pixel " + std::to_string(i) + " references a missing face");
    }
    per_face[std::size_t(f)] += dL_dn[i];
    touched[std::size_t(f)] = 1;
  }
  std::vector<Eigen::Vector3d> grads(mesh.vertices.size(), Eigen::Vector3d::Zero());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (!touched[f]) continue;
    const auto& t = mesh.faces[f];
    accumulate_face_normal_gradient(mesh.vertices[std::size_t(t[0])], mesh.vertices[std::size_t(t[1])],
                                    mesh.vertices[std::size_t(t[2])], to_world * per_face[f],
                                    grads[std::size_t(t[0])], grads[std::size_t(t[1])], grads[std::size_t(t[2])]);
  }
  return grads;
}

}  // namespace rmrecon
