#include "rmrecon/reference.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "rmrecon/error.hpp"
#include "rmrecon/fisheye.hpp"

namespace rmrecon::reference {

Lattice sample_lattice(const SdfGrid& grid, int factor) {
  if (factor < 1) throw Error(ErrorKind::InvalidArgument, "lattice factor must be >= 1");
  Lattice lat;
  lat.spacing = grid.spacing() / factor;
  lat.origin = grid.node_position(1, 1, 1);
  for (int a = 0; a < 3; ++a) lat.dims[a] = factor * (grid.dims()[a] - 3) + 1;
  lat.values.resize(std::size_t(lat.dims[0]) * std::size_t(lat.dims[1]) * std::size_t(lat.dims[2]));
  for (int k = 0; k < lat.dims[2]; ++k) {
    for (int j = 0; j < lat.dims[1]; ++j) {
      for (int i = 0; i < lat.dims[0]; ++i) {
        // Clamp the last sample onto the interior bound against rounding.
        Eigen::Vector3d p = lat.position(i, j, k);
        p = p.cwiseMin(grid.node_position(grid.dims()[0] - 2, grid.dims()[1] - 2, grid.dims()[2] - 2));
        lat.values[lat.index(i, j, k)] = eval_field(grid, p);
      }
    }
  }
  return lat;
}

GBuffer render_gbuffer(const TriMesh& mesh, const Camera& camera, int width, int height) {
  GBuffer g(width, height);
  g.view_rotation = camera.view_rotation();
  const double sx = double(camera.width()) / width;
  const double sy = double(camera.height()) / height;
  const Eigen::Vector3d origin = camera.center();
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector3d dir = camera.ray_direction({(x + 0.5) * sx, (y + 0.5) * sy});
      int best_face = -1;
      double best_t = std::numeric_limits<double>::infinity();
      double best_u = 0.0, best_v = 0.0;
      for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        const Eigen::Vector3d v0 = mesh.vertices[std::size_t(tri[0])];
        const Eigen::Vector3d e1 = mesh.vertices[std::size_t(tri[1])] - v0;
        const Eigen::Vector3d e2 = mesh.vertices[std::size_t(tri[2])] - v0;
        if (e1.cross(e2).dot(dir) >= 0.0) continue;
        const Eigen::Vector3d pvec = dir.cross(e2);
        const double det = e1.dot(pvec);
        if (det == 0.0) continue;
        const double inv_det = 1.0 / det;
        const Eigen::Vector3d tvec = origin - v0;
        const double u = tvec.dot(pvec) * inv_det;
        if (u < 0.0 || u > 1.0) continue;
        const Eigen::Vector3d qvec = tvec.cross(e1);
        const double v = dir.dot(qvec) * inv_det;
        if (v < 0.0 || u + v > 1.0) continue;
        const double t = e2.dot(qvec) * inv_det;
        if (!(t > 0.0) || !(t < best_t)) continue;  // strict: ties keep the lower face id
        best_face = int(f);
        best_t = t;
        best_u = u;
        best_v = v;
      }
      if (best_face < 0) continue;
      const std::size_t i = std::size_t(y) * std::size_t(width) + std::size_t(x);
      g.coverage[i] = 1;
      g.face[i] = best_face;
      g.barycentric[i] = {1.0 - best_u - best_v, best_u, best_v};
      g.normal[i] = g.view_rotation * mesh.face_normal(std::size_t(best_face));
      g.position[i] = origin + best_t * dir;
      g.depth[i] = best_t;
      g.view_dir[i] = g.view_rotation * (origin - g.position[i]).normalized();
    }
  }
  return g;
}

MappedFeatures weighted_map(const ImageF& features, std::span<const Eigen::Vector3d> normals,
                            std::span<const std::uint8_t> coverage, const ConfidenceMap& confidence,
                            const Eigen::Vector3d& omega_o, const MapKernelParams& params, int resolution) {
  params.validate();
  const std::size_t npix = features.pixel_count();
  const int nc = features.channels;
  double cmax = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < npix; ++i) {
    if (!coverage[i]) continue;
    cmax = std::max(cmax, confidence.weights[i]);
  }
  for (std::size_t i = 0; i < npix; ++i) {
    if (coverage[i] && confidence.weights[i] > 0.0 && normals[i].dot(omega_o) > 0.0) any = true;
  }
  if (!any) throw Error(ErrorKind::EmptyObservation, "no covered pixel with positive weight");

  MappedFeatures out;
  out.resolution = resolution;
  out.channels = nc;
  const std::size_t m2 = std::size_t(resolution) * std::size_t(resolution);
  out.values.assign(m2 * std::size_t(nc), 0.0);
  out.weights.assign(m2, 0.0);
  out.filled.assign(m2, 0);
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      if (!fisheye_pixel_valid(col, row, resolution)) continue;
      const Eigen::Vector3d q = fisheye_unproject(fisheye_pixel_center(col, row, resolution));
      const std::size_t pix = std::size_t(row) * std::size_t(resolution) + std::size_t(col);
      for (double s : {params.s, params.s_fill}) {
        double wsum = 0.0;
        std::vector<double> acc(std::size_t(nc), 0.0);
        for (std::size_t i = 0; i < npix; ++i) {
          if (!coverage[i]) continue;
          const Eigen::Vector3d& n = normals[i];
          const double w = confidence.weights[i] / cmax * std::max(n.dot(omega_o), 0.0);
          if (!(w > 0.0)) continue;
          const double k = w * std::exp(s * (n.x() * q.x() + n.y() * q.y() + n.z() * q.z() - 1.0));
          wsum += k;
          for (int c = 0; c < nc; ++c) acc[std::size_t(c)] += k * features.data[i * std::size_t(nc) + std::size_t(c)];
        }
        if (s == params.s && wsum < params.eps_den) {
          out.filled[pix] = 1;
          ++out.filled_count;
          continue;
        }
        out.weights[pix] = wsum;
        for (int c = 0; c < nc; ++c) out.values[pix * std::size_t(nc) + std::size_t(c)] = acc[std::size_t(c)] / wsum;
        break;
      }
    }
  }
  return out;
}

ReflectanceMap rm_from_scene(const EnvMap& env, const Brdf& brdf, const Eigen::Vector3d& omega_o,
                             const Eigen::Matrix3d& view_rotation, int resolution, int n_samples) {
  validate_brdf(brdf);
  const std::vector<Eigen::Vector3d> dirs = halton_sphere(n_samples);
  const Eigen::Vector3d wo = omega_o.normalized();
  ReflectanceMap rm(resolution, view_rotation);
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      if (!rm.valid(col, row)) continue;
      const Eigen::Vector3d n = view_rotation.transpose() * fisheye_unproject(fisheye_pixel_center(col, row, resolution));
      double wsum = 0.0;
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      for (const Eigen::Vector3d& wi : dirs) {
        const double c = wi.dot(n);
        if (c <= 0.0) continue;
        wsum += c;
        acc += c * eval_brdf(brdf, wi, wo, n).cwiseProduct(env.radiance(wi));
      }
      rm.set_pixel(col, row, wsum > 0.0 ? Eigen::Vector3d(acc * (std::numbers::pi / wsum)) : Eigen::Vector3d::Zero());
    }
  }
  return rm;
}

}  // namespace rmrecon::reference
