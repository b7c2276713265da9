#include "rmrecon/mesh.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>

#include "rmrecon/error.hpp"

namespace rmrecon {

Eigen::Vector3d TriMesh::face_normal(std::size_t f) const {
  const auto& t = faces[f];
  const Eigen::Vector3d c = (vertices[std::size_t(t[1])] - vertices[std::size_t(t[0])])
                                .cross(vertices[std::size_t(t[2])] - vertices[std::size_t(t[0])]);
  const double n = c.norm();
  return n > 0.0 ? Eigen::Vector3d(c / n) : Eigen::Vector3d::Zero();
}

double TriMesh::face_area(std::size_t f) const {
  const auto& t = faces[f];
  return 0.5 * (vertices[std::size_t(t[1])] - vertices[std::size_t(t[0])])
                   .cross(vertices[std::size_t(t[2])] - vertices[std::size_t(t[0])])
                   .norm();
}

double TriMesh::surface_area() const {
  double a = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
  return a;
}

AxisBox TriMesh::bounds() const {
  AxisBox b;
  if (vertices.empty()) return b;
  b.min = b.max = vertices.front();
  for (const auto& v : vertices) {
    b.min = b.min.cwiseMin(v);
    b.max = b.max.cwiseMax(v);
  }
  return b;
}

void TriMesh::validate() const {
  const int n = int(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int i : faces[f]) {
      if (i < 0 || i >= n) {
        throw Error(ErrorKind::Consistency, "face " + std::to_string(f) + " references missing vertex " +
                                                std::to_string(i));
      }
    }
  }
}

TriMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  TriMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i > 0 ? i - 1 : int(mesh.vertices.size()) + i);
      }
      if (idx.size() < 3) {
        throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": face needs 3 indices");
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  mesh.validate();
  return mesh;
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& v : mesh.vertices) std::fprintf(f, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
  for (const auto& t : mesh.faces) std::fprintf(f, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
  if (std::fclose(f) != 0) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

namespace {

double signed_power(double base, double e) {
  return (base < 0.0 ? -1.0 : 1.0) * std::pow(std::abs(base), e);
}

double signed_volume(const TriMesh& mesh) {
  double vol = 0.0;
  for (const auto& t : mesh.faces) {
    vol += mesh.vertices[std::size_t(t[0])].dot(
        mesh.vertices[std::size_t(t[1])].cross(mesh.vertices[std::size_t(t[2])]));
  }
  return vol / 6.0;
}

}  // namespace

TriMesh make_icosphere(const Eigen::Vector3d& center, double radius, int subdivisions) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {
      {-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
      {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1},
  };
  for (auto& x : v) x.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
  };
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[std::size_t(a)] + v[std::size_t(b)]).normalized());
      const int id = int(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int a = midpoint(t[0], t[1]);
      const int b = midpoint(t[1], t[2]);
      const int c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  TriMesh mesh;
  mesh.vertices.reserve(v.size());
  for (const auto& x : v) mesh.vertices.push_back(center + radius * x);
  mesh.faces = std::move(f);
  if (signed_volume(mesh) < 0.0) {
    for (auto& t : mesh.faces) std::swap(t[1], t[2]);
  }
  return mesh;
}


TriMesh make_superquadric(double e1, double e2, const Eigen::Vector3d& scale, int segments) {
  if (!(e1 > 0.0) || !(e2 > 0.0) || !(scale.minCoeff() > 0.0) || segments < 4) {
    throw Error(ErrorKind::InvalidArgument, "superquadric needs positive exponents and scale");
  }
  const int rings = segments;       // latitude steps
  const int sectors = 2 * segments;  // longitude steps
  const double pi = 3.14159265358979323846;
  TriMesh mesh;
  mesh.vertices.push_back({0.0, 0.0, -scale.z()});
  for (int r = 1; r < rings; ++r) {
    const double eta = -pi / 2 + pi * r / rings;
    for (int s = 0; s < sectors; ++s) {
      const double omega = -pi + 2.0 * pi * s / sectors;
      const double ce = signed_power(std::cos(eta), e1);
      mesh.vertices.push_back({scale.x() * ce * signed_power(std::cos(omega), e2),
                               scale.y() * ce * signed_power(std::sin(omega), e2),
                               scale.z() * signed_power(std::sin(eta), e1)});
    }
  }
  mesh.vertices.push_back({0.0, 0.0, scale.z()});
  const int top = int(mesh.vertices.size()) - 1;
  auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * sectors + (s % sectors); };
  for (int s = 0; s < sectors; ++s) mesh.faces.push_back({0, ring_vertex(1, s + 1), ring_vertex(1, s)});
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < sectors; ++s) {
      const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      mesh.faces.push_back({a, b, d});
      mesh.faces.push_back({a, d, c});
    }
  }
  for (int s = 0; s < sectors; ++s) mesh.faces.push_back({top, ring_vertex(rings - 1, s), ring_vertex(rings - 1, s + 1)});
  if (signed_volume(mesh) < 0.0) {
    for (auto& t : mesh.faces) std::swap(t[1], t[2]);
  }
  return mesh;
}

EdgeAudit audit_edges(const TriMesh& mesh) {
  // key: (min, max) -> (count, net direction)
  std::unordered_map<std::uint64_t, std::pair<int, int>> uses;
  uses.reserve(mesh.faces.size() * 2);
  for (const auto& t : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[std::size_t(e)], b = t[std::size_t((e + 1) % 3)];
      const auto lo = std::uint64_t(std::min(a, b)), hi = std::uint64_t(std::max(a, b));
      auto& u = uses[(lo << 32) | hi];
      u.first += 1;
      u.second += a < b ? 1 : -1;
    }
  }
  EdgeAudit audit;
  audit.edges = uses.size();
  for (const auto& [key, u] : uses) {
    if (u.first == 1) ++audit.boundary_edges;
    else if (u.first > 2) ++audit.nonmanifold_edges;
    else if (u.second != 0) ++audit.inconsistent_edges;
  }
  return audit;
}

}  // namespace rmrecon
