#include "rmrecon/marching_cubes.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "rmrecon/error.hpp"

namespace rmrecon {
namespace {

// Cube corner c has offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
constexpr int kTets[6][4] = {
    {0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7}, {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7},
};

struct CellEdgeKey {
  // Lower lattice point of the edge and the offset code of the upper one;
  // code 0 denotes a vertex sitting exactly on the lattice point.
  static std::uint64_t make(std::uint64_t lower, int code) { return lower * 8 + std::uint64_t(code); }
};

struct Builder {
  const Lattice& lat;
  TriMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;

  explicit Builder(const Lattice& l) : lat(l) {}

  int vertex_on_edge(std::uint64_t ia, std::uint64_t ib, const Eigen::Vector3d& pa, const Eigen::Vector3d& pb,
                     double fa, double fb, int code_ab) {
    // fa < 0 <= fb or the reverse; zero counts as outside.
    std::uint64_t key;
    Eigen::Vector3d p;
    if (fb == 0.0) {
      key = CellEdgeKey::make(ib, 0);
      p = pb;
    } else if (fa == 0.0) {
      key = CellEdgeKey::make(ia, 0);
      p = pa;
    } else {
      key = CellEdgeKey::make(std::min(ia, ib), code_ab);
      // Interpolate from the lower point so every cell sharing the edge
      // computes identical bits.
      if (ia < ib) {
        p = pa + (fa / (fa - fb)) * (pb - pa);
      } else {
        p = pb + (fb / (fb - fa)) * (pa - pb);
      }
    }
    auto [it, inserted] = edge_vertex.try_emplace(key, int(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(p);
    return it->second;
  }

  void emit(int a, int b, int c, const Eigen::Vector3d& toward_positive) {
    if (a == b || b == c || a == c) return;
    const Eigen::Vector3d& pa = mesh.vertices[std::size_t(a)];
    const Eigen::Vector3d n = (mesh.vertices[std::size_t(b)] - pa).cross(mesh.vertices[std::size_t(c)] - pa);
    if (n.dot(toward_positive) < 0.0) std::swap(b, c);
    mesh.faces.push_back({a, b, c});
  }
};

}  // namespace

TriMesh extract_isosurface(const Lattice& lat, ExtractionStats* stats) {
  Builder builder(lat);
  const int sx = lat.dims[0], sy = lat.dims[1], sz = lat.dims[2];
  const std::uint64_t stride_y = std::uint64_t(sx);
  const std::uint64_t stride_z = std::uint64_t(sx) * std::uint64_t(sy);
  const std::uint64_t corner_offset[8] = {
      0, 1, stride_y, stride_y + 1, stride_z, stride_z + 1, stride_z + stride_y, stride_z + stride_y + 1,
  };
  const double* values = lat.values.data();

  for (int k = 0; k + 1 < sz; ++k) {
    for (int j = 0; j + 1 < sy; ++j) {
      for (int i = 0; i + 1 < sx; ++i) {
        const std::uint64_t base = lat.index(i, j, k);
        double f[8];
        int negatives = 0;
        for (int c = 0; c < 8; ++c) {
          f[c] = values[base + corner_offset[c]];
          negatives += f[c] < 0.0;
        }
        if (negatives == 0 || negatives == 8) continue;

        Eigen::Vector3d p[8];
        for (int c = 0; c < 8; ++c) p[c] = lat.position(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));

        for (const auto& tet : kTets) {
          int inside[4], outside[4];
          int ni = 0, no = 0;
          for (int c : tet) {
            if (f[c] < 0.0) inside[ni++] = c;
            else outside[no++] = c;
          }
          if (ni == 0 || no == 0) continue;
          auto vert = [&](int a, int b) {
            // corner indices differ in bits; upper corner has the superset of bits
            const int lo = (a & b) == a ? a : b;
            const int hi = lo == a ? b : a;
            return builder.vertex_on_edge(base + corner_offset[a], base + corner_offset[b], p[a], p[b], f[a], f[b],
                                          hi & ~lo);
          };
          Eigen::Vector3d in_c = Eigen::Vector3d::Zero(), out_c = Eigen::Vector3d::Zero();
          for (int q = 0; q < ni; ++q) in_c += p[inside[q]];
          for (int q = 0; q < no; ++q) out_c += p[outside[q]];
          const Eigen::Vector3d dir = out_c / no - in_c / ni;
          if (ni == 1 || no == 1) {
            const int apex = ni == 1 ? inside[0] : outside[0];
            const int* others = ni == 1 ? outside : inside;
            builder.emit(vert(apex, others[0]), vert(apex, others[1]), vert(apex, others[2]), dir);
          } else {
            const int a = inside[0], b = inside[1], c = outside[0], d = outside[1];
            const int ac = vert(a, c), ad = vert(a, d), bd = vert(b, d), bc = vert(b, c);
            builder.emit(ac, ad, bd, dir);
            builder.emit(ac, bd, bc, dir);
          }
        }
      }
    }
  }
  TriMesh mesh = std::move(builder.mesh);
  const std::size_t collapsed = collapse_degenerate_faces(mesh);
  if (stats) stats->collapsed_faces = collapsed;
  return mesh;
}

TriMesh marching_cubes(const SdfGrid& grid, int sample_factor, ExtractionStats* stats) {
  return extract_isosurface(sample_lattice(grid, sample_factor), stats);
}

std::size_t collapse_degenerate_faces(TriMesh& mesh, double min_area) {
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[std::size_t(x)] != x) {
      parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
      x = parent[std::size_t(x)];
    }
    return x;
  };
  std::size_t removed = 0;
  // Each collapse can expose a new degenerate face, so iterate to a fixpoint.
  for (bool changed = true; changed;) {
    changed = false;
    for (auto& t : mesh.faces) {
      for (int& i : t) i = find(i);
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
      const Eigen::Vector3d& a = mesh.vertices[std::size_t(t[0])];
      const Eigen::Vector3d& b = mesh.vertices[std::size_t(t[1])];
      const Eigen::Vector3d& c = mesh.vertices[std::size_t(t[2])];
      if (0.5 * (b - a).cross(c - a).norm() >= min_area) continue;
      const double lab = (b - a).squaredNorm(), lbc = (c - b).squaredNorm(), lca = (a - c).squaredNorm();
      int u = t[0], v = t[1];
      if (lbc <= lab && lbc <= lca) {
        u = t[1];
        v = t[2];
      } else if (lca <= lab && lca <= lbc) {
        u = t[2];
        v = t[0];
      }
      parent[std::size_t(std::max(u, v))] = std::min(u, v);
      changed = true;
    }
  }
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.faces.size());
  for (auto t : mesh.faces) {
    for (int& i : t) i = find(i);
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      ++removed;
      continue;
    }
    kept.push_back(t);
  }
  // Collapsing can leave two opposite copies of the same triangle; drop both.
  {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_set;
    auto key_of = [](std::array<int, 3> t) {
      std::sort(t.begin(), t.end());
      return (std::uint64_t(t[0]) * 0x9E3779B97F4A7C15ull) ^ (std::uint64_t(t[1]) << 21) ^ std::uint64_t(t[2]);
    };
    bool any_dup = false;
    if (removed > 0) {
      for (std::size_t f = 0; f < kept.size(); ++f) by_set[key_of(kept[f])].push_back(f);
      std::vector<std::uint8_t> drop(kept.size(), 0);
      for (const auto& [key, list] : by_set) {
        for (std::size_t x = 0; x < list.size(); ++x) {
          for (std::size_t y = x + 1; y < list.size(); ++y) {
            auto s1 = kept[list[x]], s2 = kept[list[y]];
            std::sort(s1.begin(), s1.end());
            std::sort(s2.begin(), s2.end());
            if (s1 == s2 && !drop[list[x]] && !drop[list[y]]) {
              drop[list[x]] = drop[list[y]] = 1;
              any_dup = true;
            }
          }
        }
      }
      if (any_dup) {
        std::vector<std::array<int, 3>> filtered;
        for (std::size_t f = 0; f < kept.size(); ++f) {
          if (!drop[f]) filtered.push_back(kept[f]);
          else ++removed;
        }
        kept = std::move(filtered);
      }
    }
  }
  mesh.faces = std::move(kept);

  std::vector<int> remap(mesh.vertices.size(), -1);
  std::vector<Eigen::Vector3d> verts;
  verts.reserve(mesh.vertices.size());
  for (auto& t : mesh.faces) {
    for (int& i : t) {
      if (remap[std::size_t(i)] < 0) {
        remap[std::size_t(i)] = int(verts.size());
        verts.push_back(mesh.vertices[std::size_t(i)]);
      }
      i = remap[std::size_t(i)];
    }
  }
  mesh.vertices = std::move(verts);
  return removed;
}

}  // namespace rmrecon
