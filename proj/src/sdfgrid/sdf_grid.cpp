#include "rmrecon/sdf_grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rmrecon/error.hpp"

namespace rmrecon {
namespace {

// Cubic B-spline weights of nodes i0-1 .. i0+2 at fractional offset t.
inline void spline_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double s = 1.0 - t;
  w[0] = s * s * s / 6.0;
  w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
  w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
  w[3] = t3 / 6.0;
}

inline void spline_derivs(double t, double d[4]) {
  const double t2 = t * t;
  const double s = 1.0 - t;
  d[0] = -0.5 * s * s;
  d[1] = 1.5 * t2 - 2.0 * t;
  d[2] = -1.5 * t2 + t + 0.5;
  d[3] = 0.5 * t2;
}

struct AxisSpan {
  int first;  // index of the first of the four supporting nodes
  double t;
};

AxisSpan locate(double u, int n) {
  int i0 = int(std::floor(u));
  if (i0 < 1) i0 = 1;
  if (i0 > n - 3) i0 = n - 3;
  return {i0 - 1, u - double(i0)};
}

std::array<AxisSpan, 3> locate_point(const SdfGrid& grid, const Eigen::Vector3d& x) {
  if (!grid.in_interior(x)) {
    std::ostringstream os;
    os << "point (" << x.x() << ", " << x.y() << ", " << x.z() << ") lies outside the grid interior";
    throw Error(ErrorKind::Domain, os.str());
  }
  const Eigen::Vector3d u = (x - grid.origin()) / grid.spacing();
  const auto& d = grid.dims();
  return {locate(u.x(), d[0]), locate(u.y(), d[1]), locate(u.z(), d[2])};
}

}  // namespace

double cubic_bspline(double t) {
  const double a = std::abs(t);
  if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
  if (a < 2.0) {
    const double b = 2.0 - a;
    return b * b * b / 6.0;
  }
  return 0.0;
}

SdfGrid::SdfGrid(const Eigen::Vector3d& origin, double spacing, const std::array<int, 3>& dims, double fill)
    : SdfGrid(origin, spacing, dims,
              std::vector<double>(std::size_t(std::max(dims[0], 0)) * std::size_t(std::max(dims[1], 0)) *
                                      std::size_t(std::max(dims[2], 0)),
                                  fill)) {}

SdfGrid::SdfGrid(const Eigen::Vector3d& origin, double spacing, const std::array<int, 3>& dims,
                 std::vector<double> coeffs)
    : origin_(origin), h_(spacing), dims_(dims), coeffs_(std::move(coeffs)) {
  if (dims[0] < 4 || dims[1] < 4 || dims[2] < 4) {
    throw Error(ErrorKind::InvalidArgument, "SdfGrid needs at least 4 nodes per axis");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(ErrorKind::InvalidArgument, "SdfGrid spacing must be positive");
  }
  if (coeffs_.size() != std::size_t(dims[0]) * std::size_t(dims[1]) * std::size_t(dims[2])) {
    throw Error(ErrorKind::InvalidArgument, "SdfGrid coefficient count does not match dims");
  }
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "SdfGrid coefficients must be finite");
  }
}

std::array<int, 3> SdfGrid::node_of(std::size_t index) const {
  const std::size_t nx = std::size_t(dims_[0]);
  const std::size_t ny = std::size_t(dims_[1]);
  return {int(index % nx), int((index / nx) % ny), int(index / (nx * ny))};
}

Eigen::Vector3d SdfGrid::interior_max() const {
  return origin_ + h_ * Eigen::Vector3d(dims_[0] - 2, dims_[1] - 2, dims_[2] - 2);
}

bool SdfGrid::in_interior(const Eigen::Vector3d& x) const {
  // Lattice points computed as origin + i * spacing can land a few ulps past
  // the interior box; allow a relative slack far below any geometric scale.
  const double slack = 1e-9 * h_;
  const Eigen::Vector3d lo = interior_min();
  const Eigen::Vector3d hi = interior_max();
  for (int a = 0; a < 3; ++a) {
    if (!(x[a] >= lo[a] - slack && x[a] <= hi[a] + slack)) return false;
  }
  return true;
}

bool SdfGrid::same_layout(const SdfGrid& other) const {
  return dims_ == other.dims_ && h_ == other.h_ && origin_ == other.origin_;
}

double eval_field(const SdfGrid& grid, const Eigen::Vector3d& x) {
  return eval_field_and_gradient(grid, x).value;
}

Eigen::Vector3d eval_gradient(const SdfGrid& grid, const Eigen::Vector3d& x) {
  return eval_field_and_gradient(grid, x).gradient;
}

FieldSample eval_field_and_gradient(const SdfGrid& grid, const Eigen::Vector3d& x) {
  const auto span = locate_point(grid, x);
  double w[3][4];
  double d[3][4];
  for (int a = 0; a < 3; ++a) {
    spline_weights(span[a].t, w[a]);
    spline_derivs(span[a].t, d[a]);
  }
  const auto coeffs = grid.coeffs();
  FieldSample out;
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) {
      const std::size_t row = grid.index(span[0].first, span[1].first + j, span[2].first + k);
      for (int i = 0; i < 4; ++i) {
        const double c = coeffs[row + std::size_t(i)];
        out.value += c * w[0][i] * w[1][j] * w[2][k];
        out.gradient.x() += c * d[0][i] * w[1][j] * w[2][k];
        out.gradient.y() += c * w[0][i] * d[1][j] * w[2][k];
        out.gradient.z() += c * w[0][i] * w[1][j] * d[2][k];
      }
    }
  }
  out.gradient /= grid.spacing();
  return out;
}

BasisWeights basis_weights(const SdfGrid& grid, const Eigen::Vector3d& x) {
  const auto span = locate_point(grid, x);
  double w[3][4];
  for (int a = 0; a < 3; ++a) spline_weights(span[a].t, w[a]);
  BasisWeights out;
  int n = 0;
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) {
      const std::size_t row = grid.index(span[0].first, span[1].first + j, span[2].first + k);
      for (int i = 0; i < 4; ++i, ++n) {
        out.nodes[std::size_t(n)] = row + std::size_t(i);
        out.weights[std::size_t(n)] = w[0][i] * w[1][j] * w[2][k];
      }
    }
  }
  return out;
}

Lattice sample_lattice(const SdfGrid& grid, int factor) {
  if (factor < 1) throw Error(ErrorKind::InvalidArgument, "lattice factor must be >= 1");
  const auto& n = grid.dims();
  Lattice lat;
  lat.origin = grid.interior_min();
  lat.spacing = grid.spacing() / factor;
  for (int a = 0; a < 3; ++a) lat.dims[a] = factor * (n[a] - 3) + 1;

  // Per-axis support: sample s uses nodes first..first+3 with weights w.
  struct Tap {
    int first;
    double w[4];
  };
  std::array<std::vector<Tap>, 3> taps;
  for (int a = 0; a < 3; ++a) {
    taps[a].resize(std::size_t(lat.dims[a]));
    for (int s = 0; s < lat.dims[a]; ++s) {
      const int cell = s / factor;
      const int sub = s % factor;
      AxisSpan sp{cell, double(sub) / factor};  // node coordinate u = 1 + cell + sub/factor
      if (cell + 1 > n[a] - 3) sp = {n[a] - 4, 1.0};
      Tap& tap = taps[a][std::size_t(s)];
      tap.first = sp.first;
      spline_weights(sp.t, tap.w);
    }
  }

  const int ny = n[1], nz = n[2];
  const int sx = lat.dims[0], sy = lat.dims[1], sz = lat.dims[2];
  const auto coeffs = grid.coeffs();

  // Pass 1: x. (nx, ny, nz) -> (sx, ny, nz)
  std::vector<double> a1(std::size_t(sx) * std::size_t(ny) * std::size_t(nz));
#pragma omp parallel for schedule(static)
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      const double* src = coeffs.data() + grid.index(0, j, k);
      double* dst = a1.data() + (std::size_t(k) * std::size_t(ny) + std::size_t(j)) * std::size_t(sx);
      for (int s = 0; s < sx; ++s) {
        const Tap& t = taps[0][std::size_t(s)];
        const double* p = src + t.first;
        dst[s] = p[0] * t.w[0] + p[1] * t.w[1] + p[2] * t.w[2] + p[3] * t.w[3];
      }
    }
  }
  // Pass 2: y. (sx, ny, nz) -> (sx, sy, nz)
  std::vector<double> a2(std::size_t(sx) * std::size_t(sy) * std::size_t(nz));
#pragma omp parallel for schedule(static)
  for (int k = 0; k < nz; ++k) {
    for (int s = 0; s < sy; ++s) {
      const Tap& t = taps[1][std::size_t(s)];
      double* dst = a2.data() + (std::size_t(k) * std::size_t(sy) + std::size_t(s)) * std::size_t(sx);
      const double* r0 = a1.data() + (std::size_t(k) * std::size_t(ny) + std::size_t(t.first)) * std::size_t(sx);
      const double* r1 = r0 + sx;
      const double* r2 = r1 + sx;
      const double* r3 = r2 + sx;
      for (int i = 0; i < sx; ++i) {
        dst[i] = r0[i] * t.w[0] + r1[i] * t.w[1] + r2[i] * t.w[2] + r3[i] * t.w[3];
      }
    }
  }
  a1.clear();
  a1.shrink_to_fit();
  // Pass 3: z. (sx, sy, nz) -> (sx, sy, sz)
  lat.values.resize(std::size_t(sx) * std::size_t(sy) * std::size_t(sz));
  const std::size_t plane = std::size_t(sx) * std::size_t(sy);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < sz; ++s) {
    const Tap& t = taps[2][std::size_t(s)];
    double* dst = lat.values.data() + std::size_t(s) * plane;
    const double* p0 = a2.data() + std::size_t(t.first) * plane;
    const double* p1 = p0 + plane;
    const double* p2 = p1 + plane;
    const double* p3 = p2 + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      dst[i] = p0[i] * t.w[0] + p1[i] * t.w[1] + p2[i] * t.w[2] + p3[i] * t.w[3];
    }
  }
  return lat;
}

void save_grid(const SdfGrid& grid, const std::filesystem::path& json_path) {
  std::filesystem::path raw_path = json_path;
  raw_path.replace_extension(".raw");
  nlohmann::json j = {
      {"origin", {grid.origin().x(), grid.origin().y(), grid.origin().z()}},
      {"spacing", grid.spacing()},
      {"dims", {grid.dims()[0], grid.dims()[1], grid.dims()[2]}},
      {"dtype", "float64-le"},
      {"data", raw_path.filename().string()},
  };
  std::ofstream jo(json_path);
  if (!jo) throw Error(ErrorKind::Io, "cannot write " + json_path.string());
  jo << j.dump(2) << '\n';
  std::ofstream ro(raw_path, std::ios::binary);
  if (!ro) throw Error(ErrorKind::Io, "cannot write " + raw_path.string());
  static_assert(std::endian::native == std::endian::little, "grid checkpoints assume a little-endian host");
  ro.write(reinterpret_cast<const char*>(grid.coeffs().data()), std::streamsize(grid.size() * sizeof(double)));
}

SdfGrid load_grid(const std::filesystem::path& json_path) {
  std::ifstream ji(json_path);
  if (!ji) throw Error(ErrorKind::Io, "cannot open " + json_path.string());
  nlohmann::json j;
  try {
    ji >> j;
    const auto o = j.at("origin").get<std::vector<double>>();
    const auto d = j.at("dims").get<std::vector<int>>();
    if (o.size() != 3 || d.size() != 3) throw Error(ErrorKind::Parse, "grid header needs 3-vectors");
    const std::array<int, 3> dims{d[0], d[1], d[2]};
    const std::size_t count = std::size_t(std::max(d[0], 0)) * std::size_t(std::max(d[1], 0)) * std::size_t(std::max(d[2], 0));
    std::vector<double> coeffs(count);
    const std::filesystem::path raw_path = json_path.parent_path() / j.at("data").get<std::string>();
    std::ifstream ri(raw_path, std::ios::binary);
    if (!ri) throw Error(ErrorKind::Io, "cannot open " + raw_path.string());
    ri.read(reinterpret_cast<char*>(coeffs.data()), std::streamsize(count * sizeof(double)));
    if (std::size_t(ri.gcount()) != count * sizeof(double)) {
      throw Error(ErrorKind::Parse, "grid payload truncated at byte " + std::to_string(ri.gcount()));
    }
    return SdfGrid({o[0], o[1], o[2]}, j.at("spacing").get<double>(), dims, std::move(coeffs));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, json_path.string() + ": " + e.what());
  }
}

}  // namespace rmrecon
