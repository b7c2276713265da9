#include "rmrecon/distance_transform.hpp"

#include <cmath>
#include <limits>

#include "rmrecon/error.hpp"

namespace rmrecon {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D lower envelope of parabolas; f and d have length n.
void dt_1d(const double* f, double* d, int n, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  int first = 0;
  while (first < n && f[first] == kInf) ++first;
  if (first == n) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  v[0] = first;
  for (int q = first + 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = double(q - v[k]);
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

void squared_distance_transform(std::span<double> values, std::span<const int> dims) {
  std::size_t total = 1;
  for (int d : dims) total *= std::size_t(d);
  if (total != values.size()) throw Error(ErrorKind::InvalidArgument, "distance transform size mismatch");
  std::size_t stride = 1;
  for (std::size_t axis = 0; axis < dims.size(); ++axis) {
    const int n = dims[axis];
    const std::size_t lines = total / std::size_t(n);
#pragma omp parallel
    {
      const auto len = static_cast<std::size_t>(n);
      std::vector<double> f(len), d(len), z(len + 1);
      std::vector<int> v(len);
#pragma omp for schedule(static)
      for (std::ptrdiff_t line = 0; line < std::ptrdiff_t(lines); ++line) {
        // Decompose the line index into (outer, inner) around this axis.
        const std::size_t inner = std::size_t(line) % stride;
        const std::size_t outer = std::size_t(line) / stride;
        const std::size_t base = outer * stride * std::size_t(n) + inner;
        for (int q = 0; q < n; ++q) f[std::size_t(q)] = values[base + std::size_t(q) * stride];
        dt_1d(f.data(), d.data(), n, v.data(), z.data());
        for (int q = 0; q < n; ++q) values[base + std::size_t(q) * stride] = d[std::size_t(q)];
      }
    }
    stride *= std::size_t(n);
  }
}

std::vector<double> squared_distance_to(std::span<const std::uint8_t> seeds, std::span<const int> dims) {
  std::vector<double> out(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = seeds[i] ? 0.0 : kInf;
  squared_distance_transform(out, dims);
  return out;
}

}  // namespace rmrecon
