#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rmrecon/error.hpp"

namespace rmrecon {

/// Float raster, row-major, top-left origin, interleaved channels.
///
/// Radiance images hold finite nonnegative values; the same container also
/// carries signed data such as exported normal maps, so the radiance
/// invariant is checked explicitly with is_valid_radiance().
struct ImageF {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  ImageF() = default;
  ImageF(int w, int h, int c, float fill = 0.0f);

  std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
  std::size_t index(int x, int y, int c = 0) const {
    return (std::size_t(y) * std::size_t(width) + std::size_t(x)) * std::size_t(channels) +
           std::size_t(c);
  }
  float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  bool is_valid_radiance() const;
};

/// Boolean silhouette, object = true.
struct MaskImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  MaskImage() = default;
  MaskImage(int w, int h, bool fill = false);

  bool at(int x, int y) const { return data[std::size_t(y) * std::size_t(width) + std::size_t(x)] != 0; }
  void set(int x, int y, bool v) { data[std::size_t(y) * std::size_t(width) + std::size_t(x)] = v ? 1 : 0; }
  std::size_t count() const;
};

inline constexpr double kDefaultLogFloor = 1e-6;

/// Elementwise natural log of max(value, floor).
ImageF log_radiance(const ImageF& image, double floor = kDefaultLogFloor);

}  // namespace rmrecon
