#include "rmrecon/image.hpp"

#include <algorithm>
#include <cmath>

namespace rmrecon {

ImageF::ImageF(int w, int h, int c, float fill) : width(w), height(h), channels(c) {
  if (w < 0 || h < 0 || (c != 1 && c != 3)) {
    throw Error(ErrorKind::InvalidArgument, "image needs nonnegative size and 1 or 3 channels");
  }
  data.assign(std::size_t(w) * std::size_t(h) * std::size_t(c), fill);
}

bool ImageF::is_valid_radiance() const {
  if (data.size() != pixel_count() * std::size_t(channels)) return false;
  return std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v) && v >= 0.0f; });
}

MaskImage::MaskImage(int w, int h, bool fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw Error(ErrorKind::InvalidArgument, "mask needs nonnegative size");
  data.assign(std::size_t(w) * std::size_t(h), fill ? 1 : 0);
}

std::size_t MaskImage::count() const {
  return std::size_t(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

ImageF log_radiance(const ImageF& image, double floor) {
  if (!(floor > 0.0)) throw Error(ErrorKind::InvalidArgument, "log floor must be positive");
  ImageF out = image;
  for (float& v : out.data) v = float(std::log(std::max(double(v), floor)));
  return out;
}

}  // namespace rmrecon
