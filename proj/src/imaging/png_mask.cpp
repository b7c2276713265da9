#include "rmrecon/png_mask.hpp"

#include <png.h>

#include <vector>

namespace rmrecon {

MaskImage load_mask_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error(ErrorKind::Io, "cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Parse, "cannot decode PNG " + path.string() + ": " + msg);
  }
  MaskImage mask(int(image.width), int(image.height));
  for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = buffer[i] >= 128 ? 1 : 0;
  return mask;
}

void save_mask_png(const MaskImage& mask, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(mask.width);
  image.height = png_uint_32(mask.height);
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(mask.data.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = mask.data[i] ? 255 : 0;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, "cannot write PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace rmrecon
