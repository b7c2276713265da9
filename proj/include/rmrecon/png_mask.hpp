#pragma once

#include <filesystem>

#include "rmrecon/image.hpp"

namespace rmrecon {

/// Reads an 8-bit PNG (any colour type, converted to gray); pixels >= 128 are object.
MaskImage load_mask_png(const std::filesystem::path& path);
void save_mask_png(const MaskImage& mask, const std::filesystem::path& path);

}  // namespace rmrecon
