#pragma once

#include <filesystem>
#include <string>

#include "rmrecon/image.hpp"

namespace rmrecon {

// How a PFM file was laid out on disk. Keeping it lets a loaded file be
// written back byte-for-byte.
struct PfmLayout {
  std::string header;  // everything before the payload, verbatim
  bool little_endian = true;
};

struct PfmFile {
  ImageF image;
  PfmLayout layout;
};

PfmFile read_pfm_file(const std::filesystem::path& path);
void write_pfm_file(const PfmFile& file, const std::filesystem::path& path);

PfmFile parse_pfm(const std::string& bytes);
std::string encode_pfm(const PfmFile& file);

/// Canonical layout: "PF\n" or "Pf\n", "w h\n", "-1\n", little-endian.
PfmLayout canonical_pfm_layout(const ImageF& image);

ImageF load_pfm(const std::filesystem::path& path);
void save_pfm(const ImageF& image, const std::filesystem::path& path);

}  // namespace rmrecon
