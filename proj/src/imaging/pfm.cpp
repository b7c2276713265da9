#include "rmrecon/pfm.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rmrecon {
namespace {

[[noreturn]] void parse_fail(std::size_t offset, const std::string& what) {
  throw Error(ErrorKind::Parse, "PFM parse error at byte " + std::to_string(offset) + ": " + what);
}

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }

// Reads one whitespace-delimited token starting at pos (skipping leading
// whitespace); pos ends just past the token.
std::string next_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
  const std::size_t start = pos;
  while (pos < bytes.size() && !is_space(bytes[pos])) ++pos;
  if (start == pos) parse_fail(start, "unexpected end of header");
  return bytes.substr(start, pos - start);
}

long parse_int(const std::string& tok, std::size_t offset, const char* what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    parse_fail(offset, std::string("malformed ") + what);
  }
  if (used != tok.size()) parse_fail(offset, std::string("malformed ") + what);
  if (v <= 0) parse_fail(offset, std::string("nonpositive ") + what);
  return v;
}

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

constexpr bool kHostLittle = std::endian::native == std::endian::little;

}  // namespace

PfmFile parse_pfm(const std::string& bytes) {
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  int channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    parse_fail(0, "bad magic '" + magic + "'");
  }
  std::size_t tok_at = pos;
  const std::string wtok = next_token(bytes, pos);
  const long width = parse_int(wtok, tok_at, "width");
  tok_at = pos;
  const std::string htok = next_token(bytes, pos);
  const long height = parse_int(htok, tok_at, "height");
  tok_at = pos;
  const std::string stok = next_token(bytes, pos);
  double scale = 0.0;
  try {
    std::size_t used = 0;
    scale = std::stod(stok, &used);
    if (used != stok.size()) parse_fail(tok_at, "malformed scale");
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    parse_fail(tok_at, "malformed scale");
  }
  if (scale == 0.0 || !std::isfinite(scale)) parse_fail(tok_at, "scale must be nonzero");
  // Exactly one whitespace byte separates the header from the payload.
  if (pos >= bytes.size() || !is_space(bytes[pos])) parse_fail(pos, "missing separator after scale");
  ++pos;

  PfmFile out;
  out.layout.header = bytes.substr(0, pos);
  out.layout.little_endian = scale < 0.0;
  const std::size_t count = std::size_t(width) * std::size_t(height) * std::size_t(channels);
  if (count > (std::size_t(1) << 34)) parse_fail(tok_at, "image too large");
  if (bytes.size() - pos < count * 4) {
    parse_fail(bytes.size(), "truncated payload, expected " + std::to_string(count * 4) +
                                 " bytes after offset " + std::to_string(pos));
  }
  out.image = ImageF(int(width), int(height), channels);
  const bool swap = out.layout.little_endian != kHostLittle;
  const std::size_t row_len = std::size_t(width) * std::size_t(channels);
  for (long row = 0; row < height; ++row) {
    // PFM stores rows bottom-to-top.
    const std::size_t dst_row = std::size_t(height - 1 - row);
    for (std::size_t i = 0; i < row_len; ++i) {
      std::uint32_t raw = 0;
      std::memcpy(&raw, bytes.data() + pos + (std::size_t(row) * row_len + i) * 4, 4);
      if (swap) raw = byteswap32(raw);
      out.image.data[dst_row * row_len + i] = std::bit_cast<float>(raw);
    }
  }
  return out;
}

std::string encode_pfm(const PfmFile& file) {
  const ImageF& img = file.image;
  if (img.channels != 1 && img.channels != 3) {
    throw Error(ErrorKind::InvalidArgument, "PFM supports 1 or 3 channels");
  }
  std::string out = file.layout.header;
  const std::size_t row_len = std::size_t(img.width) * std::size_t(img.channels);
  out.reserve(out.size() + row_len * std::size_t(img.height) * 4);
  const bool swap = file.layout.little_endian != kHostLittle;
  for (int row = img.height - 1; row >= 0; --row) {
    for (std::size_t i = 0; i < row_len; ++i) {
      std::uint32_t raw = std::bit_cast<std::uint32_t>(img.data[std::size_t(row) * row_len + i]);
      if (swap) raw = byteswap32(raw);
      char buf[4];
      std::memcpy(buf, &raw, 4);
      out.append(buf, 4);
    }
  }
  return out;
}

PfmLayout canonical_pfm_layout(const ImageF& image) {
  std::ostringstream os;
  os << (image.channels == 3 ? "PF" : "Pf") << '\n' << image.width << ' ' << image.height << '\n' << "-1\n";
  return PfmLayout{os.str(), true};
}

PfmFile read_pfm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pfm(ss.str());
}

void write_pfm_file(const PfmFile& file, const std::filesystem::path& path) {
  const std::string bytes = encode_pfm(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

ImageF load_pfm(const std::filesystem::path& path) { return read_pfm_file(path).image; }

void save_pfm(const ImageF& image, const std::filesystem::path& path) {
  write_pfm_file(PfmFile{image, canonical_pfm_layout(image)}, path);
}

}  // namespace rmrecon
