#pragma once

// PNG and base64 codecs. PNG goes through libpng's simplified API, base64
// through OpenSSL's EVP block encoder.

#include <openssl/evp.h>
#include <png.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "demoforge/error.hpp"
#include "demoforge/raster.hpp"

namespace demoforge {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline Bytes png_write(const std::uint8_t* pixels, int width, int height, png_uint_32 format) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels, 0, nullptr))
    fail(ErrorCode::IoError, std::string("png encode: ") + img.message);
  Bytes out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels, 0, nullptr))
    fail(ErrorCode::IoError, std::string("png encode: ") + img.message);
  out.resize(size);
  return out;
}

inline Bytes png_read(std::span<const std::uint8_t> data, png_uint_32 format, int& width, int& height) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, data.data(), data.size()))
    fail(ErrorCode::ParseError, std::string("png decode: ") + img.message);
  img.format = format;
  Bytes out(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.data(), 0, nullptr)) {
    png_image_free(&img);
    fail(ErrorCode::ParseError, std::string("png decode: ") + img.message);
  }
  width = static_cast<int>(img.width);
  height = static_cast<int>(img.height);
  return out;
}

}  // namespace detail

inline Bytes encode_png(const Image& image) {
  return detail::png_write(image.data().data(), image.width(), image.height(), PNG_FORMAT_RGB);
}

inline Image decode_png(std::span<const std::uint8_t> data) {
  int w = 0, h = 0;
  Bytes px = detail::png_read(data, PNG_FORMAT_RGB, w, h);
  return Image(w, h, std::move(px));
}

/// Masks are stored as 8-bit gray: 0 background, 255 set.
inline Bytes encode_mask_png(const Mask& mask) {
  Bytes gray(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) gray[i] = mask[i] ? 255 : 0;
  return detail::png_write(gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

/// Any nonzero gray level reads back as set.
inline Mask decode_mask_png(std::span<const std::uint8_t> data) {
  int w = 0, h = 0;
  Bytes gray = detail::png_read(data, PNG_FORMAT_GRAY, w, h);
  Mask m(w, h);
  for (std::size_t i = 0; i < gray.size(); ++i) m.set_index(i, gray[i] != 0);
  return m;
}

inline Bytes read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string read_text(const std::filesystem::path& p) {
  Bytes b = read_file(p);
  return std::string(b.begin(), b.end());
}

inline void write_file(const std::filesystem::path& p, std::span<const std::uint8_t> data) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + p.string());
}

inline void write_text(const std::filesystem::path& p, std::string_view text) {
  write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline Image read_png(const std::filesystem::path& p) { return decode_png(read_file(p)); }
inline Mask read_mask_png(const std::filesystem::path& p) { return decode_mask_png(read_file(p)); }
inline void write_png(const std::filesystem::path& p, const Image& img) { write_file(p, encode_png(img)); }
inline void write_mask_png(const std::filesystem::path& p, const Mask& m) { write_file(p, encode_mask_png(m)); }

inline std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');  // EVP_EncodeBlock writes a trailing NUL
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

/// Strict standard-alphabet base64 with padding; no embedded whitespace.
inline Bytes base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) fail(ErrorCode::ProtocolError, "base64 length not a multiple of 4");
  for (char c : text)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/' || c == '='))
      fail(ErrorCode::ProtocolError, "invalid base64 character");
  Bytes out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) fail(ErrorCode::ProtocolError, "invalid base64 payload");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace demoforge
