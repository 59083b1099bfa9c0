// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include "lfmdt/lightfield.hpp"

namespace lfmdt {
namespace {

constexpr char kMagic[4] = {'L', 'F', 'B', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) raise(ErrorKind::size, std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_lfb(const LightField& lf) {
  std::vector<std::uint8_t> out;
  out.reserve(kLfbHeaderBytes + lf.tensor().size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  put_u32(out, checked_u32(lf.U(), "U"));
  put_u32(out, checked_u32(lf.V(), "V"));
  put_u32(out, checked_u32(lf.H(), "H"));
  put_u32(out, checked_u32(lf.W(), "W"));
  put_u32(out, checked_u32(lf.C(), "C"));
  for (float v : lf.tensor().values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

LightField decode_lfb(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
  if (bytes.size() < kLfbHeaderBytes) {
    raise(ErrorKind::format, "not an LFB file: " + std::to_string(bytes.size()) +
                                 " bytes is shorter than the header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) raise(ErrorKind::format, "bad LFB magic");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kVersion) {
    raise(ErrorKind::format, "unsupported LFB version " + std::to_string(version));
  }
  std::size_t dims[5];
  std::size_t count = 1;
  for (int i = 0; i < 5; ++i) {
    dims[i] = get_u32(bytes.data() + 8 + 4 * i);
    if (dims[i] == 0) raise(ErrorKind::format, "LFB header declares a zero extent");
    count *= dims[i];
  }
  const std::size_t payload = bytes.size() - kLfbHeaderBytes;
  if (payload != count * 4) {
    raise(ErrorKind::length, "LFB payload is " + std::to_string(payload) + " bytes, header needs " +
                                 std::to_string(count * 4));
  }
  LightField lf(dims[0], dims[1], dims[2], dims[3], dims[4]);
  std::size_t out_of_range = 0;
  float* dst = lf.tensor().data();
  for (std::size_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(get_u32(bytes.data() + kLfbHeaderBytes + 4 * i));
    if (!std::isfinite(v)) raise(ErrorKind::numeric, "LFB payload contains a non-finite value");
    if (v < -0.001f || v > 1.001f) ++out_of_range;
    dst[i] = std::clamp(v, 0.0f, 1.0f);
  }
  if (out_of_range && warnings) {
    warnings->push_back("range: " + std::to_string(out_of_range) +
                        " values outside [-0.001, 1.001] clamped to [0, 1]");
  }
  return lf;
}

void write_lfb(const LightField& lf, const std::filesystem::path& path) {
  const auto bytes = encode_lfb(lf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorKind::io, "failed writing " + path.string());
}

LightField read_lfb(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_lfb(bytes, warnings);
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_sai_png(const LightField& lf, std::size_t u, std::size_t v,
                   const std::filesystem::path& path) {
  if (u >= lf.U() || v >= lf.V()) raise(ErrorKind::index, "SAI index out of range");
  if (lf.C() != 1 && lf.C() != 3) raise(ErrorKind::dimension, "PNG export needs C = 1 or 3");
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) raise(ErrorKind::io, "cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    raise(ErrorKind::io, "libpng initialisation failed");
  }
  const std::size_t h = lf.H(), w = lf.W(), c = lf.C();
  std::vector<png_byte> pixels(h * w * c);
  const auto sai = lf.sai(u, v);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const float s = std::clamp(sai[i], 0.0f, 1.0f) * 255.0f;
    pixels[i] = static_cast<png_byte>(std::floor(s + 0.5f));
  }
  std::vector<png_bytep> rows(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = pixels.data() + y * w * c;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    raise(ErrorKind::io, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

LightField read_sai_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) raise(ErrorKind::io, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(ErrorKind::io, "libpng initialisation failed");
  }
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(ErrorKind::format, "cannot decode PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const std::size_t w = png_get_image_width(png, info);
  const std::size_t h = png_get_image_height(png, info);
  const std::size_t c = png_get_channels(png, info);
  pixels.resize(h * w * c);
  rows.resize(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = pixels.data() + y * w * c;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (c != 1 && c != 3) raise(ErrorKind::format, "PNG must be gray or RGB");
  LightField lf(1, 1, h, w, c);
  for (std::size_t i = 0; i < pixels.size(); ++i) lf.tensor()[i] = pixels[i] / 255.0f;
  return lf;
}

}  // namespace lfmdt
