// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lfmdt/network.hpp"

namespace lfmdt {
namespace {

constexpr char kMagic[4] = {'L', 'F', 'M', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t to_u32(std::size_t v, const std::string& what) {
  if (v > 0xffffffffu) raise(ErrorKind::checkpoint, what + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

// Bounds-checked little-endian reader.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }

  std::string text(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      raise(ErrorKind::checkpoint, std::string("checkpoint truncated while reading ") + what);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParameterStore<float>& store) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  put_u32(out, to_u32(store.size(), "array count"));
  for (const auto& e : store.entries()) {
    put_u32(out, to_u32(e.name.size(), "name length"));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_u32(out, to_u32(e.value.rank(), "rank"));
    for (std::size_t d : e.value.shape()) put_u32(out, to_u32(d, "extent"));
    for (float v : e.value.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ParameterStore<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    raise(ErrorKind::checkpoint, "not an LFMW checkpoint (bad magic)");
  }
  Reader in(bytes.subspan(4));
  const std::uint32_t version = in.u32("version");
  if (version != kVersion) {
    raise(ErrorKind::checkpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32("array count");
  ParameterStore<float> store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = in.u32("name length");
    if (name_len == 0) raise(ErrorKind::checkpoint, "empty array name");
    std::string name = in.text(name_len, "array name");
    const std::uint32_t rank = in.u32("rank");
    if (rank == 0 || rank > 8) {
      raise(ErrorKind::checkpoint, "array '" + name + "' has unsupported rank " +
                                       std::to_string(rank));
    }
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = in.u32("extent");
      if (d == 0) raise(ErrorKind::checkpoint, "array '" + name + "' has a zero extent");
      n *= d;
    }
    if (n > in.remaining() / 4) {
      raise(ErrorKind::checkpoint, "checkpoint truncated in payload of '" + name + "'");
    }
    std::vector<float> values(n);
    for (auto& v : values) v = std::bit_cast<float>(in.u32("payload"));
    if (store.contains(name)) raise(ErrorKind::checkpoint, "duplicate array '" + name + "'");
    store.add(std::move(name), Tensor<float>(std::move(shape), std::move(values)));
  }
  if (!in.done()) raise(ErrorKind::checkpoint, "trailing bytes after the last array");
  return store;
}

void write_checkpoint(const ParameterStore<float>& store, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorKind::io, "failed writing " + path.string());
}

ParameterStore<float> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace lfmdt
