#include "tiledit/container.hpp"

#include <cstring>
#include <fstream>

#include "tiledit/errors.hpp"

namespace tiledit {

namespace {

constexpr char kMagic[5] = {'L', 'T', 'S', 'R', '1'};
constexpr std::uint32_t kDtypeF32 = 1;
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorCode::bad_format, "truncated container " + path);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_container(const std::string& path, const RawTensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > kMaxRank) {
    throw Error(ErrorCode::invalid_range,
                "container rank must be 1..8, got " + std::to_string(tensor.dims.size()));
  }
  if (tensor.element_count() != tensor.data.size()) {
    throw Error(ErrorCode::shape_mismatch,
                "container payload has " + std::to_string(tensor.data.size()) +
                    " values, dims imply " + std::to_string(tensor.element_count()));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io_failure, "cannot open '" + path + "' for writing");
  }
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (std::uint32_t d : tensor.dims) put_u32(out, d);
  put_u32(out, kDtypeF32);
  // float32 payload is written verbatim; this code targets little-endian hosts.
  out.write(reinterpret_cast<const char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
  if (!out) {
    throw Error(ErrorCode::io_failure, "short write to '" + path + "'");
  }
}

RawTensor read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::input_not_found, path);
  }
  char magic[5];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::bad_format, "bad magic in '" + path + "'");
  }
  std::uint32_t rank = get_u32(in, path);
  if (rank < 1 || rank > kMaxRank) {
    throw Error(ErrorCode::bad_format, "bad rank " + std::to_string(rank) + " in '" + path + "'");
  }
  RawTensor t;
  t.dims.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) t.dims[i] = get_u32(in, path);
  std::uint32_t dtype = get_u32(in, path);
  if (dtype != kDtypeF32) {
    throw Error(ErrorCode::bad_format, "unsupported dtype tag " + std::to_string(dtype));
  }
  t.data.resize(t.element_count());
  if (!in.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(float)))) {
    throw Error(ErrorCode::bad_format, "truncated payload in '" + path + "'");
  }
  // Trailing bytes mean the file was not written by this format.
  char extra;
  if (in.read(&extra, 1)) {
    throw Error(ErrorCode::bad_format, "trailing bytes in '" + path + "'");
  }
  return t;
}

RawTensor to_raw(const Tensor& t) {
  RawTensor raw;
  raw.dims = {static_cast<std::uint32_t>(t.height()), static_cast<std::uint32_t>(t.width()),
              static_cast<std::uint32_t>(t.channels())};
  raw.data = t.values();
  return raw;
}

Tensor to_tensor(const RawTensor& raw) {
  if (raw.dims.size() != 3) {
    throw Error(ErrorCode::shape_mismatch,
                "expected rank-3 container, got rank " + std::to_string(raw.dims.size()));
  }
  Tensor t(static_cast<int>(raw.dims[0]), static_cast<int>(raw.dims[1]),
           static_cast<int>(raw.dims[2]));
  t.values() = raw.data;
  return t;
}

void write_container(const std::string& path, const Tensor& t) {
  write_container(path, to_raw(t));
}

Tensor read_container_tensor(const std::string& path) {
  return to_tensor(read_container(path));
}

}  // namespace tiledit
