#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tiledit/tensor.hpp"

namespace tiledit {

// On-disk tensor container. Byte layout, all integers little-endian:
//   magic   5 bytes  "LTSR1"
//   rank    u32
//   dims    rank x u32
//   dtype   u32      (1 = float32, the only tag defined)
//   payload product(dims) x 4 bytes, row-major float32
// Round-trips bit-exactly; rank 1..8 accepted.
struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return n;
  }
};

void write_container(const std::string& path, const RawTensor& tensor);
RawTensor read_container(const std::string& path);

// Rank-3 bridges to the latent carrier.
RawTensor to_raw(const Tensor& t);
Tensor to_tensor(const RawTensor& raw);

void write_container(const std::string& path, const Tensor& t);
Tensor read_container_tensor(const std::string& path);

}  // namespace tiledit
