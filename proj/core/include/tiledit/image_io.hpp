#pragma once

#include <string>

#include "tiledit/tensor.hpp"

namespace tiledit {

// 8-bit RGB PNG is the only image format. Values map to/from [0,1];
// writing quantizes with round-half-up so outputs are byte-stable.

// Decodes to an H x W x 3 tensor with values in [0,1]. Grayscale, palette
// and alpha variants are expanded/flattened to RGB on read.
// Throws InputNotFound for a missing path, BadFormat for non-PNG data.
Tensor read_png(const std::string& path);

// image must have 3 channels and values are clamped to [0,1] before
// quantization. Throws ShapeMismatch on other channel counts, IoFailure
// when the file cannot be written.
void write_png(const std::string& path, const Tensor& image);

// Maps an arbitrary-channel tensor onto RGB for emission: 1 channel is
// replicated, 2 channels fill R and G with B zero, 3+ keep the first three.
Tensor to_rgb(const Tensor& t);

}  // namespace tiledit
