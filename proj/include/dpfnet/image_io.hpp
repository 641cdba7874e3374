#pragma once

#include <string>

#include "dpfnet/tensor.hpp"

namespace dpfnet {

// Decodes an 8-bit PNG into a [3,H,W] tensor scaled to [0,1]; grayscale is
// promoted to three channels and alpha is dropped. 16-bit files are
// rejected with an unsupported-depth error.
Tensor load_image(const std::string& path);

// Writes a [3,H,W] tensor as an 8-bit RGB PNG; values are clamped to [0,1]
// and quantized round-half-up. Byte output is deterministic.
void save_image(const Tensor& x, const std::string& path);

}  // namespace dpfnet
