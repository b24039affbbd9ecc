#pragma once

#include <filesystem>

#include "estrnn/tensor.hpp"

namespace estrnn {

// Reads a PNG into a [3,H,W] tensor with values quantized as q/255.
// Grayscale / paletted / alpha inputs are expanded to 8-bit RGB.
Tensor read_png(const std::filesystem::path& path);

// Writes a [3,H,W] frame as an 8-bit RGB PNG. Values are clamped to [0,1]
// and quantized with round(x*255), so 8-bit-sourced data round-trips exactly.
void write_png(const std::filesystem::path& path, const Tensor& frame);

}  // namespace estrnn
