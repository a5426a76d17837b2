#pragma once

#include <string>

#include "ldg/data.hpp"

namespace ldg {

// 8-bit RGB png. Values are quantized with round(v * 255).
void write_png(const std::string& path, const Image& image);
Image read_png(const std::string& path);

}  // namespace ldg
