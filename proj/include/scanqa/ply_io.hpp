#pragma once

#include <string>

#include "scanqa/scene.hpp"

namespace scanqa {

// Reads ASCII or binary_little_endian PLY. Only the vertex element is
// consumed; mesh faces and trailing elements are ignored. Missing color
// properties default to 0 and set Scene::missing_colors.
Scene load_ply(const std::string& path);

// Writes binary_little_endian PLY with float64 coordinates and uchar
// colors. Normalized colors are quantized by round(255*c) and the header
// carries a comment noting the quantization.
void export_ply(const Scene& scene, const std::string& path);

}  // namespace scanqa
