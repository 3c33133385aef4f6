#pragma once

#include <string>

#include "core/grid.hpp"

namespace linecolor {

// Lossless PNG round trips. 8-bit for frames/sketches/masks, 16-bit single
// channel for label maps.
void save_rgb8(const std::string& path, const Image& img);
Image load_rgb8(const std::string& path);

void save_gray8(const std::string& path, const Grid<std::uint8_t>& g);
Grid<std::uint8_t> load_gray8(const std::string& path);

void save_gray16(const std::string& path, const Grid<std::int32_t>& g);
Grid<std::int32_t> load_gray16(const std::string& path);

}  // namespace linecolor
