#pragma once

#include "mixscape/synthworld.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mixscape {

/// 8-bit interleaved RGB raster.
struct Raster {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> rgb;
};

Raster to_raster(const GlyphImage& img, std::size_t upscale = 1);

void write_ppm(const std::filesystem::path& path, const Raster& r);
Raster read_ppm(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Raster& r);

} // namespace mixscape
