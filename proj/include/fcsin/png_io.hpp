#pragma once

#include <string>

#include "fcsin/raster.hpp"

namespace fcsin {

/// Load an 8-bit grayscale or RGB image; values mapped to [0,1] by /255.
/// Palette and 16-bit inputs are converted; alpha is dropped.
/// Throws std::runtime_error naming the path on unreadable/corrupt files.
Raster load_raster(const std::string& path);

/// Write as 8-bit PNG (grayscale for c==1, RGB for c==3); values are
/// clamped to [0,1] and quantized by round(v*255).
void save_raster(const Raster& img, const std::string& path);

}  // namespace fcsin
