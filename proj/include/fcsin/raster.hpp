#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcsin {

/// Contract violations (bad arguments, shape mismatches). CLI maps these to
/// usage errors (exit 2); plain std::runtime_error stays a runtime fault.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dense H x W x C image, row-major, channel-interleaved, values in [0,1].
/// Channel count is 1 for sketches and 3 for colour frames.
struct Raster {
  int h = 0, w = 0, c = 1;
  std::vector<double> data;

  Raster() = default;
  Raster(int height, int width, int channels, double fill = 0.0)
      : h(height), w(width), c(channels),
        data(static_cast<size_t>(height) * width * channels, fill) {
    if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
      throw ContractError("Raster: bad dimensions");
  }

  double& at(int y, int x, int ch = 0) {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  double at(int y, int x, int ch = 0) const {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }

  bool same_shape(const Raster& o) const { return h == o.h && w == o.w && c == o.c; }
  size_t size() const { return data.size(); }
};

/// Luma conversion (Rec.601 weights); identity on single-channel input.
Raster to_gray(const Raster& img);

/// Horizontal mirror, all channels.
Raster flip_horizontal(const Raster& img);

/// Axis-aligned crop; the window must lie inside the image.
Raster crop(const Raster& img, int y0, int x0, int out_h, int out_w);

/// Bilinear resize to (out_h, out_w).
Raster resize_bilinear(const Raster& img, int out_h, int out_w);

/// Clamp all values into [0,1] in place.
void clamp01(Raster& img);

/// Median intensity over all samples (used for the white-background check).
double median_intensity(const Raster& img);

}  // namespace fcsin
