#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fcsin/raster.hpp"

namespace fcsin {

/// Dense H x W x 2 displacement field in pixels: (dx, dy) interleaved,
/// positive x rightward, positive y downward.
struct FlowField {
  int h = 0, w = 0;
  std::vector<double> data;

  FlowField() = default;
  FlowField(int height, int width, double fill = 0.0)
      : h(height), w(width), data(static_cast<size_t>(height) * width * 2, fill) {}

  double& dx(int y, int x) { return data[(static_cast<size_t>(y) * w + x) * 2 + 0]; }
  double& dy(int y, int x) { return data[(static_cast<size_t>(y) * w + x) * 2 + 1]; }
  double dx(int y, int x) const { return data[(static_cast<size_t>(y) * w + x) * 2 + 0]; }
  double dy(int y, int x) const { return data[(static_cast<size_t>(y) * w + x) * 2 + 1]; }
};

struct FlowParams {
  int levels = 3;
  int block = 8;
  int radius = 4;
};

/// Flow a -> b by coarse-to-fine SAD block matching; the block-grid result
/// is 3x3 median filtered and bilinearly densified to one vector per pixel.
FlowField estimate_flow(const Raster& a, const Raster& b, const FlowParams& p = {});

/// Linear-motion split of the two full-range flows to timestamp t:
/// O_{t->0} = -t * flow01, O_{t->1} = -(1-t) * flow10. Requires t in (0,1).
std::pair<FlowField, FlowField> split_time(const FlowField& flow01,
                                           const FlowField& flow10, double t);

/// Backward warp with bilinear sampling, border clamp, output in [0,1].
Raster warp(const Raster& img, const FlowField& flow);

/// Binary flow container: magic "FCSFLOW1", H and W as little-endian int32,
/// then two float32 planes (dx, dy).
void save_flow(const FlowField& f, const std::string& path);
FlowField load_flow(const std::string& path);

}  // namespace fcsin
