#pragma once

// Shared synthetic-input builders for the test suites.

#include <cmath>
#include <random>

#include "fcsin/raster.hpp"

namespace fcsin::testutil {

inline Raster blank(int h, int w, double v = 1.0) { return Raster(h, w, 1, v); }

/// Seeded random texture in [0,1].
inline Raster texture(int h, int w, uint64_t seed) {
  Raster r(h, w, 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (double& v : r.data) v = dist(rng);
  return r;
}

/// Content translated by (sx, sy): out(x) = in(x - s), border filled with `fill`.
inline Raster shift(const Raster& img, int sx, int sy, double fill = 1.0) {
  Raster out(img.h, img.w, img.c, fill);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      int ys = y - sy, xs = x - sx;
      if (ys < 0 || ys >= img.h || xs < 0 || xs >= img.w) continue;
      for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(ys, xs, ch);
    }
  return out;
}

/// 1-px circle stroke (dark on white), drawn by angle stepping. When
/// gap_at_deg >= 0 the single stroke pixel at that angle is erased,
/// leaving a 1-px opening.
inline Raster circle_sketch(int h, int w, double cx, double cy, double radius,
                            double gap_at_deg = -1.0) {
  Raster r(h, w, 1, 1.0);
  const int steps = int(radius * 40) + 64;
  for (int i = 0; i < steps; ++i) {
    double a = 2.0 * M_PI * i / steps;
    int x = int(std::lround(cx + radius * std::cos(a)));
    int y = int(std::lround(cy + radius * std::sin(a)));
    if (x >= 0 && x < w && y >= 0 && y < h) r.at(y, x) = 0.0;
  }
  if (gap_at_deg >= 0.0) {
    double a = gap_at_deg * M_PI / 180.0;
    int x = int(std::lround(cx + radius * std::cos(a)));
    int y = int(std::lround(cy + radius * std::sin(a)));
    if (x >= 0 && x < w && y >= 0 && y < h) r.at(y, x) = 1.0;
  }
  return r;
}

/// Axis-aligned rectangle outline stroke.
inline void draw_rect(Raster& r, int y0, int x0, int y1, int x1) {
  for (int x = x0; x <= x1; ++x) {
    r.at(y0, x) = 0.0;
    r.at(y1, x) = 0.0;
  }
  for (int y = y0; y <= y1; ++y) {
    r.at(y, x0) = 0.0;
    r.at(y, x1) = 0.0;
  }
}

inline void draw_hline(Raster& r, int y, int x0, int x1) {
  for (int x = x0; x <= x1; ++x) r.at(y, x) = 0.0;
}
inline void draw_vline(Raster& r, int x, int y0, int y1) {
  for (int y = y0; y <= y1; ++y) r.at(y, x) = 0.0;
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace fcsin::testutil
