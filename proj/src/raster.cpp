#include "fcsin/raster.hpp"

#include <algorithm>
#include <cmath>

namespace fcsin {

Raster to_gray(const Raster& img) {
  if (img.c == 1) return img;
  Raster out(img.h, img.w, 1);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      out.at(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
                     0.114 * img.at(y, x, 2);
  return out;
}

Raster flip_horizontal(const Raster& img) {
  Raster out(img.h, img.w, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < img.c; ++ch)
        out.at(y, x, ch) = img.at(y, img.w - 1 - x, ch);
  return out;
}

Raster crop(const Raster& img, int y0, int x0, int out_h, int out_w) {
  if (y0 < 0 || x0 < 0 || y0 + out_h > img.h || x0 + out_w > img.w)
    throw ContractError("crop: window outside image");
  Raster out(out_h, out_w, img.c);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      for (int ch = 0; ch < img.c; ++ch)
        out.at(y, x, ch) = img.at(y0 + y, x0 + x, ch);
  return out;
}

Raster resize_bilinear(const Raster& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw ContractError("resize: bad target size");
  if (out_h == img.h && out_w == img.w) return img;
  Raster out(out_h, out_w, img.c);
  const double scale_y = static_cast<double>(img.h) / out_h;
  const double scale_x = static_cast<double>(img.w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * scale_y - 0.5;
    sy = std::min(std::max(sy, 0.0), static_cast<double>(img.h - 1));
    int y0 = static_cast<int>(std::floor(sy));
    int y1 = std::min(y0 + 1, img.h - 1);
    double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * scale_x - 0.5;
      sx = std::min(std::max(sx, 0.0), static_cast<double>(img.w - 1));
      int x0 = static_cast<int>(std::floor(sx));
      int x1 = std::min(x0 + 1, img.w - 1);
      double fx = sx - x0;
      for (int ch = 0; ch < img.c; ++ch) {
        double top = (1.0 - fx) * img.at(y0, x0, ch) + fx * img.at(y0, x1, ch);
        double bot = (1.0 - fx) * img.at(y1, x0, ch) + fx * img.at(y1, x1, ch);
        out.at(y, x, ch) = (1.0 - fy) * top + fy * bot;
      }
    }
  }
  return out;
}

void clamp01(Raster& img) {
  for (double& v : img.data) v = std::min(1.0, std::max(0.0, v));
}

double median_intensity(const Raster& img) {
  std::vector<double> vals(img.data);
  if (vals.empty()) return 0.0;
  size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  return vals[mid];
}

}  // namespace fcsin
