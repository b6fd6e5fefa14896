#include "fcsin/pixel_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fcsin/kernels.hpp"

namespace fcsin {

namespace {

// 2x2 box downsample (gray).
Raster downsample2(const Raster& img) {
  int nh = std::max(1, img.h / 2), nw = std::max(1, img.w / 2);
  Raster out(nh, nw, 1);
  for (int y = 0; y < nh; ++y)
    for (int x = 0; x < nw; ++x) {
      int y0 = 2 * y, x0 = 2 * x;
      int y1 = std::min(y0 + 1, img.h - 1), x1 = std::min(x0 + 1, img.w - 1);
      out.at(y, x) = 0.25 * (img.at(y0, x0) + img.at(y0, x1) +
                             img.at(y1, x0) + img.at(y1, x1));
    }
  return out;
}

struct Grid {
  int gh = 0, gw = 0;
  std::vector<double> data;  // [gh][gw][2]
};

// median of up to 9 grid neighbours, each flow component independently
Grid median3x3(const Grid& g) {
  Grid out = g;
  std::vector<double> vals;
  for (int by = 0; by < g.gh; ++by)
    for (int bx = 0; bx < g.gw; ++bx)
      for (int comp = 0; comp < 2; ++comp) {
        vals.clear();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            int ny = by + dy, nx = bx + dx;
            if (ny < 0 || ny >= g.gh || nx < 0 || nx >= g.gw) continue;
            vals.push_back(g.data[(size_t(ny) * g.gw + nx) * 2 + comp]);
          }
        size_t mid = vals.size() / 2;
        std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
        out.data[(size_t(by) * g.gw + bx) * 2 + comp] = vals[mid];
      }
  return out;
}

}  // namespace

FlowField estimate_flow(const Raster& a, const Raster& b, const FlowParams& p) {
  if (!a.same_shape(b)) throw ContractError("estimate_flow: dims mismatch");
  if (a.c != 1) throw ContractError("estimate_flow: expects 1-channel input");
  if (p.levels < 1 || p.block < 2 || p.radius < 1)
    throw ContractError("estimate_flow: bad parameters");

  // pyramid, index 0 = finest
  std::vector<Raster> pa{a}, pb{b};
  for (int l = 1; l < p.levels; ++l) {
    pa.push_back(downsample2(pa.back()));
    pb.push_back(downsample2(pb.back()));
  }

  Grid grid;
  for (int l = p.levels - 1; l >= 0; --l) {
    const Raster& la = pa[l];
    const Raster& lb = pb[l];
    int gh = (la.h + p.block - 1) / p.block;
    int gw = (la.w + p.block - 1) / p.block;
    Grid prior;
    prior.gh = gh;
    prior.gw = gw;
    prior.data.assign(size_t(gh) * gw * 2, 0.0);
    if (l != p.levels - 1) {
      // inherit from the coarser level: block centres map to half coordinates
      for (int by = 0; by < gh; ++by)
        for (int bx = 0; bx < gw; ++bx) {
          int cy = std::min(grid.gh - 1, by / 2);
          int cx = std::min(grid.gw - 1, bx / 2);
          prior.data[(size_t(by) * gw + bx) * 2 + 0] =
              2.0 * grid.data[(size_t(cy) * grid.gw + cx) * 2 + 0];
          prior.data[(size_t(by) * gw + bx) * 2 + 1] =
              2.0 * grid.data[(size_t(cy) * grid.gw + cx) * 2 + 1];
        }
    }
    Grid best;
    best.gh = gh;
    best.gw = gw;
    best.data.assign(size_t(gh) * gw * 2, 0.0);
    kernels::sad_block_search(la.data.data(), lb.data.data(), la.h, la.w,
                              p.block, p.radius, prior.data.data(), gh, gw,
                              best.data.data());
    grid = std::move(best);
  }

  grid = median3x3(grid);

  // densify: bilinear interpolation between block centres
  FlowField out(a.h, a.w);
  const double cb = (p.block - 1) * 0.5;
  for (int y = 0; y < a.h; ++y) {
    double gy = (y - cb) / p.block;
    gy = std::min(std::max(gy, 0.0), double(grid.gh - 1));
    int y0 = int(std::floor(gy));
    int y1 = std::min(y0 + 1, grid.gh - 1);
    double fy = gy - y0;
    for (int x = 0; x < a.w; ++x) {
      double gx = (x - cb) / p.block;
      gx = std::min(std::max(gx, 0.0), double(grid.gw - 1));
      int x0 = int(std::floor(gx));
      int x1 = std::min(x0 + 1, grid.gw - 1);
      double fx = gx - x0;
      for (int comp = 0; comp < 2; ++comp) {
        double v00 = grid.data[(size_t(y0) * grid.gw + x0) * 2 + comp];
        double v01 = grid.data[(size_t(y0) * grid.gw + x1) * 2 + comp];
        double v10 = grid.data[(size_t(y1) * grid.gw + x0) * 2 + comp];
        double v11 = grid.data[(size_t(y1) * grid.gw + x1) * 2 + comp];
        double top = (1.0 - fx) * v00 + fx * v01;
        double bot = (1.0 - fx) * v10 + fx * v11;
        out.data[(size_t(y) * a.w + x) * 2 + comp] = (1.0 - fy) * top + fy * bot;
      }
    }
  }
  return out;
}

std::pair<FlowField, FlowField> split_time(const FlowField& flow01,
                                           const FlowField& flow10, double t) {
  if (!(t > 0.0 && t < 1.0)) throw ContractError("split_time: t must be in (0,1)");
  if (flow01.h != flow10.h || flow01.w != flow10.w)
    throw ContractError("split_time: dims mismatch");
  FlowField to0(flow01.h, flow01.w), to1(flow01.h, flow01.w);
  for (size_t i = 0; i < flow01.data.size(); ++i) {
    to0.data[i] = -t * flow01.data[i];
    to1.data[i] = -(1.0 - t) * flow10.data[i];
  }
  return {to0, to1};
}

Raster warp(const Raster& img, const FlowField& flow) {
  if (img.h != flow.h || img.w != flow.w)
    throw ContractError("warp: image/flow dims mismatch");
  Raster out(img.h, img.w, img.c);
  kernels::warp_bilinear(img.data.data(), img.h, img.w, img.c,
                         flow.data.data(), out.data.data());
  return out;
}

void save_flow(const FlowField& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write flow: " + path);
  os.write("FCSFLOW1", 8);
  int32_t h = f.h, w = f.w;
  os.write(reinterpret_cast<const char*>(&h), 4);
  os.write(reinterpret_cast<const char*>(&w), 4);
  std::vector<float> plane(size_t(f.h) * f.w);
  for (int comp = 0; comp < 2; ++comp) {
    for (int y = 0; y < f.h; ++y)
      for (int x = 0; x < f.w; ++x)
        plane[size_t(y) * f.w + x] = float(f.data[(size_t(y) * f.w + x) * 2 + comp]);
    os.write(reinterpret_cast<const char*>(plane.data()),
             std::streamsize(plane.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

FlowField load_flow(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open flow: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "FCSFLOW1", 8) != 0)
    throw std::runtime_error("bad flow magic in " + path);
  int32_t h = 0, w = 0;
  is.read(reinterpret_cast<char*>(&h), 4);
  is.read(reinterpret_cast<char*>(&w), 4);
  if (!is || h <= 0 || w <= 0) throw std::runtime_error("bad flow header in " + path);
  FlowField f(h, w);
  std::vector<float> plane(size_t(h) * w);
  for (int comp = 0; comp < 2; ++comp) {
    is.read(reinterpret_cast<char*>(plane.data()),
            std::streamsize(plane.size() * sizeof(float)));
    if (!is) throw std::runtime_error("truncated flow file: " + path);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        f.data[(size_t(y) * w + x) * 2 + comp] = plane[size_t(y) * w + x];
  }
  return f;
}

}  // namespace fcsin
