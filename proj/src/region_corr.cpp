#include "fcsin/region_corr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

namespace fcsin {

const Region& RegionMap::region(int id) const {
  for (const Region& r : regions)
    if (r.id == id) return r;
  throw ContractError("region id not present: " + std::to_string(id));
}

namespace {

std::vector<std::pair<int, int>> disk_offsets(int r) {
  std::vector<std::pair<int, int>> out;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dy * dy + dx * dx <= r * r) out.emplace_back(dy, dx);
  return out;
}

}  // namespace

RegionMap trapped_ball_segment(const Raster& sketch, const std::vector<int>& radii) {
  if (sketch.c != 1) throw ContractError("trapped_ball_segment: expects 1-channel sketch");
  for (size_t i = 0; i + 1 < radii.size(); ++i)
    if (radii[i] <= radii[i + 1])
      throw ContractError("trapped_ball_segment: radii must be strictly descending");
  for (int r : radii)
    if (r < 1) throw ContractError("trapped_ball_segment: radii must be >= 1");

  const int h = sketch.h, w = sketch.w;
  RegionMap map;
  map.h = h;
  map.w = w;
  map.stroke.resize(size_t(h) * w);
  map.labels.assign(size_t(h) * w, 0);
  for (size_t i = 0; i < map.stroke.size(); ++i)
    map.stroke[i] = sketch.data[i] < 0.5 ? 1 : 0;

  auto idx = [&](int y, int x) { return size_t(y) * w + x; };
  auto free_unlabeled = [&](int y, int x) {
    return !map.stroke[idx(y, x)] && map.labels[idx(y, x)] == 0;
  };

  int next_label = 0;
  std::deque<std::pair<int, int>> queue;

  for (int r : radii) {
    auto disk = disk_offsets(r);
    // erosion of the yet-unlabeled free space by the disk
    // (out-of-bounds neighbours are ignored)
    std::vector<uint8_t> eroded(size_t(h) * w, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!free_unlabeled(y, x)) continue;
        bool fits = true;
        for (auto [dy, dx] : disk) {
          int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (!free_unlabeled(ny, nx)) {
            fits = false;
            break;
          }
        }
        eroded[idx(y, x)] = fits;
      }
    // flood fill components of the eroded set (4-connectivity), then
    // dilate each by the same disk onto unlabeled free pixels
    std::vector<uint8_t> visited(size_t(h) * w, 0);
    for (int sy = 0; sy < h; ++sy)
      for (int sx = 0; sx < w; ++sx) {
        if (!eroded[idx(sy, sx)] || visited[idx(sy, sx)]) continue;
        ++next_label;
        std::vector<std::pair<int, int>> comp;
        visited[idx(sy, sx)] = 1;
        queue.clear();
        queue.emplace_back(sy, sx);
        while (!queue.empty()) {
          auto [cy, cx] = queue.front();
          queue.pop_front();
          comp.emplace_back(cy, cx);
          const int dy4[] = {-1, 0, 0, 1};
          const int dx4[] = {0, -1, 1, 0};
          for (int k = 0; k < 4; ++k) {
            int ny = cy + dy4[k], nx = cx + dx4[k];
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            if (eroded[idx(ny, nx)] && !visited[idx(ny, nx)]) {
              visited[idx(ny, nx)] = 1;
              queue.emplace_back(ny, nx);
            }
          }
        }
        for (auto [cy, cx] : comp)
          for (auto [dy, dx] : disk) {
            int ny = cy + dy, nx = cx + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            if (free_unlabeled(ny, nx)) map.labels[idx(ny, nx)] = next_label;
          }
      }
  }

  // remaining free pixels join the geodesically nearest labeled region
  queue.clear();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (map.labels[idx(y, x)] != 0) queue.emplace_back(y, x);
  while (!queue.empty()) {
    auto [cy, cx] = queue.front();
    queue.pop_front();
    const int dy4[] = {-1, 0, 0, 1};
    const int dx4[] = {0, -1, 1, 0};
    for (int k = 0; k < 4; ++k) {
      int ny = cy + dy4[k], nx = cx + dx4[k];
      if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
      if (free_unlabeled(ny, nx)) {
        map.labels[idx(ny, nx)] = map.labels[idx(cy, cx)];
        queue.emplace_back(ny, nx);
      }
    }
  }

  // free pockets unreachable by any ball become their own regions
  for (int sy = 0; sy < h; ++sy)
    for (int sx = 0; sx < w; ++sx) {
      if (!free_unlabeled(sy, sx)) continue;
      ++next_label;
      map.labels[idx(sy, sx)] = next_label;
      queue.clear();
      queue.emplace_back(sy, sx);
      while (!queue.empty()) {
        auto [cy, cx] = queue.front();
        queue.pop_front();
        const int dy4[] = {-1, 0, 0, 1};
        const int dx4[] = {0, -1, 1, 0};
        for (int k = 0; k < 4; ++k) {
          int ny = cy + dy4[k], nx = cx + dx4[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (free_unlabeled(ny, nx)) {
            map.labels[idx(ny, nx)] = next_label;
            queue.emplace_back(ny, nx);
          }
        }
      }
    }

  // geometry (labels may be sparse if a seed never claimed pixels; keep
  // only labels that own at least one pixel, renumbered densely)
  std::vector<long> area(next_label + 1, 0);
  std::vector<double> sx_sum(next_label + 1, 0.0), sy_sum(next_label + 1, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int l = map.labels[idx(y, x)];
      if (l == 0) continue;
      ++area[l];
      sx_sum[l] += x + 0.5;
      sy_sum[l] += y + 0.5;
    }
  std::vector<int> renum(next_label + 1, 0);
  int dense = 0;
  for (int l = 1; l <= next_label; ++l)
    if (area[l] > 0) renum[l] = ++dense;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      map.labels[idx(y, x)] = renum[map.labels[idx(y, x)]];
  for (int l = 1; l <= next_label; ++l) {
    if (area[l] == 0) continue;
    Region r;
    r.id = renum[l];
    r.area = area[l];
    r.cx = sx_sum[l] / area[l];
    r.cy = sy_sum[l] / area[l];
    map.regions.push_back(r);
  }
  for (Region& r : map.regions) r.desc = region_descriptor(map, r.id);
  return map;
}

std::vector<double> region_descriptor(const RegionMap& map, int id) {
  const int h = map.h, w = map.w;
  long area = 0;
  double sx = 0.0, sy = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (map.labels[size_t(y) * w + x] == id) {
        ++area;
        sx += x + 0.5;
        sy += y + 0.5;
      }
  if (area == 0) throw ContractError("region id not present: " + std::to_string(id));
  const double cx = sx / area, cy = sy / area;

  // central moments up to order 3
  double mu[4][4] = {};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (map.labels[size_t(y) * w + x] != id) continue;
      double dx = (x + 0.5) - cx, dy = (y + 0.5) - cy;
      double px = 1.0;
      for (int p = 0; p <= 3; ++p) {
        double py = 1.0;
        for (int q = 0; q <= 3 - p; ++q) {
          mu[p][q] += px * py;
          py *= dy;
        }
        px *= dx;
      }
    }
  auto eta = [&](int p, int q) {
    return mu[p][q] / std::pow(mu[0][0], 1.0 + (p + q) / 2.0);
  };
  const double n20 = eta(2, 0), n02 = eta(0, 2), n11 = eta(1, 1);
  const double n30 = eta(3, 0), n03 = eta(0, 3), n21 = eta(2, 1), n12 = eta(1, 2);
  double hu[7];
  hu[0] = n20 + n02;
  hu[1] = (n20 - n02) * (n20 - n02) + 4.0 * n11 * n11;
  hu[2] = (n30 - 3 * n12) * (n30 - 3 * n12) + (3 * n21 - n03) * (3 * n21 - n03);
  hu[3] = (n30 + n12) * (n30 + n12) + (n21 + n03) * (n21 + n03);
  hu[4] = (n30 - 3 * n12) * (n30 + n12) *
              ((n30 + n12) * (n30 + n12) - 3 * (n21 + n03) * (n21 + n03)) +
          (3 * n21 - n03) * (n21 + n03) *
              (3 * (n30 + n12) * (n30 + n12) - (n21 + n03) * (n21 + n03));
  hu[5] = (n20 - n02) * ((n30 + n12) * (n30 + n12) - (n21 + n03) * (n21 + n03)) +
          4.0 * n11 * (n30 + n12) * (n21 + n03);
  hu[6] = (3 * n21 - n03) * (n30 + n12) *
              ((n30 + n12) * (n30 + n12) - 3 * (n21 + n03) * (n21 + n03)) -
          (n30 - 3 * n12) * (n21 + n03) *
              (3 * (n30 + n12) * (n30 + n12) - (n21 + n03) * (n21 + n03));

  // boundary stroke density: fraction of region boundary pixels with a
  // stroke pixel in their 8-neighbourhood
  long boundary = 0, near_stroke = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (map.labels[size_t(y) * w + x] != id) continue;
      bool is_boundary = (y == 0 || x == 0 || y == h - 1 || x == w - 1);
      const int dy4[] = {-1, 0, 0, 1};
      const int dx4[] = {0, -1, 1, 0};
      for (int k = 0; k < 4 && !is_boundary; ++k) {
        int ny = y + dy4[k], nx = x + dx4[k];
        if (map.labels[size_t(ny) * w + nx] != id) is_boundary = true;
      }
      if (!is_boundary) continue;
      ++boundary;
      bool stroke_near = false;
      for (int dy = -1; dy <= 1 && !stroke_near; ++dy)
        for (int dx = -1; dx <= 1 && !stroke_near; ++dx) {
          int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (map.stroke[size_t(ny) * w + nx]) stroke_near = true;
        }
      if (stroke_near) ++near_stroke;
    }
  double stroke_density = boundary > 0 ? double(near_stroke) / boundary : 0.0;

  // eccentricity from the covariance eigenvalues
  double a = mu[2][0] / mu[0][0], b = mu[1][1] / mu[0][0], c2 = mu[0][2] / mu[0][0];
  double disc = std::sqrt(std::max(0.0, (a - c2) * (a - c2) + 4.0 * b * b));
  double l1 = 0.5 * (a + c2 + disc), l2 = 0.5 * (a + c2 - disc);
  double ecc = l1 > 1e-12 ? std::sqrt(std::max(0.0, 1.0 - l2 / l1)) : 0.0;

  std::vector<double> d(12);
  d[0] = double(area) / (double(h) * w);
  d[1] = cx / w;
  d[2] = cy / h;
  for (int k = 0; k < 7; ++k) {
    double v = hu[k];
    double sign = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
    d[3 + k] = sign * std::log10(1.0 + std::abs(v) * 1e6);
  }
  d[10] = stroke_density;
  d[11] = ecc;
  return d;
}

// ---------------------------------------------------------------------------
// assignment

std::vector<int> hungarian(const std::vector<double>& cost, int rows, int cols) {
  // Jonker-Volgenant style shortest augmenting path, O(n^3).
  // Internally requires rows <= cols; callers with more rows transpose.
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  bool transposed = rows > cols;
  int n = transposed ? cols : rows;
  int m = transposed ? rows : cols;
  auto c_at = [&](int i, int j) {
    return transposed ? cost[size_t(j) * cols + i] : cost[size_t(i) * cols + j];
  };

  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);  // 1-based
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, INF);
    std::vector<uint8_t> used(m + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = INF;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = c_at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assign_small(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) assign_small[p[j] - 1] = j - 1;

  std::vector<int> result(rows, -1);
  if (!transposed) {
    result = assign_small;
  } else {
    for (int i = 0; i < n; ++i)
      if (assign_small[i] >= 0) result[assign_small[i]] = i;
  }

  // prefer the lexicographically smallest assignment among cost ties:
  // swap any pair of rows whose exchange keeps the total cost identical
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i1 = 0; i1 < rows; ++i1) {
      if (result[i1] < 0) continue;
      for (int i2 = i1 + 1; i2 < rows; ++i2) {
        if (result[i2] < 0 || result[i2] >= result[i1]) continue;
        double before = cost[size_t(i1) * cols + result[i1]] +
                        cost[size_t(i2) * cols + result[i2]];
        double after = cost[size_t(i1) * cols + result[i2]] +
                       cost[size_t(i2) * cols + result[i1]];
        if (after == before) {
          std::swap(result[i1], result[i2]);
          improved = true;
        }
      }
    }
  }
  return result;
}

std::vector<RegionPair> match_regions(const RegionMap& ma, const RegionMap& mb,
                                      double accept) {
  if (ma.regions.empty() || mb.regions.empty()) return {};
  static const double weights[12] = {2.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5,
                                     0.5, 0.5, 0.5, 1.0, 1.0};
  const int na = int(ma.regions.size()), nb = int(mb.regions.size());
  std::vector<double> cost(size_t(na) * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 12; ++k) {
        double d = ma.regions[i].desc[k] - mb.regions[j].desc[k];
        acc += weights[k] * d * d;
      }
      cost[size_t(i) * nb + j] = std::sqrt(acc);
    }
  std::vector<int> assign = hungarian(cost, na, nb);
  std::vector<RegionPair> out;
  for (int i = 0; i < na; ++i) {
    int j = assign[i];
    if (j < 0) continue;
    double c = cost[size_t(i) * nb + j];
    if (c > accept) continue;
    out.push_back({ma.regions[i].id, mb.regions[j].id, c});
  }
  return out;
}

std::pair<FlowField, FlowField> aggregate_region_flow(
    const std::vector<RegionPair>& pairs, const RegionMap& ma,
    const RegionMap& mb, double t, int h, int w) {
  if (!(t > 0.0 && t < 1.0)) throw ContractError("aggregate_region_flow: t in (0,1)");
  FlowField to0(h, w), to1(h, w);
  for (const RegionPair& pr : pairs) {
    const Region& ra = ma.region(pr.id_a);
    const Region& rb = mb.region(pr.id_b);
    const double vx = rb.cx - ra.cx, vy = rb.cy - ra.cy;
    // F_{t->1} over region a's mask, F_{t->0} over region b's mask
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        size_t i = size_t(y) * w + x;
        if (ma.labels[i] == pr.id_a) {
          to1.data[i * 2 + 0] += (1.0 - t) * vx;
          to1.data[i * 2 + 1] += (1.0 - t) * vy;
        }
        if (mb.labels[i] == pr.id_b) {
          to0.data[i * 2 + 0] += -t * vx;
          to0.data[i * 2 + 1] += -t * vy;
        }
      }
  }
  return {to0, to1};
}

std::pair<Raster, Raster> refine_keyframes_regional(const Raster& i0, const Raster& i1,
                                                    const FlowField& flow_t0,
                                                    const FlowField& flow_t1) {
  return {warp(i0, flow_t0), warp(i1, flow_t1)};
}

Raster region_overlay(const RegionMap& map, uint64_t seed) {
  Raster out(map.h, map.w, 3);
  int max_label = 0;
  for (int l : map.labels) max_label = std::max(max_label, l);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.15, 0.95);
  std::vector<std::array<double, 3>> colors(max_label + 1, {1.0, 1.0, 1.0});
  for (int l = 1; l <= max_label; ++l)
    colors[l] = {dist(rng), dist(rng), dist(rng)};
  for (int y = 0; y < map.h; ++y)
    for (int x = 0; x < map.w; ++x) {
      size_t i = size_t(y) * map.w + x;
      if (map.stroke[i]) {
        out.at(y, x, 0) = out.at(y, x, 1) = out.at(y, x, 2) = 0.0;
      } else {
        const auto& col = colors[map.labels[i]];
        for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = col[ch];
      }
    }
  return out;
}

}  // namespace fcsin
