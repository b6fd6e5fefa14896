#include "fcsin/sketch_corr.hpp"

#include <algorithm>
#include <cmath>

#include "fcsin/kernels.hpp"

namespace fcsin {

std::vector<Keypoint> detect_keypoints(const Raster& sketch, int max_n,
                                       const KeypointParams& p) {
  if (sketch.c != 1) throw ContractError("detect_keypoints: expects 1-channel sketch");
  if (max_n <= 0) return {};
  const int h = sketch.h, w = sketch.w;

  std::vector<double> mask(size_t(h) * w);
  std::vector<uint8_t> stroke(size_t(h) * w);
  bool any_stroke = false;
  for (size_t i = 0; i < mask.size(); ++i) {
    stroke[i] = sketch.data[i] < 0.5 ? 1 : 0;
    mask[i] = stroke[i] ? 1.0 : 0.0;
    any_stroke |= stroke[i] != 0;
  }
  if (!any_stroke) return {};

  std::vector<double> blurred(mask.size());
  kernels::gaussian_blur(mask.data(), blurred.data(), h, w, 1, p.mask_blur_sigma);

  auto bat = [&](int y, int x) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return blurred[size_t(y) * w + x];
  };
  std::vector<double> ixx(mask.size()), iyy(mask.size()), ixy(mask.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double ix = 0.5 * (bat(y, x + 1) - bat(y, x - 1));
      double iy = 0.5 * (bat(y + 1, x) - bat(y - 1, x));
      size_t i = size_t(y) * w + x;
      ixx[i] = ix * ix;
      iyy[i] = iy * iy;
      ixy[i] = ix * iy;
    }
  std::vector<double> sxx(mask.size()), syy(mask.size()), sxy(mask.size());
  kernels::gaussian_blur(ixx.data(), sxx.data(), h, w, 1, p.harris_smooth_sigma);
  kernels::gaussian_blur(iyy.data(), syy.data(), h, w, 1, p.harris_smooth_sigma);
  kernels::gaussian_blur(ixy.data(), sxy.data(), h, w, 1, p.harris_smooth_sigma);

  std::vector<double> resp(mask.size());
  double max_resp = 0.0;
  for (size_t i = 0; i < resp.size(); ++i) {
    double tr = sxx[i] + syy[i];
    resp[i] = sxx[i] * syy[i] - sxy[i] * sxy[i] - p.harris_k * tr * tr;
    max_resp = std::max(max_resp, resp[i]);
  }
  if (max_resp <= 1e-12) return {};

  // non-maximum suppression; raster-first wins on plateaus
  struct Cand {
    int y, x;
    double r;
  };
  std::vector<Cand> cands;
  const int nr = p.nms_radius;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double r = resp[size_t(y) * w + x];
      if (r <= 1e-12) continue;
      bool is_max = true;
      for (int dy = -nr; dy <= nr && is_max; ++dy)
        for (int dx = -nr; dx <= nr && is_max; ++dx) {
          if (dy == 0 && dx == 0) continue;
          int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          double rn = resp[size_t(ny) * w + nx];
          if (rn > r) is_max = false;
          else if (rn == r && (ny < y || (ny == y && nx < x))) is_max = false;
        }
      if (is_max) cands.push_back({y, x, r});
    }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.r > b.r; });
  if (int(cands.size()) > max_n) cands.resize(max_n);

  // descriptor source: blurred distance transform of the stroke set
  std::vector<double> dist2(mask.size());
  kernels::edt_squared(stroke.data(), h, w, dist2.data());
  std::vector<double> dist(mask.size());
  for (size_t i = 0; i < dist.size(); ++i) dist[i] = std::sqrt(dist2[i]);
  std::vector<double> dblur(mask.size());
  kernels::gaussian_blur(dist.data(), dblur.data(), h, w, 1, p.mask_blur_sigma);

  std::vector<Keypoint> out;
  out.reserve(cands.size());
  for (const Cand& cd : cands) {
    Keypoint kp;
    kp.x = cd.x;
    kp.y = cd.y;
    kp.confidence = cd.r / max_resp;
    kp.desc.resize(64);
    double mean = 0.0;
    int idx = 0;
    for (int dy = -4; dy <= 3; ++dy)
      for (int dx = -4; dx <= 3; ++dx) {
        int ny = std::clamp(cd.y + dy, 0, h - 1);
        int nx = std::clamp(cd.x + dx, 0, w - 1);
        kp.desc[idx] = dblur[size_t(ny) * w + nx];
        mean += kp.desc[idx];
        ++idx;
      }
    mean /= 64.0;
    double norm2 = 0.0;
    for (double& v : kp.desc) {
      v -= mean;
      norm2 += v * v;
    }
    if (norm2 < 1e-24) {
      std::fill(kp.desc.begin(), kp.desc.end(), 0.0);
      kp.desc[0] = 1.0;
    } else {
      double inv = 1.0 / std::sqrt(norm2);
      for (double& v : kp.desc) v *= inv;
    }
    out.push_back(std::move(kp));
  }
  return out;
}

std::vector<MatchPair> match_keypoints(const std::vector<Keypoint>& ka,
                                       const std::vector<Keypoint>& kb,
                                       double theta, const MatchParams& p) {
  const int na = int(ka.size()), nb = int(kb.size());
  if (na == 0 || nb == 0) return {};
  if (!ka[0].desc.empty() && !kb[0].desc.empty() &&
      ka[0].desc.size() != kb[0].desc.size())
    throw ContractError("match_keypoints: descriptor dims differ");

  // s_ij = descriptor similarity * coordinate proximity
  std::vector<double> s(size_t(na) * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      double dd = 0.0;
      for (size_t d = 0; d < ka[i].desc.size(); ++d) {
        double df = ka[i].desc[d] - kb[j].desc[d];
        dd += df * df;
      }
      double dx = ka[i].x - kb[j].x, dy = ka[i].y - kb[j].y;
      double dp = dx * dx + dy * dy;
      s[size_t(i) * nb + j] =
          std::exp(-dd / p.tau) * std::exp(-dp / (2.0 * p.sigma_xy * p.sigma_xy));
    }

  // row/column maxima and argmaxes (ties to the smallest index)
  std::vector<double> rmax(na, 0.0), cmax(nb, 0.0);
  std::vector<int> rarg(na, -1), carg(nb, -1);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      double v = s[size_t(i) * nb + j];
      if (v > rmax[i]) {
        rmax[i] = v;
        rarg[i] = j;
      }
      if (v > cmax[j]) {
        cmax[j] = v;
        carg[j] = i;
      }
    }

  // confidence: s scaled by its mutual row/column dominance
  struct Cand {
    int i, j;
    double c;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < na; ++i) {
    int j = rarg[i];
    if (j < 0 || carg[j] != i) continue;  // mutual nearest only
    double denom = std::sqrt(rmax[i] * cmax[j]);
    if (denom <= 0.0) continue;
    double sij = s[size_t(i) * nb + j];
    double c = sij * sij / denom;
    if (c > theta) cands.push_back({i, j, c});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.c != b.c) return a.c > b.c;
    int amin = std::min(a.i, a.j), bmin = std::min(b.i, b.j);
    if (amin != bmin) return amin < bmin;
    return std::max(a.i, a.j) < std::max(b.i, b.j);
  });

  std::vector<uint8_t> used_a(na, 0), used_b(nb, 0);
  std::vector<MatchPair> out;
  for (const Cand& cd : cands) {
    if (used_a[cd.i] || used_b[cd.j]) continue;
    used_a[cd.i] = used_b[cd.j] = 1;
    out.push_back({cd.i, cd.j, cd.c});
  }
  return out;
}

std::pair<double, double> track_point(const Keypoint& pa, const Keypoint& pb, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ContractError("track_point: t must be in [0,1]");
  return {(1.0 - t) * pa.x + t * pb.x, (1.0 - t) * pa.y + t * pb.y};
}

GuidanceTrace rasterize_traces(const std::vector<MatchPair>& matches,
                               const std::vector<Keypoint>& ka,
                               const std::vector<Keypoint>& kb,
                               const std::vector<double>& timestamps,
                               int h, int w) {
  if (timestamps.empty()) throw ContractError("rasterize_traces: need >= 1 timestamp");
  for (double t : timestamps)
    if (!(t > 0.0 && t < 1.0))
      throw ContractError("rasterize_traces: timestamps must be in (0,1)");

  GuidanceTrace tr;
  tr.h = h;
  tr.w = w;
  tr.timestamps = timestamps;
  for (double t : timestamps) {
    Raster map(h, w, 1, 0.0);
    for (const MatchPair& m : matches) {
      auto [px, py] = track_point(ka[m.index_a], kb[m.index_b], t);
      int y0 = std::max(0, int(std::ceil(py - 3.0)));
      int y1 = std::min(h - 1, int(std::floor(py + 3.0)));
      int x0 = std::max(0, int(std::ceil(px - 3.0)));
      int x1 = std::min(w - 1, int(std::floor(px + 3.0)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          double d2 = (x - px) * (x - px) + (y - py) * (y - py);
          if (d2 > 9.0) continue;
          double v = m.confidence * std::exp(-0.5 * d2);
          map.at(y, x) = std::max(map.at(y, x), v);
        }
    }
    tr.maps.push_back(std::move(map));
  }
  return tr;
}

Raster match_overlay(const Raster& a, const Raster& b,
                     const std::vector<Keypoint>& ka,
                     const std::vector<Keypoint>& kb,
                     const std::vector<MatchPair>& matches) {
  if (!a.same_shape(b)) throw ContractError("match_overlay: frame dims differ");
  Raster out(a.h, 2 * a.w, 3);
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        out.at(y, x, ch) = a.at(y, x, a.c == 3 ? ch : 0);
        out.at(y, x + a.w, ch) = b.at(y, x, b.c == 3 ? ch : 0);
      }
  auto draw_line = [&](double x0, double y0, double x1, double y1, double conf) {
    // red for high confidence, blue for low
    double r = conf, bcol = 1.0 - conf;
    int steps = int(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int i = 0; i <= steps; ++i) {
      double f = double(i) / steps;
      int x = int(std::lround(x0 + f * (x1 - x0)));
      int y = int(std::lround(y0 + f * (y1 - y0)));
      if (x < 0 || x >= out.w || y < 0 || y >= out.h) continue;
      out.at(y, x, 0) = r;
      out.at(y, x, 1) = 0.1;
      out.at(y, x, 2) = bcol;
    }
  };
  for (const MatchPair& m : matches)
    draw_line(ka[m.index_a].x, ka[m.index_a].y, kb[m.index_b].x + a.w,
              kb[m.index_b].y, std::clamp(m.confidence, 0.0, 1.0));
  return out;
}

}  // namespace fcsin
