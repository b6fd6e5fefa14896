#include "fcsin/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

// Plain single-threaded references. Tests assert the OpenMP kernels match
// these exactly; the benchmark target times one against the other.

namespace fcsin::kernels::serial {

namespace {
std::vector<double> gauss_taps(double sigma) {
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}
inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
}  // namespace

void gaussian_blur(const double* src, double* dst, int h, int w, int c, double sigma) {
  if (sigma <= 0.0) {
    std::memcpy(dst, src, sizeof(double) * size_t(h) * w * c);
    return;
  }
  const std::vector<double> k = gauss_taps(sigma);
  const int radius = (int(k.size()) - 1) / 2;
  std::vector<double> tmp(size_t(h) * w * c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * src[(size_t(y) * w + clampi(x + i, 0, w - 1)) * c + ch];
        tmp[(size_t(y) * w + x) * c + ch] = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * tmp[(size_t(clampi(y + i, 0, h - 1)) * w + x) * c + ch];
        dst[(size_t(y) * w + x) * c + ch] = acc;
      }
}

void conv2d_forward(const double* in, int h, int w, int ci,
                    const double* wgt, int kh, int kw, int co,
                    const double* bias, int stride, int pad, double* out) {
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      double* op = out + (size_t(oy) * ow + ox) * co;
      for (int f = 0; f < co; ++f) op[f] = bias ? bias[f] : 0.0;
      for (int ky = 0; ky < kh; ++ky) {
        int y = oy * stride + ky - pad;
        if (y < 0 || y >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          int x = ox * stride + kx - pad;
          if (x < 0 || x >= w) continue;
          for (int g = 0; g < ci; ++g) {
            double v = in[(size_t(y) * w + x) * ci + g];
            const double* wrow = wgt + (((size_t(ky) * kw + kx) * ci) + g) * co;
            for (int f = 0; f < co; ++f) op[f] += v * wrow[f];
          }
        }
      }
    }
}

void conv2d_backward(const double* in, int h, int w, int ci,
                     const double* wgt, int kh, int kw, int co,
                     int stride, int pad,
                     const double* grad_out,
                     double* grad_in, double* grad_wgt, double* grad_bias) {
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  if (grad_in) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double* gp = grad_in + (size_t(y) * w + x) * ci;
        for (int g = 0; g < ci; ++g) gp[g] = 0.0;
        for (int ky = 0; ky < kh; ++ky) {
          int num = y + pad - ky;
          if (num < 0 || num % stride != 0) continue;
          int oy = num / stride;
          if (oy >= oh) continue;
          for (int kx = 0; kx < kw; ++kx) {
            int numx = x + pad - kx;
            if (numx < 0 || numx % stride != 0) continue;
            int ox = numx / stride;
            if (ox >= ow) continue;
            const double* go = grad_out + (size_t(oy) * ow + ox) * co;
            for (int g = 0; g < ci; ++g) {
              const double* wrow = wgt + (((size_t(ky) * kw + kx) * ci) + g) * co;
              double acc = 0.0;
              for (int f = 0; f < co; ++f) acc += go[f] * wrow[f];
              gp[g] += acc;
            }
          }
        }
      }
  }
  if (grad_wgt) {
    for (int f = 0; f < co; ++f)
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx)
          for (int g = 0; g < ci; ++g) {
            double acc = 0.0;
            for (int oy = 0; oy < oh; ++oy) {
              int y = oy * stride + ky - pad;
              if (y < 0 || y >= h) continue;
              for (int ox = 0; ox < ow; ++ox) {
                int x = ox * stride + kx - pad;
                if (x < 0 || x >= w) continue;
                acc += in[(size_t(y) * w + x) * ci + g] *
                       grad_out[(size_t(oy) * ow + ox) * co + f];
              }
            }
            grad_wgt[(((size_t(ky) * kw + kx) * ci) + g) * co + f] = acc;
          }
  }
  if (grad_bias) {
    for (int f = 0; f < co; ++f) {
      double acc = 0.0;
      for (size_t i = 0; i < size_t(oh) * ow; ++i) acc += grad_out[i * co + f];
      grad_bias[f] = acc;
    }
  }
}

void deconv2_forward(const double* in, int h, int w, int ci,
                     const double* wgt, int co, const double* bias, double* out) {
  const int ow = 2 * w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ry = 0; ry < 2; ++ry)
        for (int rx = 0; rx < 2; ++rx) {
          double* op = out + (size_t(2 * y + ry) * ow + (2 * x + rx)) * co;
          for (int f = 0; f < co; ++f) op[f] = bias ? bias[f] : 0.0;
          for (int g = 0; g < ci; ++g) {
            double v = in[(size_t(y) * w + x) * ci + g];
            const double* wrow = wgt + (((size_t(ry) * 2 + rx) * ci) + g) * co;
            for (int f = 0; f < co; ++f) op[f] += v * wrow[f];
          }
        }
}

void attention_forward(const double* q, const double* k, const double* v,
                       int nw, int t, int c, int heads,
                       double* attn, double* out) {
  const int dh = c / heads;
  const double inv_sqrt_d = 1.0 / std::sqrt(double(dh));
  for (int wnd = 0; wnd < nw; ++wnd) {
    const double* qw = q + size_t(wnd) * t * c;
    const double* kw = k + size_t(wnd) * t * c;
    const double* vw = v + size_t(wnd) * t * c;
    double* ow = out + size_t(wnd) * t * c;
    for (int hd = 0; hd < heads; ++hd) {
      const int off = hd * dh;
      double* aw = attn + ((size_t(wnd) * heads + hd) * t) * t;
      for (int i = 0; i < t; ++i) {
        double* arow = aw + size_t(i) * t;
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < t; ++j) {
          double s = 0.0;
          for (int d = 0; d < dh; ++d)
            s += qw[size_t(i) * c + off + d] * kw[size_t(j) * c + off + d];
          arow[j] = s * inv_sqrt_d;
          mx = std::max(mx, arow[j]);
        }
        double denom = 0.0;
        for (int j = 0; j < t; ++j) {
          arow[j] = std::exp(arow[j] - mx);
          denom += arow[j];
        }
        for (int j = 0; j < t; ++j) arow[j] /= denom;
        for (int d = 0; d < dh; ++d) {
          double acc = 0.0;
          for (int j = 0; j < t; ++j) acc += arow[j] * vw[size_t(j) * c + off + d];
          ow[size_t(i) * c + off + d] = acc;
        }
      }
    }
  }
}

void warp_bilinear(const double* img, int h, int w, int c,
                   const double* flow, double* out) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = flow[(size_t(y) * w + x) * 2 + 0];
      const double dy = flow[(size_t(y) * w + x) * 2 + 1];
      double sx = std::min(std::max(x + dx, 0.0), double(w - 1));
      double sy = std::min(std::max(y + dy, 0.0), double(h - 1));
      int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
      int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      double fx = sx - x0, fy = sy - y0;
      for (int ch = 0; ch < c; ++ch) {
        double top = (1.0 - fx) * img[(size_t(y0) * w + x0) * c + ch] +
                     fx * img[(size_t(y0) * w + x1) * c + ch];
        double bot = (1.0 - fx) * img[(size_t(y1) * w + x0) * c + ch] +
                     fx * img[(size_t(y1) * w + x1) * c + ch];
        double vv = (1.0 - fy) * top + fy * bot;
        out[(size_t(y) * w + x) * c + ch] = std::min(1.0, std::max(0.0, vv));
      }
    }
}

void sad_block_search(const double* a, const double* b, int h, int w,
                      int block, int radius, const double* prior,
                      int gh, int gw, double* best) {
  for (int by = 0; by < gh; ++by)
    for (int bx = 0; bx < gw; ++bx) {
      const int y0 = by * block, y1 = std::min(h, y0 + block);
      const int x0 = bx * block, x1 = std::min(w, x0 + block);
      const int pdx = int(std::lround(prior[(size_t(by) * gw + bx) * 2 + 0]));
      const int pdy = int(std::lround(prior[(size_t(by) * gw + bx) * 2 + 1]));
      double best_cost = std::numeric_limits<double>::infinity();
      int best_dx = pdx, best_dy = pdy;
      long best_l2 = long(pdx) * pdx + long(pdy) * pdy;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int tdx = pdx + dx, tdy = pdy + dy;
          double cost = 0.0;
          for (int y = y0; y < y1; ++y) {
            const int ys = clampi(y + tdy, 0, h - 1);
            for (int x = x0; x < x1; ++x) {
              const int xs = clampi(x + tdx, 0, w - 1);
              cost += std::abs(a[size_t(y) * w + x] - b[size_t(ys) * w + xs]);
            }
          }
          const long l2 = long(tdx) * tdx + long(tdy) * tdy;
          bool better = cost < best_cost;
          if (!better && cost == best_cost) {
            if (l2 < best_l2) better = true;
            else if (l2 == best_l2 &&
                     (tdy < best_dy || (tdy == best_dy && tdx < best_dx)))
              better = true;
          }
          if (better) {
            best_cost = cost;
            best_dx = tdx;
            best_dy = tdy;
            best_l2 = l2;
          }
        }
      best[(size_t(by) * gw + bx) * 2 + 0] = best_dx;
      best[(size_t(by) * gw + bx) * 2 + 1] = best_dy;
    }
}

}  // namespace fcsin::kernels::serial
