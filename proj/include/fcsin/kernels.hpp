#pragma once

#include <cstdint>
#include <vector>

namespace fcsin::kernels {

// Dense numeric kernels shared by the flow estimator, the guidance
// extractors and the network. Every kernel writes each output element from
// exactly one loop iteration and keeps the inner reduction order fixed, so
// the OpenMP versions are bitwise identical to the serial references in
// kernels::serial for any thread count.

/// Separable Gaussian blur on an h x w x c interleaved buffer.
/// Border handling: replicate. radius = ceil(3*sigma).
void gaussian_blur(const double* src, double* dst, int h, int w, int c, double sigma);

/// 2D convolution, HWC layout, weights [kh][kw][ci][co], zero padding `pad`,
/// output dims oh = (h + 2*pad - kh)/stride + 1 (same for width).
/// `bias` may be null.
void conv2d_forward(const double* in, int h, int w, int ci,
                    const double* wgt, int kh, int kw, int co,
                    const double* bias, int stride, int pad, double* out);

/// Gradients for conv2d_forward. Any of the output buffers may be null to
/// skip that gradient. grad_out has the forward output dims.
void conv2d_backward(const double* in, int h, int w, int ci,
                     const double* wgt, int kh, int kw, int co,
                     int stride, int pad,
                     const double* grad_out,
                     double* grad_in, double* grad_wgt, double* grad_bias);

/// Transposed convolution with a 2x2 kernel and stride 2 (exact x2
/// upsampling; each output pixel receives exactly one kernel tap).
/// weights [2][2][ci][co]; out is 2h x 2w x co.
void deconv2_forward(const double* in, int h, int w, int ci,
                     const double* wgt, int co, const double* bias, double* out);
void deconv2_backward(const double* in, int h, int w, int ci,
                      const double* wgt, int co, const double* grad_out,
                      double* grad_in, double* grad_wgt, double* grad_bias);

/// Scaled dot-product attention over a batch of windows.
/// q,k,v: [nw][t][c]; heads must divide c. attn (softmax weights) is stored
/// as [nw][heads][t][t] for the backward pass. out: [nw][t][c].
void attention_forward(const double* q, const double* k, const double* v,
                       int nw, int t, int c, int heads,
                       double* attn, double* out);
void attention_backward(const double* q, const double* k, const double* v,
                        const double* attn, const double* grad_out,
                        int nw, int t, int c, int heads,
                        double* grad_q, double* grad_k, double* grad_v);

/// Batched matrix product: x [nw][t][ci] times w [ci][co] -> out [nw][t][co].
void matmul_batched(const double* x, const double* wgt, int nw, int t, int ci,
                    int co, double* out);
void matmul_batched_backward(const double* x, const double* wgt,
                             const double* grad_out, int nw, int t, int ci,
                             int co, double* grad_x, double* grad_wgt);

/// Backward warp with bilinear sampling and border clamp.
/// img: h x w x c; flow: h x w x 2 (dx, dy); out: h x w x c, clamped to [0,1].
void warp_bilinear(const double* img, int h, int w, int c,
                   const double* flow, double* out);

/// One pyramid level of SAD block matching between single-channel images
/// a and b. prior: [gh][gw][2] initial displacement per block; best: same
/// layout, filled with the total displacement minimizing the block SAD over
/// the integer window [-radius, radius]^2 around prior. Ties resolve to the
/// smallest |displacement|_2, then lexicographically smallest (dy, dx).
void sad_block_search(const double* a, const double* b, int h, int w,
                      int block, int radius, const double* prior,
                      int gh, int gw, double* best);

/// Exact squared Euclidean distance transform of a binary mask
/// (mask!=0 -> distance 0). Output dist2 in squared pixels.
void edt_squared(const uint8_t* mask, int h, int w, double* dist2);

namespace serial {
void gaussian_blur(const double* src, double* dst, int h, int w, int c, double sigma);
void conv2d_forward(const double* in, int h, int w, int ci,
                    const double* wgt, int kh, int kw, int co,
                    const double* bias, int stride, int pad, double* out);
void conv2d_backward(const double* in, int h, int w, int ci,
                     const double* wgt, int kh, int kw, int co,
                     int stride, int pad,
                     const double* grad_out,
                     double* grad_in, double* grad_wgt, double* grad_bias);
void deconv2_forward(const double* in, int h, int w, int ci,
                     const double* wgt, int co, const double* bias, double* out);
void attention_forward(const double* q, const double* k, const double* v,
                       int nw, int t, int c, int heads,
                       double* attn, double* out);
void warp_bilinear(const double* img, int h, int w, int c,
                   const double* flow, double* out);
void sad_block_search(const double* a, const double* b, int h, int w,
                      int block, int radius, const double* prior,
                      int gh, int gw, double* best);
}  // namespace serial

}  // namespace fcsin::kernels
