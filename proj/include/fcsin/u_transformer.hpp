#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fcsin/autodiff.hpp"
#include "fcsin/pixel_flow.hpp"
#include "fcsin/raster.hpp"
#include "fcsin/region_corr.hpp"
#include "fcsin/sketch_corr.hpp"
#include "fcsin/tensor.hpp"

namespace fcsin {

/// Network hyperparameters plus the guidance/stream switches driven by the
/// ablation flags.
struct NetConfig {
  int channels = 24;
  int scales = 3;   // CSB/CCB blocks per stream
  int window = 8;
  int heads = 2;
  int channel_cap = 96;
  std::vector<double> trace_times = {0.5};
  bool use_pixel = true, use_sketch = true, use_region = true;
  bool stream_csb = true, stream_ccb0 = true, stream_ccb1 = true;

  void validate() const;
  int trace_depth() const { return use_sketch ? int(trace_times.size()) : 0; }
  int guidance_channels() const {
    return (use_pixel ? 2 : 0) + trace_depth() + (use_region ? 2 : 0);
  }
  /// Channels of the refined-keyframe query stack feeding a CCB stream.
  int query_channels() const { return (use_pixel ? 1 : 0) + (use_region ? 1 : 0); }
  /// Feature width after encoder block s (doubling, capped).
  int scale_channels(int s) const;
  int enabled_streams() const {
    return (stream_csb ? 1 : 0) + (stream_ccb0 ? 1 : 0) + (stream_ccb1 ? 1 : 0);
  }
  /// Padding divisor so every scale windows cleanly.
  int spatial_divisor() const { return window << scales; }
};

/// Named tensors for all learnable weights.
struct ModelParams {
  std::map<std::string, Tensor> tensors;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  int64_t total_count() const;
  bool all_finite() const;
};

/// Fan-in-scaled uniform init, zero biases; each tensor is seeded from
/// (seed, name) so ablations do not reshuffle unrelated weights.
ModelParams init_params(const NetConfig& cfg, uint64_t seed);

/// Closed-form parameter count for a config; tested against construction.
int64_t expected_param_count(const NetConfig& cfg);

/// The five guidance maps consumed by the network (plus the split pixel
/// flows, kept for dumps). Ablated members stay empty.
struct GuidanceBundle {
  Raster i0dot, i1dot;    // pixel-refined keyframes
  GuidanceTrace trace;    // sketch-level traces P_t
  Raster i0ddot, i1ddot;  // region-refined keyframes
  FlowField flow_t0, flow_t1;
};

struct GuidanceParams {
  FlowParams flow;
  KeypointParams kp;
  double kp_theta = 0.5;
  double kp_tau = 0.5;
  double kp_sigma_xy_frac = 0.25;
  std::vector<int> region_radii = {4, 3, 2, 1};
  double region_accept = 1.5;
  double t_mid = 0.5;
};

GuidanceBundle extract_guidance(const Raster& i0, const Raster& i1,
                                const NetConfig& cfg, const GuidanceParams& gp);

/// Builds the multi-stream graph on g. When param_nodes is non-null the
/// parameter leaves require gradients and are exposed there by name.
autodiff::NodePtr build_network_graph(
    autodiff::Graph& g, const GuidanceBundle& bundle, const NetConfig& cfg,
    const ModelParams& params,
    std::map<std::string, autodiff::NodePtr>* param_nodes = nullptr);

/// Network-only forward on an extracted bundle.
Raster net_forward(const GuidanceBundle& bundle, const NetConfig& cfg,
                   const ModelParams& params,
                   autodiff::AttentionAudit* audit = nullptr);

/// Full pipeline: guidance extraction then the network.
Raster fcsin_forward(const Raster& i0, const Raster& i1, const NetConfig& cfg,
                     const GuidanceParams& gp, const ModelParams& params);

/// Plain Eq.-style single-window attention on [T,C] matrices
/// (d = key dimension).
Tensor attention_matrix(const Tensor& q, const Tensor& k, const Tensor& v);

/// [h,w,c] -> [K, m*m, c]; pads reflectively when dims do not divide by m.
Tensor window_partition_map(const Tensor& x, int m);
/// Inverse of window_partition_map for original dims (h, w).
Tensor window_merge_map(const Tensor& t, int m, int h, int w);

/// Standalone encoder blocks (the in-graph builders use the same kernels).
struct BlockParams {
  Tensor conv_w, conv_b;           // 3x3 stride-2 conv
  Tensor wq, wk, wv, wo;           // attention projections
};
struct CrossBlockParams {
  Tensor convx_w, convx_b, convy_w, convy_b;
  Tensor wq, wk, wv, wo;
};

/// Stride-2 conv + windowed multi-head self-attention with residual.
Tensor csb_forward(const Tensor& x, const BlockParams& p, int window, int heads);
/// Cross variant: queries from the X pyramid, keys/values from Y; returns
/// (X_{s+1}, Y_{s+1}).
std::pair<Tensor, Tensor> ccb_forward(const Tensor& x, const Tensor& y,
                                      const CrossBlockParams& p, int window, int heads);

// ---------------------------------------------------------------------------
// checkpoints ("FCSIN-CKPT-1": named little-endian f64 tensors + config text)

struct Checkpoint {
  std::string config_text;
  uint64_t seed = 0;
  int64_t step = 0;
  int epoch = 0;
  ModelParams params;
  std::map<std::string, Tensor> opt_m, opt_u;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fcsin
