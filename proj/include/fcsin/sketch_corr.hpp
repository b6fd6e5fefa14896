#pragma once

#include <utility>
#include <vector>

#include "fcsin/raster.hpp"

namespace fcsin {

/// Salient stroke point with detection confidence and a unit-norm
/// descriptor (8x8 patch of the blurred distance transform, D_p = 64).
struct Keypoint {
  double x = 0.0, y = 0.0;
  double confidence = 0.0;
  std::vector<double> desc;
};

struct MatchPair {
  int index_a = -1, index_b = -1;
  double confidence = 0.0;
};

/// Per-timestamp stack of trace rasters, one 1-channel map per t.
struct GuidanceTrace {
  int h = 0, w = 0;
  std::vector<double> timestamps;
  std::vector<Raster> maps;

  int depth() const { return int(maps.size()); }
};

struct KeypointParams {
  int max_n = 512;
  double mask_blur_sigma = 1.0;
  double harris_smooth_sigma = 1.5;
  double harris_k = 0.04;
  int nms_radius = 4;
};

struct MatchParams {
  double tau = 0.5;
  double sigma_xy = 64.0;  // callers set 0.25 * max(H, W)
};

/// Harris corners on the blurred stroke mask; empty on a blank sketch.
std::vector<Keypoint> detect_keypoints(const Raster& sketch, int max_n,
                                       const KeypointParams& p = {});

/// Soft mutual-nearest matching on descriptor + coordinate similarity,
/// keeping mutual pairs with confidence above theta, one-to-one.
std::vector<MatchPair> match_keypoints(const std::vector<Keypoint>& ka,
                                       const std::vector<Keypoint>& kb,
                                       double theta, const MatchParams& p);

/// Linear trace position: ((1-t)*pa + t*pb). Requires t in [0,1].
std::pair<double, double> track_point(const Keypoint& pa, const Keypoint& pb, double t);

/// Splat each tracked match as a confidence-scaled Gaussian (sigma 1 px,
/// truncated at 3 sigma), combined by max; one raster per timestamp.
GuidanceTrace rasterize_traces(const std::vector<MatchPair>& matches,
                               const std::vector<Keypoint>& ka,
                               const std::vector<Keypoint>& kb,
                               const std::vector<double>& timestamps,
                               int h, int w);

/// Side-by-side keyframes with match lines colour-mapped by confidence
/// (red high, blue low).
Raster match_overlay(const Raster& a, const Raster& b,
                     const std::vector<Keypoint>& ka,
                     const std::vector<Keypoint>& kb,
                     const std::vector<MatchPair>& matches);

}  // namespace fcsin
