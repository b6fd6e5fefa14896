#pragma once

#include <string>
#include <vector>

#include "fcsin/config.hpp"
#include "fcsin/frames_io.hpp"
#include "fcsin/raster.hpp"

namespace fcsin {

/// 10*log10(1/MSE) on [0,1] images, capped at 99 dB for zero MSE.
double psnr(const Raster& pred, const Raster& target);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
/// dynamic range 1, averaged over valid window centres.
double ssim(const Raster& pred, const Raster& target);

/// Interpolation error: RMS pixel difference scaled by 1e2.
double interpolation_error(const Raster& pred, const Raster& target);

/// Chamfer distance between stroke sets (intensity < 0.5): symmetric mean
/// squared nearest-neighbour distance, normalized by (H^2+W^2), scaled 1e4.
/// Both sets empty -> 0; exactly one empty -> 1e4.
double chamfer_distance(const Raster& pred, const Raster& target);

struct TripletMetrics {
  std::string id;
  double psnr = 0.0, ssim = 0.0, ie = 0.0, cd = 0.0;
};

struct MetricsReport {
  std::vector<TripletMetrics> rows;
  TripletMetrics aggregate;  // arithmetic means, id = "mean"
  std::string config_fingerprint;

  std::string summary_table() const;  // PSNR / SSIM / IE / CD column order
  void write_csv(const std::string& path) const;
  void write_summary(const std::string& path) const;
};

struct EvaluateOptions {
  bool predict_target = false;  // oracle pass-through (perfect predictor)
  std::string dump_dir;         // when set, predictions are written there
};

/// Runs the model over every triplet and reports all four metrics.
MetricsReport evaluate(const std::string& checkpoint_path, const DatasetIndex& data,
                       const EvaluateOptions& opt = {});

}  // namespace fcsin
