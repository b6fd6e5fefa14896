#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcsin/raster.hpp"

namespace fcsin {

/// Three consecutive sketch frames; frame_mid is the interpolation target.
struct Triplet {
  Raster frame0, frame_mid, frame1;
  std::string id;

  /// Enforces equal dims, channels==1 and the white-background convention
  /// (median intensity >= 0.9).
  void validate() const;
};

struct DatasetEntry {
  std::string id;
  std::string f0, f1, f2;  // paths relative to root
};

struct DatasetIndex {
  std::string root;
  std::string split = "train";
  std::vector<DatasetEntry> entries;
  int skipped_clips = 0;

  static DatasetIndex load(const std::string& root);
  /// Checks readable files and unique ids; throws on violation.
  void validate_files() const;
  Triplet load_triplet(size_t i) const;
  void write_manifest() const;
};

struct SketchizeParams {
  double dog_sigma1 = 1.0;
  double dog_sigma2 = 1.6;
  int min_stroke_px = 12;
  double antialias_sigma = 0.0;  // 0 = keep hard {0,1} strokes
};

/// Colour frame -> 1-channel sketch: grayscale, difference-of-Gaussians
/// contour response, Otsu binarization, small-component removal, thinning
/// to 1-px skeleton, inverted to dark strokes on white.
Raster sketchize(const Raster& color, const SketchizeParams& p = {});

/// Scan frames_dir (one subdirectory per clip, or a flat directory treated
/// as a single clip) and materialize triplets (f[i], f[i+stride], f[i+2*stride])
/// under out_root/<clip>/<tid>/{frame0,frame1,frame2}.png plus index.manifest.
DatasetIndex build_dataset(const std::string& frames_dir, const std::string& out_root,
                           int stride, const std::string& split = "train");

struct AugmentParams {
  int out_w = 384;
  int out_h = 192;
  bool allow_flip = true;
};

/// Aspect-preserving resize, seed-determined crop to (out_h, out_w) and a
/// seed-determined horizontal flip applied to all three frames identically.
Triplet augment(const Triplet& t, uint64_t seed, const AugmentParams& p = {});

}  // namespace fcsin
