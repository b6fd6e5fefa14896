#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fcsin/pixel_flow.hpp"
#include "fcsin/raster.hpp"

namespace fcsin {

struct Region {
  int id = 0;
  long area = 0;
  double cx = 0.0, cy = 0.0;        // centroid, pixel-centre convention
  std::vector<double> desc;         // D_r = 12, see region_descriptor
};

/// Label map over non-stroke pixels (0 = stroke) plus per-region geometry.
struct RegionMap {
  int h = 0, w = 0;
  std::vector<int> labels;
  std::vector<uint8_t> stroke;
  std::vector<Region> regions;

  const Region& region(int id) const;
};

struct RegionPair {
  int id_a = 0, id_b = 0;
  double cost = 0.0;
};

/// Trapped-ball segmentation with a descending radius schedule. Remaining
/// free pixels join the geodesically nearest labelled region; free pockets
/// no ball can seed become their own regions. Deterministic raster order.
RegionMap trapped_ball_segment(const Raster& sketch,
                               const std::vector<int>& radii = {4, 3, 2, 1});

/// 12-d geometric descriptor: [area/(H*W), cx/W, cy/H, 7 log-scaled Hu
/// moments, boundary stroke density, eccentricity].
std::vector<double> region_descriptor(const RegionMap& map, int id);

/// Optimal one-to-one assignment (Hungarian) under the weighted descriptor
/// distance; pairs with cost above `accept` are dropped.
std::vector<RegionPair> match_regions(const RegionMap& ma, const RegionMap& mb,
                                      double accept = 1.5);

/// Minimum-cost one-to-one assignment for a dense cost matrix (rows x cols);
/// returns per-row assigned column or -1. Exposed for the oracle tests.
std::vector<int> hungarian(const std::vector<double>& cost, int rows, int cols);

/// Per matched pair with centroid displacement v: F_{t->1} += (1-t)*v over
/// region a's mask, F_{t->0} += -t*v over region b's mask. Requires t in (0,1).
std::pair<FlowField, FlowField> aggregate_region_flow(
    const std::vector<RegionPair>& pairs, const RegionMap& ma,
    const RegionMap& mb, double t, int h, int w);

/// Region-refined keyframes (warps with the aggregated fields).
std::pair<Raster, Raster> refine_keyframes_regional(const Raster& i0, const Raster& i1,
                                                    const FlowField& flow_t0,
                                                    const FlowField& flow_t1);

/// Seeded colour-per-label overlay for debugging.
Raster region_overlay(const RegionMap& map, uint64_t seed);

}  // namespace fcsin
