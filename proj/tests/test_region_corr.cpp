#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <random>

#include "fcsin/region_corr.hpp"
#include "test_util.hpp"

using namespace fcsin;
using namespace fcsin::testutil;

namespace {

// brute-force minimum assignment (rows <= 8), lexicographically smallest
std::pair<double, std::vector<int>> brute_force_assignment(
    const std::vector<double>& cost, int rows, int cols) {
  std::vector<int> perm(cols);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  std::vector<int> best_assign;
  do {
    double acc = 0.0;
    for (int i = 0; i < rows; ++i) acc += cost[size_t(i) * cols + perm[i]];
    if (acc < best) {
      best = acc;
      best_assign.assign(perm.begin(), perm.begin() + rows);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_assign};
}

}  // namespace

TEST_CASE("trapped ball: all-white frame is one region covering every pixel") {
  RegionMap m = trapped_ball_segment(blank(32, 40));
  REQUIRE(m.regions.size() == 1);
  REQUIRE(m.regions[0].area == 32l * 40l);
  for (int l : m.labels) REQUIRE(l == m.regions[0].id);
}

TEST_CASE("trapped ball: all-stroke frame has no regions") {
  RegionMap m = trapped_ball_segment(blank(20, 20, 0.0));
  REQUIRE(m.regions.empty());
}

TEST_CASE("trapped ball: closed circle gives exactly two regions") {
  Raster sk = circle_sketch(64, 64, 32, 32, 14);
  RegionMap m = trapped_ball_segment(sk);
  REQUIRE(m.regions.size() == 2);
  // flood-fill oracle: inside and outside are separate components
  REQUIRE(m.labels[size_t(32) * 64 + 32] != m.labels[size_t(2) * 64 + 2]);
  REQUIRE(m.labels[size_t(32) * 64 + 32] != 0);
}

TEST_CASE("trapped ball: 1-px gap circle still gives two regions at r_min=2") {
  Raster sk = circle_sketch(64, 64, 32, 32, 14, 0.0);  // gap at angle 0
  // confirm the gap exists
  long stroke_gap = 0, stroke_full = 0;
  Raster full = circle_sketch(64, 64, 32, 32, 14);
  for (double v : sk.data) stroke_gap += v < 0.5;
  for (double v : full.data) stroke_full += v < 0.5;
  REQUIRE(stroke_gap < stroke_full);
  RegionMap m = trapped_ball_segment(sk, {4, 3, 2});
  REQUIRE(m.regions.size() == 2);
}

TEST_CASE("trapped ball: k-cell grid gives k+1 regions") {
  for (int rows : {1, 2}) {
    for (int cols : {2, 3}) {
      const int n = 96;
      Raster sk = blank(n, n);
      const int y0 = 10, x0 = 10, y1 = 80, x1 = 86;
      draw_rect(sk, y0, x0, y1, x1);
      for (int r = 1; r < rows; ++r)
        draw_hline(sk, y0 + r * (y1 - y0) / rows, x0, x1);
      for (int c = 1; c < cols; ++c)
        draw_vline(sk, x0 + c * (x1 - x0) / cols, y0, y1);
      RegionMap m = trapped_ball_segment(sk);
      REQUIRE(int(m.regions.size()) == rows * cols + 1);
    }
  }
}

TEST_CASE("trapped ball labels partition the non-stroke pixels deterministically") {
  Raster sk = circle_sketch(48, 48, 24, 24, 12);
  draw_rect(sk, 4, 4, 44, 44);
  RegionMap a = trapped_ball_segment(sk);
  RegionMap b = trapped_ball_segment(sk);
  REQUIRE(a.labels == b.labels);
  long labeled = 0, free_px = 0;
  for (size_t i = 0; i < a.labels.size(); ++i) {
    if (!a.stroke[i]) {
      ++free_px;
      REQUIRE(a.labels[i] != 0);
    } else {
      REQUIRE(a.labels[i] == 0);
    }
    labeled += a.labels[i] != 0;
  }
  REQUIRE(labeled == free_px);
  long area_sum = 0;
  for (const Region& r : a.regions) area_sum += r.area;
  REQUIRE(area_sum == free_px);
}

TEST_CASE("region count is mirror invariant") {
  Raster sk = blank(64, 80);
  draw_rect(sk, 8, 6, 40, 30);
  draw_rect(sk, 20, 44, 56, 70);
  draw_hline(sk, 30, 44, 70);
  RegionMap m1 = trapped_ball_segment(sk);
  RegionMap m2 = trapped_ball_segment(flip_horizontal(sk));
  REQUIRE(m1.regions.size() == m2.regions.size());
}

TEST_CASE("region descriptor: full-frame region") {
  RegionMap m = trapped_ball_segment(blank(40, 40));
  auto d = region_descriptor(m, m.regions[0].id);
  REQUIRE(d.size() == 12);
  REQUIRE(d[0] == 1.0);
  REQUIRE(near(d[1], 0.5, 1e-12));
  REQUIRE(near(d[2], 0.5, 1e-12));
  for (double v : d) REQUIRE(std::isfinite(v));
  REQUIRE_THROWS_AS(region_descriptor(m, 999), ContractError);
}

TEST_CASE("Hu entries are translation invariant") {
  const int n = 96;
  Raster a = blank(n, n);
  draw_rect(a, 20, 20, 44, 52);  // enclosed rectangle region
  Raster b = blank(n, n);
  draw_rect(b, 38, 30, 62, 62);  // same shape shifted by (18, 10)
  RegionMap ma = trapped_ball_segment(a);
  RegionMap mb = trapped_ball_segment(b);
  // pick the enclosed (smaller) region in each
  auto inner = [](const RegionMap& m) {
    const Region* best = &m.regions[0];
    for (const Region& r : m.regions)
      if (r.area < best->area) best = &r;
    return best;
  };
  const Region* ra = inner(ma);
  const Region* rb = inner(mb);
  REQUIRE(ra->area == rb->area);
  for (int k = 3; k < 10; ++k) REQUIRE(near(ra->desc[k], rb->desc[k], 1e-6));
}

TEST_CASE("mirrored regions share area and eccentricity entries") {
  const int n = 80;
  Raster a = blank(n, n);
  draw_rect(a, 16, 10, 60, 38);
  Raster b = flip_horizontal(a);
  RegionMap ma = trapped_ball_segment(a);
  RegionMap mb = trapped_ball_segment(b);
  auto inner = [](const RegionMap& m) {
    const Region* best = &m.regions[0];
    for (const Region& r : m.regions)
      if (r.area < best->area) best = &r;
    return best;
  };
  const Region* ra = inner(ma);
  const Region* rb = inner(mb);
  REQUIRE(near(ra->desc[0], rb->desc[0], 1e-12));   // area
  REQUIRE(near(ra->desc[11], rb->desc[11], 1e-9));  // eccentricity
}

TEST_CASE("hungarian: 2x2 closed form") {
  std::vector<double> cost{1, 10, 10, 1};
  auto assign = hungarian(cost, 2, 2);
  REQUIRE(assign[0] == 0);
  REQUIRE(assign[1] == 1);
}

TEST_CASE("hungarian equals brute force on random matrices up to 6x6") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + int(rng() % 6);
    std::vector<double> cost(size_t(n) * n);
    for (double& v : cost) v = dist(rng);
    auto assign = hungarian(cost, n, n);
    auto [best, ba] = brute_force_assignment(cost, n, n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost[size_t(i) * n + assign[i]];
    REQUIRE(total == doctest::Approx(best).epsilon(1e-12));
    REQUIRE(assign == ba);
  }
}

TEST_CASE("hungarian handles rectangular inputs") {
  // 2 rows, 3 cols: optimal picks the cheap column per row
  std::vector<double> cost{5, 1, 9, 2, 7, 3};
  auto assign = hungarian(cost, 2, 3);
  REQUIRE(assign[0] == 1);
  REQUIRE(assign[1] == 0);

  // 3 rows, 2 cols: one row stays unassigned
  std::vector<double> tall{1, 9, 8, 1, 5, 5};
  auto a2 = hungarian(tall, 3, 2);
  REQUIRE(a2[0] == 0);
  REQUIRE(a2[1] == 1);
  REQUIRE(a2[2] == -1);
}

TEST_CASE("match_regions with uneven region counts pairs the overlap") {
  Raster a = blank(72, 72);
  draw_rect(a, 8, 8, 30, 30);
  draw_rect(a, 40, 40, 62, 62);  // 3 regions: two cells + outside
  Raster b = blank(72, 72);
  draw_rect(b, 8, 8, 30, 30);  // 2 regions: one cell + outside
  RegionMap ma = trapped_ball_segment(a);
  RegionMap mb = trapped_ball_segment(b);
  REQUIRE(ma.regions.size() == 3);
  REQUIRE(mb.regions.size() == 2);
  auto pairs = match_regions(ma, mb, 5.0);
  REQUIRE(pairs.size() <= 2);
  REQUIRE(!pairs.empty());
  // one-to-one on both sides
  std::set<int> seen_a, seen_b;
  for (const RegionPair& p : pairs) {
    REQUIRE(seen_a.insert(p.id_a).second);
    REQUIRE(seen_b.insert(p.id_b).second);
  }
}

TEST_CASE("match_regions: identical maps give identity pairs at zero cost") {
  Raster sk = blank(72, 72);
  draw_rect(sk, 8, 8, 34, 34);
  draw_rect(sk, 40, 40, 66, 66);
  RegionMap m = trapped_ball_segment(sk);
  auto pairs = match_regions(m, m, 1.5);
  REQUIRE(pairs.size() == m.regions.size());
  for (const RegionPair& p : pairs) {
    REQUIRE(p.id_a == p.id_b);
    REQUIRE(near(p.cost, 0.0, 1e-12));
  }
}

TEST_CASE("match_regions: empty map gives empty pairs") {
  RegionMap empty = trapped_ball_segment(blank(16, 16, 0.0));
  RegionMap one = trapped_ball_segment(blank(16, 16));
  REQUIRE(match_regions(empty, one, 1.5).empty());
  REQUIRE(match_regions(one, empty, 1.5).empty());
}

TEST_CASE("aggregate_region_flow closed forms") {
  Raster a = blank(64, 64);
  draw_rect(a, 20, 14, 44, 38);
  Raster b = blank(64, 64);
  draw_rect(b, 20, 20, 44, 44);  // shifted +6 in x
  RegionMap ma = trapped_ball_segment(a);
  RegionMap mb = trapped_ball_segment(b);
  auto pairs = match_regions(ma, mb, 1.5);
  REQUIRE(pairs.size() == 2);

  auto [ft0, ft1] = aggregate_region_flow(pairs, ma, mb, 0.5, 64, 64);
  // find the enclosed pair
  const Region* inner_a = nullptr;
  const Region* inner_b = nullptr;
  for (const RegionPair& p : pairs) {
    const Region& ra = ma.region(p.id_a);
    if (ra.area < 64 * 64 / 2) {
      inner_a = &ra;
      inner_b = &mb.region(p.id_b);
    }
  }
  REQUIRE(inner_a != nullptr);
  double vx = inner_b->cx - inner_a->cx;
  REQUIRE(near(vx, 6.0, 0.2));
  // F_{t->1} = +(1-t) v over region a's mask
  int ya = 32, xa = 26;  // interior of rectangle a
  REQUIRE(ma.labels[size_t(ya) * 64 + xa] == inner_a->id);
  REQUIRE(near(ft1.dx(ya, xa), 0.5 * vx, 1e-9));
  REQUIRE(near(ft1.dy(ya, xa), 0.0, 0.2));
  // F_{t->0} = -t v over region b's mask
  int yb = 32, xb = 32;
  REQUIRE(mb.labels[size_t(yb) * 64 + xb] == inner_b->id);
  REQUIRE(near(ft0.dx(yb, xb), -0.5 * vx, 1e-9));

  // where both masks overlap, F_{t->0} = -(t/(1-t)) * F_{t->1} pixelwise
  for (double t : {0.25, 0.5, 0.75}) {
    auto [g0, g1] = aggregate_region_flow(pairs, ma, mb, t, 64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        bool in_a = ma.labels[size_t(y) * 64 + x] == inner_a->id;
        bool in_b = mb.labels[size_t(y) * 64 + x] == inner_b->id;
        if (in_a && in_b)
          REQUIRE(near(g0.dx(y, x), -(t / (1.0 - t)) * g1.dx(y, x), 1e-9));
      }
  }

  // zero pairs -> zero fields
  auto [z0, z1] = aggregate_region_flow({}, ma, mb, 0.5, 64, 64);
  for (double v : z0.data) REQUIRE(v == 0.0);
  for (double v : z1.data) REQUIRE(v == 0.0);

  // stationary: identical maps, v = 0
  auto self_pairs = match_regions(ma, ma, 1.5);
  auto [s0, s1] = aggregate_region_flow(self_pairs, ma, ma, 0.5, 64, 64);
  for (double v : s0.data) REQUIRE(v == 0.0);
  for (double v : s1.data) REQUIRE(v == 0.0);

  REQUIRE_THROWS_AS(aggregate_region_flow(pairs, ma, mb, 0.0, 64, 64), ContractError);
}

TEST_CASE("refine_keyframes_regional: zero fields are identity; blank stays blank") {
  Raster a = blank(48, 48);
  draw_rect(a, 10, 10, 30, 30);
  FlowField z(48, 48);
  auto [r0, r1] = refine_keyframes_regional(a, a, z, z);
  REQUIRE(r0.data == a.data);
  REQUIRE(r1.data == a.data);

  Raster w = blank(48, 48);
  FlowField f(48, 48, 2.0);
  auto [w0, w1] = refine_keyframes_regional(w, w, f, f);
  for (double v : w0.data) REQUIRE(v == 1.0);
  for (double v : w1.data) REQUIRE(v == 1.0);
}

TEST_CASE("region translation moves covered strokes toward the midpoint") {
  // A rectangle translated +6 px; inside region-b's mask the warped frame 0
  // must show the outline shifted +3 px. Trailing-edge pixels outside the
  // mask keep zero flow, so the check is one-sided over the mask.
  Raster a = blank(64, 64);
  draw_rect(a, 20, 14, 44, 38);
  Raster b = blank(64, 64);
  draw_rect(b, 20, 20, 44, 44);
  RegionMap ma = trapped_ball_segment(a);
  RegionMap mb = trapped_ball_segment(b);
  auto pairs = match_regions(ma, mb, 1.5);
  auto [ft0, ft1] = aggregate_region_flow(pairs, ma, mb, 0.5, 64, 64);
  auto [r0, r1] = refine_keyframes_regional(a, b, ft0, ft1);

  int inner_b = 0;
  for (const Region& r : mb.regions)
    if (r.area < 64 * 64 / 2) inner_b = r.id;
  int checked = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (mb.labels[size_t(y) * 64 + x] != inner_b) continue;
      if (r0.at(y, x) < 0.5) {
        // stroke pixel: must lie within 1 px of the +3-shifted outline
        double best = 1e9;
        for (int yy = 0; yy < 64; ++yy)
          for (int xx = 0; xx < 64; ++xx) {
            bool on = (yy == 20 || yy == 44) ? (xx >= 17 && xx <= 41)
                                             : ((xx == 17 || xx == 41) && yy >= 20 && yy <= 44);
            if (on) best = std::min(best, std::hypot(double(y - yy), double(x - xx)));
          }
        REQUIRE(best <= 1.0);
        ++checked;
      }
    }
  REQUIRE(checked > 10);  // a substantial part of the outline was carried over
}

TEST_CASE("region overlay is seeded-deterministic") {
  Raster sk = circle_sketch(48, 48, 24, 24, 12);
  RegionMap m = trapped_ball_segment(sk);
  Raster o1 = region_overlay(m, 5);
  Raster o2 = region_overlay(m, 5);
  REQUIRE(o1.data == o2.data);
  REQUIRE(o1.c == 3);
}
