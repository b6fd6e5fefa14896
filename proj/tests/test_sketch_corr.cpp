#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fcsin/sketch_corr.hpp"
#include "test_util.hpp"

using namespace fcsin;
using namespace fcsin::testutil;

namespace {

Keypoint kp(double x, double y, std::vector<double> d) {
  Keypoint k;
  k.x = x;
  k.y = y;
  k.confidence = 1.0;
  double n = 0.0;
  for (double v : d) n += v * v;
  n = std::sqrt(n);
  for (double& v : d) v /= n;
  k.desc = std::move(d);
  return k;
}

}  // namespace

TEST_CASE("detect_keypoints: blank frame yields none") {
  REQUIRE(detect_keypoints(blank(48, 48), 100).empty());
}

TEST_CASE("detect_keypoints: L corner is found near the vertex") {
  Raster sk = blank(64, 64);
  draw_hline(sk, 40, 20, 44);
  draw_vline(sk, 20, 16, 40);  // vertex at (20, 40)
  auto kps = detect_keypoints(sk, 50);
  REQUIRE(!kps.empty());
  bool found = false;
  for (const Keypoint& k : kps)
    if (std::hypot(k.x - 20.0, k.y - 40.0) <= 3.0) found = true;
  REQUIRE(found);
}

TEST_CASE("detect_keypoints: descriptors are unit-norm, confidences in (0,1]") {
  Raster sk = blank(72, 72);
  draw_rect(sk, 12, 12, 52, 52);
  draw_hline(sk, 32, 12, 52);
  auto kps = detect_keypoints(sk, 64);
  REQUIRE(!kps.empty());
  for (const Keypoint& k : kps) {
    REQUIRE(k.desc.size() == 64);
    double n = 0.0;
    for (double v : k.desc) n += v * v;
    REQUIRE(near(std::sqrt(n), 1.0, 1e-6));
    REQUIRE(k.confidence > 0.0);
    REQUIRE(k.confidence <= 1.0);
    REQUIRE(k.x >= 0.0);
    REQUIRE(k.x < 72.0);
    REQUIRE(k.y >= 0.0);
    REQUIRE(k.y < 72.0);
  }
}

TEST_CASE("match_keypoints: identical lists self-match at row-max confidence") {
  Raster sk = blank(72, 72);
  draw_rect(sk, 10, 14, 50, 60);
  auto kps = detect_keypoints(sk, 32);
  REQUIRE(kps.size() >= 2);
  MatchParams mp;
  mp.sigma_xy = 18.0;
  auto matches = match_keypoints(kps, kps, 0.5, mp);
  REQUIRE(matches.size() == kps.size());
  for (const MatchPair& m : matches) {
    REQUIRE(m.index_a == m.index_b);
    REQUIRE(near(m.confidence, 1.0, 1e-9));  // s_ii = 1 is its own row max
  }
}

TEST_CASE("match_keypoints: dissimilar far point pair stays unmatched") {
  std::vector<Keypoint> ka{kp(2, 2, {1, 0, 0, 0})};
  std::vector<Keypoint> kb{kp(90, 90, {0, 1, 0, 0})};
  MatchParams mp;
  mp.sigma_xy = 25.0;  // 0.25 * 100
  // s = exp(-2/0.5) * exp(-(88^2*2)/(2*625)) << 0.5
  auto matches = match_keypoints(ka, kb, 0.5, mp);
  REQUIRE(matches.empty());
}

TEST_CASE("match_keypoints output is a partial injection") {
  Raster a = blank(64, 64), b = blank(64, 64);
  draw_rect(a, 8, 8, 40, 40);
  draw_rect(b, 12, 12, 44, 44);
  draw_hline(a, 24, 8, 40);
  draw_hline(b, 28, 12, 44);
  auto ka = detect_keypoints(a, 64);
  auto kb = detect_keypoints(b, 64);
  MatchParams mp;
  mp.sigma_xy = 16.0;
  auto matches = match_keypoints(ka, kb, 0.1, mp);
  std::vector<int> seen_a, seen_b;
  for (const MatchPair& m : matches) {
    for (int i : seen_a) REQUIRE(i != m.index_a);
    for (int j : seen_b) REQUIRE(j != m.index_b);
    seen_a.push_back(m.index_a);
    seen_b.push_back(m.index_b);
  }
}

TEST_CASE("match_keypoints symmetry under frame swap") {
  Raster a = blank(64, 64), b = blank(64, 64);
  draw_rect(a, 8, 10, 40, 44);
  draw_rect(b, 14, 13, 46, 47);
  auto ka = detect_keypoints(a, 48);
  auto kb = detect_keypoints(b, 48);
  MatchParams mp;
  mp.sigma_xy = 16.0;
  auto fw = match_keypoints(ka, kb, 0.3, mp);
  auto bw = match_keypoints(kb, ka, 0.3, mp);
  REQUIRE(fw.size() == bw.size());
  auto key = [](const MatchPair& m) { return std::pair<int, int>(m.index_a, m.index_b); };
  std::vector<std::pair<int, int>> f, r;
  for (const auto& m : fw) f.push_back(key(m));
  for (const auto& m : bw) r.emplace_back(m.index_b, m.index_a);
  std::sort(f.begin(), f.end());
  std::sort(r.begin(), r.end());
  REQUIRE(f == r);
}

TEST_CASE("match_keypoints: empty inputs give empty output") {
  MatchParams mp;
  REQUIRE(match_keypoints({}, {}, 0.5, mp).empty());
}

TEST_CASE("track_point endpoints, midpoint and affine combination") {
  Keypoint a = kp(10, 20, {1, 0});
  Keypoint b = kp(30, 40, {1, 0});
  auto [mx, my] = track_point(a, b, 0.5);
  REQUIRE(mx == 20.0);
  REQUIRE(my == 30.0);
  auto [x0, y0] = track_point(a, b, 0.0);
  REQUIRE(x0 == a.x);
  REQUIRE(y0 == a.y);
  auto [x1, y1] = track_point(a, b, 1.0);
  REQUIRE(x1 == b.x);
  REQUIRE(y1 == b.y);

  Keypoint p = kp(0, 0, {1, 0});
  Keypoint q = kp(8, 4, {1, 0});
  auto [qx, qy] = track_point(p, q, 0.25);
  REQUIRE(qx == 2.0);
  REQUIRE(qy == 1.0);

  REQUIRE_THROWS_AS(track_point(a, b, -0.1), ContractError);
  REQUIRE_THROWS_AS(track_point(a, b, 1.1), ContractError);
}

TEST_CASE("track_point commutes with horizontal coordinate flips") {
  const double w = 100.0;
  Keypoint a = kp(12, 30, {1, 0}), b = kp(40, 50, {1, 0});
  Keypoint fa = kp(w - 1 - a.x, a.y, {1, 0}), fb = kp(w - 1 - b.x, b.y, {1, 0});
  for (double t : {0.2, 0.5, 0.8}) {
    auto [x, y] = track_point(a, b, t);
    auto [fx, fy] = track_point(fa, fb, t);
    REQUIRE(near(fx, w - 1 - x, 1e-12));
    REQUIRE(fy == y);
  }
}

TEST_CASE("rasterize_traces: zero matches, peak location, stack depth") {
  std::vector<Keypoint> ka{kp(10, 20, {1, 0})}, kb{kp(30, 40, {1, 0})};

  GuidanceTrace empty = rasterize_traces({}, ka, kb, {0.5}, 48, 48);
  REQUIRE(empty.depth() == 1);
  for (double v : empty.maps[0].data) REQUIRE(v == 0.0);

  std::vector<MatchPair> one{{0, 0, 1.0}};
  GuidanceTrace tr = rasterize_traces(one, ka, kb, {0.5}, 64, 64);
  REQUIRE(tr.maps[0].at(30, 20) == 1.0);  // midpoint of (10,20)-(30,40) is (20,30)
  int best_y = -1, best_x = -1;
  double best = -1.0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (tr.maps[0].at(y, x) > best) {
        best = tr.maps[0].at(y, x);
        best_y = y;
        best_x = x;
      }
  REQUIRE(best_x == 20);
  REQUIRE(best_y == 30);

  GuidanceTrace three = rasterize_traces(one, ka, kb, {0.25, 0.5, 0.75}, 64, 64);
  REQUIRE(three.depth() == 3);
  GuidanceTrace two = rasterize_traces(one, ka, kb, {1.0 / 3, 2.0 / 3}, 64, 64);
  REQUIRE(two.depth() == 2);
}

TEST_CASE("rasterize_traces values stay in [0,1]; mass grows with matches") {
  Raster a = blank(64, 64), b = blank(64, 64);
  draw_rect(a, 8, 8, 40, 40);
  draw_rect(b, 10, 10, 42, 42);
  auto ka = detect_keypoints(a, 32);
  auto kb = detect_keypoints(b, 32);
  MatchParams mp;
  mp.sigma_xy = 16.0;
  auto matches = match_keypoints(ka, kb, 0.1, mp);
  REQUIRE(matches.size() >= 2);
  GuidanceTrace full = rasterize_traces(matches, ka, kb, {0.5}, 64, 64);
  std::vector<MatchPair> fewer(matches.begin(), matches.end() - 1);
  GuidanceTrace part = rasterize_traces(fewer, ka, kb, {0.5}, 64, 64);
  double mass_full = 0.0, mass_part = 0.0;
  for (double v : full.maps[0].data) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    mass_full += v;
  }
  for (double v : part.maps[0].data) mass_part += v;
  REQUIRE(mass_full >= mass_part);
}

TEST_CASE("identical keyframes splat on the original keypoint coordinates") {
  Raster a = blank(64, 64);
  draw_rect(a, 12, 16, 44, 52);
  auto ka = detect_keypoints(a, 16);
  MatchParams mp;
  mp.sigma_xy = 16.0;
  auto matches = match_keypoints(ka, ka, 0.5, mp);
  GuidanceTrace tr = rasterize_traces(matches, ka, ka, {0.5}, 64, 64);
  for (const MatchPair& m : matches) {
    int x = int(ka[m.index_a].x), y = int(ka[m.index_a].y);
    REQUIRE(tr.maps[0].at(y, x) == doctest::Approx(m.confidence).epsilon(1e-12));
  }
}

TEST_CASE("match overlay has side-by-side layout") {
  Raster a = blank(32, 40), b = blank(32, 40);
  draw_rect(a, 4, 4, 20, 20);
  draw_rect(b, 6, 6, 22, 22);
  auto ka = detect_keypoints(a, 8);
  auto kb = detect_keypoints(b, 8);
  MatchParams mp;
  mp.sigma_xy = 10.0;
  auto matches = match_keypoints(ka, kb, 0.1, mp);
  Raster ov = match_overlay(a, b, ka, kb, matches);
  REQUIRE(ov.w == 80);
  REQUIRE(ov.h == 32);
  REQUIRE(ov.c == 3);
}
