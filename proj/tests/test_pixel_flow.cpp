#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "fcsin/pixel_flow.hpp"
#include "test_util.hpp"

using namespace fcsin;
using namespace fcsin::testutil;

TEST_CASE("warp with zero flow is bitwise identity") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Raster img = texture(20, 28, seed);
    FlowField zero(img.h, img.w);
    Raster out = warp(img, zero);
    REQUIRE(out.data == img.data);
  }
}

TEST_CASE("warp of a column ramp under uniform (1,0) flow") {
  const int h = 8, w = 16;
  Raster img(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(y, x) = double(x) / w;
  FlowField flow(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) flow.dx(y, x) = 1.0;
  Raster out = warp(img, flow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      REQUIRE(out.at(y, x) == doctest::Approx(double(std::min(x + 1, w - 1)) / w).epsilon(1e-12));
}

TEST_CASE("warp keeps a constant image constant and output within input range") {
  Raster white = blank(12, 12, 1.0);
  FlowField f(12, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      f.dx(y, x) = (x % 3) - 1.2;
      f.dy(y, x) = (y % 5) - 2.4;
    }
  Raster out = warp(white, f);
  for (double v : out.data) REQUIRE(v == 1.0);

  Raster img = texture(12, 12, 7);
  double lo = 1e9, hi = -1e9;
  for (double v : img.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Raster out2 = warp(img, f);
  for (double v : out2.data) {
    REQUIRE(v >= lo - 1e-12);
    REQUIRE(v <= hi + 1e-12);
  }
}

TEST_CASE("estimate_flow of identical frames is the zero field") {
  Raster a = texture(48, 64, 11);
  FlowField f = estimate_flow(a, a);
  for (double v : f.data) REQUIRE(v == 0.0);

  Raster white = blank(48, 64);
  FlowField fz = estimate_flow(white, white);
  for (double v : fz.data) REQUIRE(v == 0.0);
}

TEST_CASE("estimate_flow recovers integer shifts in the interior") {
  for (int sx : {3, -2}) {
    for (int sy : {0, 2}) {
      Raster a = texture(96, 96, 23);
      Raster b = shift(a, sx, sy);
      FlowField f = estimate_flow(a, b);
      // interior median per axis
      std::vector<double> dxs, dys;
      for (int y = 24; y < 72; ++y)
        for (int x = 24; x < 72; ++x) {
          dxs.push_back(f.dx(y, x));
          dys.push_back(f.dy(y, x));
        }
      std::nth_element(dxs.begin(), dxs.begin() + dxs.size() / 2, dxs.end());
      std::nth_element(dys.begin(), dys.begin() + dys.size() / 2, dys.end());
      REQUIRE(near(dxs[dxs.size() / 2], sx, 0.5));
      REQUIRE(near(dys[dys.size() / 2], sy, 0.5));
    }
  }
}

TEST_CASE("split_time closed forms") {
  FlowField f01(4, 4), f10(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      f01.dx(y, x) = 4.0;
      f01.dy(y, x) = 2.0;
      f10.dx(y, x) = -4.0;
      f10.dy(y, x) = -2.0;
    }
  auto [to0, to1] = split_time(f01, f10, 0.5);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      REQUIRE(to0.dx(y, x) == -2.0);
      REQUIRE(to0.dy(y, x) == -1.0);
      REQUIRE(to1.dx(y, x) == 2.0);
      REQUIRE(to1.dy(y, x) == 1.0);
    }

  FlowField z(4, 4);
  auto [z0, z1] = split_time(z, z, 0.25);
  for (double v : z0.data) REQUIRE(v == 0.0);
  for (double v : z1.data) REQUIRE(v == 0.0);

  auto [e0, e1] = split_time(f01, f10, 1e-9);
  for (double v : e0.data) REQUIRE(std::abs(v) <= 4e-9);

  REQUIRE_THROWS_AS(split_time(f01, f10, 0.0), ContractError);
  REQUIRE_THROWS_AS(split_time(f01, f10, 1.0), ContractError);
}

TEST_CASE("split_time scales linearly in t") {
  FlowField f01(3, 3), f10(3, 3);
  for (size_t i = 0; i < f01.data.size(); ++i) {
    f01.data[i] = 0.5 * double(i) - 2.0;
    f10.data[i] = 1.5 - 0.25 * double(i);
  }
  auto [a0, a1] = split_time(f01, f10, 0.2);
  auto [b0, b1] = split_time(f01, f10, 0.4);
  for (size_t i = 0; i < a0.data.size(); ++i)
    REQUIRE(b0.data[i] == doctest::Approx(2.0 * a0.data[i]).epsilon(1e-12));
}

TEST_CASE("flow dump round trip and magic") {
  FlowField f(6, 9);
  for (size_t i = 0; i < f.data.size(); ++i) f.data[i] = 0.125 * double(i) - 3.0;
  std::string path = (std::filesystem::temp_directory_path() / "t.fcsflow").string();
  save_flow(f, path);
  FlowField g = load_flow(path);
  REQUIRE(g.h == f.h);
  REQUIRE(g.w == f.w);
  for (size_t i = 0; i < f.data.size(); ++i)
    REQUIRE(g.data[i] == doctest::Approx(f.data[i]).epsilon(1e-6));
  // header bytes
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  char magic[8];
  REQUIRE(std::fread(magic, 1, 8, fp) == 8);
  std::fclose(fp);
  REQUIRE(std::string(magic, 8) == "FCSFLOW1");
  std::filesystem::remove(path);
}

TEST_CASE("estimate_flow rejects mismatched inputs") {
  Raster a = blank(16, 16), b = blank(16, 20);
  REQUIRE_THROWS_AS(estimate_flow(a, b), ContractError);
}
