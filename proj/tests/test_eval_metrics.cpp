#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "fcsin/eval_metrics.hpp"
#include "fcsin/png_io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace fcsin;
using namespace fcsin::testutil;

namespace {

// direct windowed-formula SSIM oracle (no separable filtering)
double ssim_oracle(const Raster& a, const Raster& b) {
  const int rad = 5;
  double taps[11];
  double s = 0.0;
  for (int i = 0; i < 11; ++i) {
    taps[i] = std::exp(-0.5 * (i - rad) * (i - rad) / 2.25);
    s += taps[i];
  }
  for (double& t : taps) t /= s;
  double acc = 0.0;
  long count = 0;
  for (int y = rad; y < a.h - rad; ++y)
    for (int x = rad; x < a.w - rad; ++x) {
      double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
      for (int dy = -rad; dy <= rad; ++dy)
        for (int dx = -rad; dx <= rad; ++dx) {
          double w = taps[dy + rad] * taps[dx + rad];
          double va = a.at(y + dy, x + dx), vb = b.at(y + dy, x + dx);
          ma += w * va;
          mb += w * vb;
          maa += w * va * va;
          mbb += w * vb * vb;
          mab += w * va * vb;
        }
      double c1 = 1e-4, c2 = 9e-4;
      double num = (2 * ma * mb + c1) * (2 * (mab - ma * mb) + c2);
      double den = (ma * ma + mb * mb + c1) * ((maa - ma * ma) + (mbb - mb * mb) + c2);
      acc += num / den;
      ++count;
    }
  return acc / count;
}

// brute-force chamfer oracle
double chamfer_oracle(const Raster& a, const Raster& b) {
  std::vector<std::pair<int, int>> pa, pb;
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x) {
      if (a.at(y, x) < 0.5) pa.push_back({y, x});
      if (b.at(y, x) < 0.5) pb.push_back({y, x});
    }
  if (pa.empty() && pb.empty()) return 0.0;
  if (pa.empty() || pb.empty()) return 1e4;
  auto dir = [](const std::vector<std::pair<int, int>>& from,
                const std::vector<std::pair<int, int>>& to) {
    double acc = 0.0;
    for (auto [y, x] : from) {
      double best = 1e300;
      for (auto [ty, tx] : to)
        best = std::min(best, double(y - ty) * (y - ty) + double(x - tx) * (x - tx));
      acc += best;
    }
    return acc / double(from.size());
  };
  double norm = double(a.h) * a.h + double(a.w) * a.w;
  return 0.5 * (dir(pa, pb) + dir(pb, pa)) / norm * 1e4;
}

}  // namespace

TEST_CASE("psnr closed forms") {
  Raster a = blank(16, 16, 0.5);
  REQUIRE(psnr(a, a) == 99.0);
  Raster b = blank(16, 16, 0.6);
  REQUIRE(near(psnr(a, b), 20.0, 1e-9));
  Raster c = blank(16, 16, 1.0);
  REQUIRE(near(psnr(a, c), 10.0 * std::log10(4.0), 1e-9));
}

TEST_CASE("interpolation error closed forms") {
  Raster a = blank(16, 16, 0.5), b = blank(16, 16, 0.6);
  REQUIRE(near(interpolation_error(a, b), 10.0, 1e-9));
  REQUIRE(interpolation_error(a, a) == 0.0);
  Raster r1 = texture(16, 16, 1), r2 = texture(16, 16, 2);
  REQUIRE(interpolation_error(r1, r2) >= 0.0);
}

TEST_CASE("psnr and IE are consistently MSE-monotone") {
  Raster a = texture(24, 24, 3);
  Raster b = texture(24, 24, 4);
  Raster c = texture(24, 24, 5);
  for (double& v : c.data) v = std::min(1.0, v * 0.3 + 0.7);  // c further from a
  bool ie_less = interpolation_error(a, b) < interpolation_error(a, c);
  bool psnr_greater = psnr(a, b) > psnr(a, c);
  REQUIRE(ie_less == psnr_greater);
}

TEST_CASE("ssim basics and oracle agreement") {
  Raster a = texture(32, 32, 6);
  REQUIRE(near(ssim(a, a), 1.0, 1e-12));
  Raster b = texture(32, 32, 7);
  REQUIRE(ssim(a, b) == ssim(b, a));
  for (int trial = 0; trial < 5; ++trial) {
    Raster x = texture(32, 32, 100 + uint64_t(trial));
    Raster y = texture(32, 32, 200 + uint64_t(trial));
    REQUIRE(near(ssim(x, y), ssim_oracle(x, y), 1e-7));
  }
  // image vs its contrast negative scores low
  Raster hi = blank(32, 32, 0.9), lo = blank(32, 32, 0.1);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 16; ++x) {
      hi.at(y, x) = 0.1;
      lo.at(y, x) = 0.9;
    }
  REQUIRE(ssim(hi, lo) < 0.5);
}

TEST_CASE("chamfer distance closed form: two points 10 px apart in 100x100") {
  Raster a = blank(100, 100), b = blank(100, 100);
  a.at(50, 40) = 0.0;
  b.at(50, 50) = 0.0;
  REQUIRE(near(chamfer_distance(a, b), 50.0, 1e-12));
  REQUIRE(chamfer_distance(a, b) == chamfer_distance(b, a));
  REQUIRE(chamfer_distance(a, a) == 0.0);
}

TEST_CASE("chamfer distance sentinels") {
  Raster empty = blank(32, 32), one = blank(32, 32);
  one.at(4, 4) = 0.0;
  REQUIRE(chamfer_distance(empty, empty) == 0.0);
  REQUIRE(chamfer_distance(empty, one) == 1e4);
  REQUIRE(chamfer_distance(one, empty) == 1e4);
}

TEST_CASE("chamfer distance equals brute force on small frames") {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    Raster a = blank(48, 40), b = blank(48, 40);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 30; ++i) {
      a.at(int(rng() % 48), int(rng() % 40)) = 0.0;
      b.at(int(rng() % 48), int(rng() % 40)) = 0.0;
    }
    REQUIRE(chamfer_distance(a, b) == chamfer_oracle(a, b));
  }
}

TEST_CASE("evaluate in oracle mode reports perfect scores") {
  fs::path dir = fs::temp_directory_path() / "fcsin_eval_test";
  fs::remove_all(dir);
  fs::create_directories(dir / "clip" / "t00");
  fs::create_directories(dir / "clip" / "t01");
  std::ofstream mf(dir / "index.manifest");
  mf << "# split: test\n";
  for (int i = 0; i < 2; ++i) {
    char tid[8];
    std::snprintf(tid, sizeof tid, "t%02d", i);
    Raster f = blank(32, 32);
    draw_rect(f, 6 + i, 6, 22 + i, 22);
    for (int k = 0; k < 3; ++k)
      save_raster(f, (dir / "clip" / tid / ("frame" + std::to_string(k) + ".png")).string());
    mf << "clip/" << tid << " clip/" << tid << "/frame0.png clip/" << tid
       << "/frame1.png clip/" << tid << "/frame2.png\n";
  }
  mf.close();

  DatasetIndex idx = DatasetIndex::load(dir.string());
  EvaluateOptions opt;
  opt.predict_target = true;
  MetricsReport rep = evaluate("", idx, opt);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& r : rep.rows) {
    REQUIRE(r.psnr == 99.0);
    REQUIRE(near(r.ssim, 1.0, 1e-12));
    REQUIRE(r.ie == 0.0);
    REQUIRE(r.cd == 0.0);
  }
  // aggregate is the mean of the rows
  REQUIRE(rep.aggregate.psnr ==
          doctest::Approx((rep.rows[0].psnr + rep.rows[1].psnr) / 2).epsilon(1e-12));

  rep.write_csv((dir / "metrics.csv").string());
  rep.write_summary((dir / "summary.txt").string());
  std::ifstream csv(dir / "metrics.csv");
  std::string header;
  std::getline(csv, header);
  REQUIRE(header == "id,psnr,ssim,ie,cd");
  std::ifstream sum(dir / "summary.txt");
  std::string line, all;
  while (std::getline(sum, line)) all += line + "\n";
  REQUIRE(all.find("PSNR") != std::string::npos);
  REQUIRE(all.find("PSNR") < all.find("SSIM"));
  REQUIRE(all.find("SSIM") < all.find("IE"));
  REQUIRE(all.find("IE") < all.find("CD"));
  fs::remove_all(dir);
}

TEST_CASE("config fingerprint changes when any flag changes") {
  Config a;
  Config b;
  b.set("net.window", "4");
  REQUIRE(a.fingerprint() != b.fingerprint());
  Config c;
  REQUIRE(a.fingerprint() == c.fingerprint());
}

TEST_CASE("metric determinism and permutation invariance of the aggregate") {
  Raster a = texture(24, 24, 9), b = texture(24, 24, 10);
  REQUIRE(psnr(a, b) == psnr(a, b));
  REQUIRE(chamfer_distance(a, b) == chamfer_distance(a, b));
  double m1 = (psnr(a, b) + psnr(b, a)) / 2;
  double m2 = (psnr(b, a) + psnr(a, b)) / 2;
  REQUIRE(m1 == m2);
}
