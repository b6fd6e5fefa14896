// Times the OpenMP kernels against their serial references.
// Usage: fcsin_bench [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fcsin/kernels.hpp"

using namespace fcsin;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<double> randv(size_t n, uint64_t seed) {
  std::vector<double> v(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& x : v) x = dist(rng);
  return v;
}

template <typename F>
double time_ms(int repeats, F&& fn) {
  fn();  // warm up
  auto start = Clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count() / repeats;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-22s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
#ifdef _OPENMP
  std::printf("threads: %d, repeats: %d\n", omp_get_max_threads(), repeats);
#else
  std::printf("OpenMP disabled, repeats: %d\n", repeats);
#endif

  {  // conv2d forward, 192x384x24 -> 96x192x48 (stride 2)
    const int h = 192, w = 384, ci = 24, co = 48;
    auto in = randv(size_t(h) * w * ci, 1);
    auto wgt = randv(size_t(3) * 3 * ci * co, 2);
    auto bias = randv(co, 3);
    std::vector<double> out(size_t(h / 2) * (w / 2) * co);
    double s = time_ms(repeats, [&] {
      kernels::serial::conv2d_forward(in.data(), h, w, ci, wgt.data(), 3, 3, co,
                                      bias.data(), 2, 1, out.data());
    });
    double p = time_ms(repeats, [&] {
      kernels::conv2d_forward(in.data(), h, w, ci, wgt.data(), 3, 3, co,
                              bias.data(), 2, 1, out.data());
    });
    report("conv2d 3x3 s2", s, p);
  }

  {  // windowed attention, 288 windows of 64 tokens x 48 channels
    const int nw = 288, t = 64, c = 48, heads = 2;
    auto q = randv(size_t(nw) * t * c, 4);
    auto k = randv(size_t(nw) * t * c, 5);
    auto v = randv(size_t(nw) * t * c, 6);
    std::vector<double> attn(size_t(nw) * heads * t * t), out(size_t(nw) * t * c);
    double s = time_ms(repeats, [&] {
      kernels::serial::attention_forward(q.data(), k.data(), v.data(), nw, t, c,
                                         heads, attn.data(), out.data());
    });
    double p = time_ms(repeats, [&] {
      kernels::attention_forward(q.data(), k.data(), v.data(), nw, t, c, heads,
                                 attn.data(), out.data());
    });
    report("window attention", s, p);
  }

  {  // SAD block search on 256x256, radius 4
    const int h = 256, w = 256, block = 8, radius = 4;
    const int gh = h / block, gw = w / block;
    auto a = randv(size_t(h) * w, 7);
    auto b = randv(size_t(h) * w, 8);
    std::vector<double> prior(size_t(gh) * gw * 2, 0.0), best(prior.size());
    double s = time_ms(repeats, [&] {
      kernels::serial::sad_block_search(a.data(), b.data(), h, w, block, radius,
                                        prior.data(), gh, gw, best.data());
    });
    double p = time_ms(repeats, [&] {
      kernels::sad_block_search(a.data(), b.data(), h, w, block, radius,
                                prior.data(), gh, gw, best.data());
    });
    report("sad block search", s, p);
  }

  {  // warp 512x512
    const int h = 512, w = 512;
    auto img = randv(size_t(h) * w, 9);
    auto flow = randv(size_t(h) * w * 2, 10);
    std::vector<double> out(img.size());
    double s = time_ms(repeats, [&] {
      kernels::serial::warp_bilinear(img.data(), h, w, 1, flow.data(), out.data());
    });
    double p = time_ms(repeats, [&] {
      kernels::warp_bilinear(img.data(), h, w, 1, flow.data(), out.data());
    });
    report("warp bilinear", s, p);
  }

  {  // gaussian blur 512x512 sigma 1.5
    const int h = 512, w = 512;
    auto img = randv(size_t(h) * w, 11);
    std::vector<double> out(img.size());
    double s = time_ms(repeats, [&] {
      kernels::serial::gaussian_blur(img.data(), out.data(), h, w, 1, 1.5);
    });
    double p = time_ms(repeats, [&] {
      kernels::gaussian_blur(img.data(), out.data(), h, w, 1, 1.5);
    });
    report("gaussian blur", s, p);
  }

  return 0;
}
