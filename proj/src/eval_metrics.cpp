#include "fcsin/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fcsin/kernels.hpp"
#include "fcsin/png_io.hpp"
#include "fcsin/u_transformer.hpp"

namespace fs = std::filesystem;

namespace fcsin {

double psnr(const Raster& pred, const Raster& target) {
  if (!pred.same_shape(target)) throw ContractError("psnr: shape mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    double d = pred.data[i] - target.data[i];
    mse += d * d;
  }
  mse /= double(pred.data.size());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Raster& pred, const Raster& target) {
  if (!pred.same_shape(target)) throw ContractError("ssim: shape mismatch");
  if (pred.c != 1) throw ContractError("ssim: expects 1-channel images");
  const int h = pred.h, w = pred.w;
  const int win = 11, rad = 5;
  if (h < win || w < win) throw ContractError("ssim: image smaller than the 11x11 window");

  // normalized Gaussian taps, sigma 1.5
  double taps[win];
  double sum = 0.0;
  for (int i = 0; i < win; ++i) {
    taps[i] = std::exp(-0.5 * (i - rad) * (i - rad) / (1.5 * 1.5));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;

  // separable weighted moments over valid centres
  auto filt = [&](const std::vector<double>& src, std::vector<double>& dst) {
    std::vector<double> tmp(size_t(h) * w, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = rad; x < w - rad; ++x) {
        double acc = 0.0;
        for (int i = -rad; i <= rad; ++i) acc += taps[i + rad] * src[size_t(y) * w + x + i];
        tmp[size_t(y) * w + x] = acc;
      }
    dst.assign(size_t(h) * w, 0.0);
    for (int y = rad; y < h - rad; ++y)
      for (int x = rad; x < w - rad; ++x) {
        double acc = 0.0;
        for (int i = -rad; i <= rad; ++i) acc += taps[i + rad] * tmp[size_t(y + i) * w + x];
        dst[size_t(y) * w + x] = acc;
      }
  };

  std::vector<double> a = pred.data, b = target.data;
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  std::vector<double> mu_a, mu_b, m_aa, m_bb, m_ab;
  filt(a, mu_a);
  filt(b, mu_b);
  filt(aa, m_aa);
  filt(bb, m_bb);
  filt(ab, m_ab);

  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double acc = 0.0;
  long count = 0;
  for (int y = rad; y < h - rad; ++y)
    for (int x = rad; x < w - rad; ++x) {
      size_t i = size_t(y) * w + x;
      double va = m_aa[i] - mu_a[i] * mu_a[i];
      double vb = m_bb[i] - mu_b[i] * mu_b[i];
      double cov = m_ab[i] - mu_a[i] * mu_b[i];
      double s = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                 ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
      acc += s;
      ++count;
    }
  return acc / count;
}

double interpolation_error(const Raster& pred, const Raster& target) {
  if (!pred.same_shape(target)) throw ContractError("interpolation_error: shape mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    double d = pred.data[i] - target.data[i];
    mse += d * d;
  }
  mse /= double(pred.data.size());
  return std::sqrt(mse) * 1e2;
}

double chamfer_distance(const Raster& pred, const Raster& target) {
  if (!pred.same_shape(target)) throw ContractError("chamfer_distance: shape mismatch");
  const int h = pred.h, w = pred.w;
  std::vector<uint8_t> sa(size_t(h) * w), sb(size_t(h) * w);
  long na = 0, nb = 0;
  for (size_t i = 0; i < sa.size(); ++i) {
    sa[i] = pred.data[i] < 0.5 ? 1 : 0;
    sb[i] = target.data[i] < 0.5 ? 1 : 0;
    na += sa[i];
    nb += sb[i];
  }
  if (na == 0 && nb == 0) return 0.0;
  if (na == 0 || nb == 0) return 1e4;  // sentinel: normalized maximum

  std::vector<double> da(size_t(h) * w), db(size_t(h) * w);
  kernels::edt_squared(sb.data(), h, w, db.data());  // distance to target strokes
  kernels::edt_squared(sa.data(), h, w, da.data());  // distance to pred strokes

  double d_ab = 0.0, d_ba = 0.0;
  for (size_t i = 0; i < sa.size(); ++i) {
    if (sa[i]) d_ab += db[i];
    if (sb[i]) d_ba += da[i];
  }
  d_ab /= double(na);
  d_ba /= double(nb);
  const double norm = double(h) * h + double(w) * w;
  return 0.5 * (d_ab + d_ba) / norm * 1e4;
}

// ---------------------------------------------------------------------------
// evaluation harness

std::string MetricsReport::summary_table() const {
  std::ostringstream os;
  os << "FC-SIN evaluation summary\n";
  os << "config_fingerprint: " << config_fingerprint << "\n";
  os << "triplets: " << rows.size() << "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s %-10s\n", "PSNR", "SSIM", "IE", "CD");
  os << buf;
  std::snprintf(buf, sizeof buf, "%-10.4f %-10.6f %-10.4f %-10.4f\n", aggregate.psnr,
                aggregate.ssim, aggregate.ie, aggregate.cd);
  os << buf;
  return os.str();
}

void MetricsReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "id,psnr,ssim,ie,cd\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.id << ',' << r.psnr << ',' << r.ssim << ',' << r.ie << ',' << r.cd << '\n';
}

void MetricsReport::write_summary(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << summary_table();
}

MetricsReport evaluate(const std::string& checkpoint_path, const DatasetIndex& data,
                       const EvaluateOptions& opt) {
  if (data.entries.empty()) throw ContractError("evaluate: dataset is empty");

  Config cfg;
  ModelParams params;
  NetConfig net_cfg;
  GuidanceParams gp;
  if (!opt.predict_target) {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    cfg = Config::parse(ck.config_text);
    params = std::move(ck.params);
    net_cfg = cfg.net_config();
    gp = cfg.guidance_params();
  }

  MetricsReport rep;
  rep.config_fingerprint = cfg.fingerprint();

  // deterministic id order
  std::vector<size_t> order(data.entries.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return data.entries[a].id < data.entries[b].id;
  });

  for (size_t i : order) {
    Triplet t = data.load_triplet(i);
    Raster pred = opt.predict_target
                      ? t.frame_mid
                      : fcsin_forward(t.frame0, t.frame1, net_cfg, gp, params);
    TripletMetrics m;
    m.id = t.id;
    m.psnr = psnr(pred, t.frame_mid);
    m.ssim = ssim(pred, t.frame_mid);
    m.ie = interpolation_error(pred, t.frame_mid);
    m.cd = chamfer_distance(pred, t.frame_mid);
    rep.rows.push_back(m);
    if (!opt.dump_dir.empty()) {
      fs::create_directories(opt.dump_dir);
      std::string name = t.id;
      std::replace(name.begin(), name.end(), '/', '_');
      save_raster(pred, (fs::path(opt.dump_dir) / (name + ".png")).string());
    }
  }

  rep.aggregate.id = "mean";
  for (const auto& r : rep.rows) {
    rep.aggregate.psnr += r.psnr;
    rep.aggregate.ssim += r.ssim;
    rep.aggregate.ie += r.ie;
    rep.aggregate.cd += r.cd;
  }
  const double n = double(rep.rows.size());
  rep.aggregate.psnr /= n;
  rep.aggregate.ssim /= n;
  rep.aggregate.ie /= n;
  rep.aggregate.cd /= n;
  return rep;
}

}  // namespace fcsin
