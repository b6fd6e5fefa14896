#include "fcsin/frames_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "fcsin/kernels.hpp"
#include "fcsin/png_io.hpp"

namespace fs = std::filesystem;

namespace fcsin {

void Triplet::validate() const {
  if (!frame0.same_shape(frame_mid) || !frame0.same_shape(frame1))
    throw ContractError("triplet " + id + ": frame dimensions differ");
  if (frame0.c != 1) throw ContractError("triplet " + id + ": frames must be 1-channel");
  for (const Raster* r : {&frame0, &frame_mid, &frame1})
    if (median_intensity(*r) < 0.9)
      throw ContractError("triplet " + id + ": background is not white (median < 0.9)");
}

// ---------------------------------------------------------------------------
// sketchize

namespace {

// Otsu threshold index over a 256-bin histogram; mask = bin > index.
int otsu_index(const std::vector<long>& hist) {
  long total = 0;
  double sum = 0.0;
  for (int i = 0; i < 256; ++i) {
    total += hist[i];
    sum += double(i) * hist[i];
  }
  long wb = 0;
  double sumb = 0.0, best = -1.0;
  int best_i = 127;
  for (int i = 0; i < 256; ++i) {
    wb += hist[i];
    if (wb == 0) continue;
    long wf = total - wb;
    if (wf == 0) break;
    sumb += double(i) * hist[i];
    double mb = sumb / wb;
    double mf = (sum - sumb) / wf;
    double between = double(wb) * double(wf) * (mb - mf) * (mb - mf);
    if (between > best) {
      best = between;
      best_i = i;
    }
  }
  return best_i;
}

void remove_small_components(std::vector<uint8_t>& mask, int h, int w, int min_px) {
  std::vector<int> label(size_t(h) * w, 0);
  std::deque<int> queue;
  int next = 0;
  const int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  const int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t i = size_t(y) * w + x;
      if (!mask[i] || label[i]) continue;
      ++next;
      std::vector<size_t> members{i};
      label[i] = next;
      queue.push_back(int(i));
      while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        int cy = cur / w, cx = cur % w;
        for (int k = 0; k < 8; ++k) {
          int ny = cy + dy8[k], nx = cx + dx8[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          size_t ni = size_t(ny) * w + nx;
          if (mask[ni] && !label[ni]) {
            label[ni] = next;
            members.push_back(ni);
            queue.push_back(int(ni));
          }
        }
      }
      if (int(members.size()) < min_px)
        for (size_t m : members) mask[m] = 0;
    }
}

// Zhang-Suen thinning; mask is the stroke set (1 = stroke).
void thin_zhang_suen(std::vector<uint8_t>& mask, int h, int w) {
  auto at = [&](int y, int x) -> int {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0;
    return mask[size_t(y) * w + x];
  };
  bool changed = true;
  std::vector<size_t> kill;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      kill.clear();
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!at(y, x)) continue;
          int p2 = at(y - 1, x), p3 = at(y - 1, x + 1), p4 = at(y, x + 1),
              p5 = at(y + 1, x + 1), p6 = at(y + 1, x), p7 = at(y + 1, x - 1),
              p8 = at(y, x - 1), p9 = at(y - 1, x - 1);
          int bsum = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
          if (bsum < 2 || bsum > 6) continue;
          int trans = (p2 == 0 && p3 == 1) + (p3 == 0 && p4 == 1) +
                      (p4 == 0 && p5 == 1) + (p5 == 0 && p6 == 1) +
                      (p6 == 0 && p7 == 1) + (p7 == 0 && p8 == 1) +
                      (p8 == 0 && p9 == 1) + (p9 == 0 && p2 == 1);
          if (trans != 1) continue;
          if (pass == 0) {
            if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
          } else {
            if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
          }
          kill.push_back(size_t(y) * w + x);
        }
      if (!kill.empty()) changed = true;
      for (size_t i : kill) mask[i] = 0;
    }
  }
}

}  // namespace

Raster sketchize(const Raster& color, const SketchizeParams& p) {
  if (color.c != 3) throw ContractError("sketchize: input must be 3-channel");
  Raster gray = to_gray(color);

  std::vector<double> g1(gray.data.size()), g2(gray.data.size());
  kernels::gaussian_blur(gray.data.data(), g1.data(), gray.h, gray.w, 1, p.dog_sigma1);
  kernels::gaussian_blur(gray.data.data(), g2.data(), gray.h, gray.w, 1, p.dog_sigma2);

  // one-sided response: darker-than-surround only, so the bright side
  // lobes of a stroke do not become parallel ghost contours
  std::vector<double> resp(gray.data.size());
  double max_resp = 0.0;
  for (size_t i = 0; i < resp.size(); ++i) {
    resp[i] = std::max(0.0, g2[i] - g1[i]);
    max_resp = std::max(max_resp, resp[i]);
  }

  std::vector<uint8_t> mask(resp.size(), 0);
  if (max_resp > 1e-9) {
    std::vector<long> hist(256, 0);
    for (double r : resp)
      ++hist[std::min(255, int(r / max_resp * 256.0))];
    int thr = otsu_index(hist);
    for (size_t i = 0; i < resp.size(); ++i)
      mask[i] = std::min(255, int(resp[i] / max_resp * 256.0)) > thr ? 1 : 0;
  }

  remove_small_components(mask, gray.h, gray.w, p.min_stroke_px);
  thin_zhang_suen(mask, gray.h, gray.w);

  Raster out(gray.h, gray.w, 1);
  for (size_t i = 0; i < mask.size(); ++i) out.data[i] = mask[i] ? 0.0 : 1.0;
  if (p.antialias_sigma > 0.0) {
    Raster blurred(out.h, out.w, 1);
    kernels::gaussian_blur(out.data.data(), blurred.data.data(), out.h, out.w, 1,
                           p.antialias_sigma);
    out = blurred;
    clamp01(out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// dataset index / manifest

static const char* kManifestName = "index.manifest";

void DatasetIndex::write_manifest() const {
  fs::create_directories(root);
  std::ofstream os(fs::path(root) / kManifestName);
  if (!os) throw std::runtime_error("cannot write manifest under " + root);
  os << "# fcsin dataset manifest\n";
  os << "# split: " << split << "\n";
  os << "# skipped_clips: " << skipped_clips << "\n";
  for (const auto& e : entries)
    os << e.id << '\t' << e.f0 << '\t' << e.f1 << '\t' << e.f2 << '\n';
}

DatasetIndex DatasetIndex::load(const std::string& root_dir) {
  DatasetIndex idx;
  idx.root = root_dir;
  std::ifstream is(fs::path(root_dir) / kManifestName);
  if (!is) throw std::runtime_error("no manifest in " + root_dir);
  std::string line;
  std::set<std::string> seen;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("split:");
      if (pos != std::string::npos) {
        std::string v = line.substr(pos + 6);
        v.erase(0, v.find_first_not_of(' '));
        idx.split = v;
      }
      pos = line.find("skipped_clips:");
      if (pos != std::string::npos)
        idx.skipped_clips = std::stoi(line.substr(pos + 14));
      continue;
    }
    std::istringstream ss(line);
    DatasetEntry e;
    if (!(ss >> e.id >> e.f0 >> e.f1 >> e.f2))
      throw std::runtime_error("malformed manifest record: " + line);
    if (!seen.insert(e.id).second)
      throw std::runtime_error("duplicate triplet id in manifest: " + e.id);
    idx.entries.push_back(std::move(e));
  }
  return idx;
}

void DatasetIndex::validate_files() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.id).second)
      throw std::runtime_error("duplicate triplet id: " + e.id);
    for (const std::string* f : {&e.f0, &e.f1, &e.f2}) {
      fs::path p = fs::path(root) / *f;
      if (!fs::exists(p)) throw std::runtime_error("missing frame file: " + p.string());
    }
  }
}

Triplet DatasetIndex::load_triplet(size_t i) const {
  if (i >= entries.size()) throw ContractError("triplet index out of range");
  const auto& e = entries[i];
  Triplet t;
  t.id = e.id;
  t.frame0 = load_raster((fs::path(root) / e.f0).string());
  t.frame_mid = load_raster((fs::path(root) / e.f1).string());
  t.frame1 = load_raster((fs::path(root) / e.f2).string());
  return t;
}

DatasetIndex build_dataset(const std::string& frames_dir, const std::string& out_root,
                           int stride, const std::string& split) {
  if (stride < 1) throw ContractError("build_dataset: stride must be >= 1");
  if (!fs::is_directory(frames_dir))
    throw ContractError("build_dataset: no such directory: " + frames_dir);

  // clips = subdirectories; a flat directory of frames is one clip
  std::vector<std::pair<std::string, fs::path>> clips;
  for (const auto& e : fs::directory_iterator(frames_dir))
    if (e.is_directory()) clips.emplace_back(e.path().filename().string(), e.path());
  std::sort(clips.begin(), clips.end());
  if (clips.empty()) clips.emplace_back(fs::path(frames_dir).filename().string(), frames_dir);

  DatasetIndex idx;
  idx.root = out_root;
  idx.split = split;
  for (const auto& [clip_id, clip_path] : clips) {
    std::vector<fs::path> frames;
    for (const auto& e : fs::directory_iterator(clip_path)) {
      if (!e.is_regular_file()) continue;
      auto ext = e.path().extension().string();
      if (ext == ".png" || ext == ".PNG") frames.push_back(e.path());
    }
    std::sort(frames.begin(), frames.end());
    const int n = int(frames.size());
    if (n < 2 * stride + 1) {
      ++idx.skipped_clips;
      continue;
    }
    for (int i = 0; i + 2 * stride < n; ++i) {
      char tid[32];
      std::snprintf(tid, sizeof tid, "t%04d", i);
      std::string id = clip_id + "/" + tid;
      fs::path dir = fs::path(out_root) / clip_id / tid;
      fs::create_directories(dir);
      const char* names[3] = {"frame0.png", "frame1.png", "frame2.png"};
      const fs::path* src[3] = {&frames[i], &frames[i + stride], &frames[i + 2 * stride]};
      DatasetEntry entry;
      entry.id = id;
      std::string rel[3];
      for (int k = 0; k < 3; ++k) {
        fs::copy_file(*src[k], dir / names[k], fs::copy_options::overwrite_existing);
        rel[k] = (fs::path(clip_id) / tid / names[k]).generic_string();
      }
      entry.f0 = rel[0];
      entry.f1 = rel[1];
      entry.f2 = rel[2];
      idx.entries.push_back(std::move(entry));
    }
  }
  idx.write_manifest();
  return idx;
}

// ---------------------------------------------------------------------------
// augmentation

Triplet augment(const Triplet& t, uint64_t seed, const AugmentParams& p) {
  if (t.frame0.h < 1 || !t.frame0.same_shape(t.frame_mid) || !t.frame0.same_shape(t.frame1))
    throw ContractError("augment: inconsistent triplet");
  const int h = t.frame0.h, w = t.frame0.w;
  double scale = std::max(double(p.out_w) / w, double(p.out_h) / h);
  int nh = std::max(p.out_h, int(std::ceil(h * scale)));
  int nw = std::max(p.out_w, int(std::ceil(w * scale)));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ox_dist(0, nw - p.out_w);
  std::uniform_int_distribution<int> oy_dist(0, nh - p.out_h);
  int ox = ox_dist(rng);
  int oy = oy_dist(rng);
  bool flip = p.allow_flip && (rng() & 1u);

  Triplet out;
  out.id = t.id;
  const Raster* in[3] = {&t.frame0, &t.frame_mid, &t.frame1};
  Raster* dst[3] = {&out.frame0, &out.frame_mid, &out.frame1};
  for (int k = 0; k < 3; ++k) {
    Raster r = resize_bilinear(*in[k], nh, nw);
    r = crop(r, oy, ox, p.out_h, p.out_w);
    if (flip) r = flip_horizontal(r);
    *dst[k] = std::move(r);
  }
  return out;
}

}  // namespace fcsin
