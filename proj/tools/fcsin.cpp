// fcsin: batch CLI for the sketch interpolation pipeline.
// Exit codes: 0 success, 1 runtime fault, 2 usage/contract error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "fcsin/config.hpp"
#include "fcsin/eval_metrics.hpp"
#include "fcsin/frames_io.hpp"
#include "fcsin/png_io.hpp"
#include "fcsin/training.hpp"
#include "fcsin/u_transformer.hpp"

namespace fs = std::filesystem;
using namespace fcsin;

namespace {

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

// Config precedence: file < FCSIN_SEED < --set < dedicated flags.
Config assemble_config(const std::string& config_path,
                       const std::vector<std::string>& sets, long seed_flag) {
  Config cfg = config_path.empty() ? Config() : Config::load_file(config_path);
  if (const char* env = std::getenv("FCSIN_SEED"); env && seed_flag < 0)
    cfg.set("train.seed", env);
  for (const std::string& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ContractError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed_flag >= 0) cfg.set("train.seed", std::to_string(seed_flag));
  return cfg;
}

int cmd_sketchize(const std::string& in_dir, const std::string& out_dir,
                  const Config& cfg) {
  if (!fs::is_directory(in_dir))
    throw ContractError("sketchize: no such directory: " + in_dir);
  std::vector<std::pair<std::string, fs::path>> clips;
  for (const auto& e : fs::directory_iterator(in_dir))
    if (e.is_directory()) clips.emplace_back(e.path().filename().string(), e.path());
  std::sort(clips.begin(), clips.end());
  if (clips.empty()) clips.emplace_back(fs::path(in_dir).filename().string(), in_dir);

  const SketchizeParams sp = cfg.sketchize_params();
  std::vector<std::string> manifest;
  for (const auto& [clip, dir] : clips) {
    std::vector<fs::path> frames;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".png")
        frames.push_back(e.path());
    std::sort(frames.begin(), frames.end());
    int count = 0;
    for (const fs::path& f : frames) {
      Raster img = load_raster(f.string());
      if (img.c == 1) {  // grayscale input: replicate to satisfy the contract
        Raster c3(img.h, img.w, 3);
        for (int y = 0; y < img.h; ++y)
          for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) c3.at(y, x, ch) = img.at(y, x, 0);
        img = std::move(c3);
      }
      Raster sk = sketchize(img, sp);
      fs::path out = fs::path(out_dir) / clip / f.filename();
      fs::create_directories(out.parent_path());
      save_raster(sk, out.string());
      manifest.push_back((fs::path(clip) / f.filename()).generic_string());
      ++count;
    }
    std::cout << clip << ": " << count << " frames\n";
  }
  if (manifest.empty())
    throw ContractError("sketchize: no input frames found in " + in_dir);
  std::ofstream mf(fs::path(out_dir) / "sketchize.manifest");
  for (const std::string& line : manifest) mf << line << "\n";
  return 0;
}

int cmd_interpolate(const std::string& ckpt, const std::string& frame0,
                    const std::string& frame1, const std::string& out,
                    bool dump_guidance, bool dump_overlays) {
  Checkpoint ck = load_checkpoint(ckpt);
  Config cfg = Config::parse(ck.config_text);
  NetConfig net_cfg = cfg.net_config();
  GuidanceParams gp = cfg.guidance_params();

  Raster i0 = to_gray(load_raster(frame0));
  Raster i1 = to_gray(load_raster(frame1));
  if (i0.h != i1.h || i0.w != i1.w)
    throw ContractError("interpolate: frame sizes differ: " + std::to_string(i0.w) +
                        "x" + std::to_string(i0.h) + " vs " + std::to_string(i1.w) +
                        "x" + std::to_string(i1.h));

  GuidanceBundle bundle = extract_guidance(i0, i1, net_cfg, gp);
  Raster pred = net_forward(bundle, net_cfg, ck.params);
  if (!out.empty()) {
    fs::path op(out);
    if (op.has_parent_path()) fs::create_directories(op.parent_path());
  }
  save_raster(pred, out);

  if (dump_guidance) {
    std::string base = out;
    if (base.size() > 4 && base.substr(base.size() - 4) == ".png")
      base = base.substr(0, base.size() - 4);
    if (net_cfg.use_pixel) {
      save_raster(bundle.i0dot, base + ".guid.i0dot.png");
      save_raster(bundle.i1dot, base + ".guid.i1dot.png");
      save_flow(bundle.flow_t0, base + ".guid.flow_t0.fcsflow");
      save_flow(bundle.flow_t1, base + ".guid.flow_t1.fcsflow");
    }
    if (net_cfg.use_sketch)
      for (size_t i = 0; i < bundle.trace.maps.size(); ++i) {
        char buf[48];
        std::snprintf(buf, sizeof buf, ".guid.pt_%.3f.png", bundle.trace.timestamps[i]);
        save_raster(bundle.trace.maps[i], base + buf);
      }
    if (net_cfg.use_region) {
      save_raster(bundle.i0ddot, base + ".guid.i0ddot.png");
      save_raster(bundle.i1ddot, base + ".guid.i1ddot.png");
    }
  }
  if (dump_overlays) {
    std::string base = out;
    if (base.size() > 4 && base.substr(base.size() - 4) == ".png")
      base = base.substr(0, base.size() - 4);
    auto ka = detect_keypoints(i0, gp.kp.max_n, gp.kp);
    auto kb = detect_keypoints(i1, gp.kp.max_n, gp.kp);
    MatchParams mp;
    mp.tau = gp.kp_tau;
    mp.sigma_xy = gp.kp_sigma_xy_frac * std::max(i0.h, i0.w);
    auto matches = match_keypoints(ka, kb, gp.kp_theta, mp);
    save_raster(match_overlay(i0, i1, ka, kb, matches), base + ".overlay.matches.png");
    save_raster(region_overlay(trapped_ball_segment(i0, gp.region_radii), 1),
                base + ".overlay.regions0.png");
    save_raster(region_overlay(trapped_ball_segment(i1, gp.region_radii), 1),
                base + ".overlay.regions1.png");
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FC-SIN sketch inbetweening pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path;
  std::vector<std::string> sets;
  long seed_flag = -1;
  int threads = 0;
  app.add_option("--config", config_path, "config file (flat key=value)")
      ->envname("FCSIN_CONFIG");
  app.add_option("--set", sets, "override any config key, key=value (see config-keys)");
  app.add_option("--seed", seed_flag, "random seed [key: train.seed]");
  app.add_option("--threads", threads, "bound OpenMP worker count (results unchanged)");

  auto* sk = app.add_subcommand("sketchize", "convert colour frames to sketches");
  std::string sk_in, sk_out;
  sk->add_option("--in", sk_in, "input frame directory (one subdir per clip)")->required();
  sk->add_option("--out", sk_out, "output directory")->required();

  auto* bd = app.add_subcommand("build-dataset", "assemble sketch triplets");
  std::string bd_frames, bd_out, bd_split = "train";
  int bd_stride = 1;
  bd->add_option("--frames", bd_frames, "sketch frame directory")->required();
  bd->add_option("--out", bd_out, "dataset root to create [key: data.root]")->required();
  bd->add_option("--stride", bd_stride, "frame stride between triplet members");
  bd->add_option("--split", bd_split, "split tag recorded in the manifest");

  auto* tr = app.add_subcommand("train", "train the interpolation network");
  std::string tr_data, tr_out, tr_resume, tr_ablate, tr_trace;
  int tr_epochs = -1;
  tr->add_option("--dataset", tr_data, "dataset root [key: data.root]");
  tr->add_option("--out", tr_out, "run directory [key: train.out_dir]");
  tr->add_option("--epochs", tr_epochs, "epoch count [key: train.epochs]");
  tr->add_option("--ablate", tr_ablate,
                 "ablation: none|no-pixel|no-sketch|no-region|no-ccb [key: ablate]");
  tr->add_option("--trace-times", tr_trace,
                 "comma list of trace timestamps [key: trace.times]");
  tr->add_option("--resume", tr_resume, "checkpoint to continue from");

  auto* ip = app.add_subcommand("interpolate", "synthesize the inbetween frame");
  std::string ip_ckpt, ip_f0, ip_f1, ip_out;
  bool ip_dump = false;
  ip->add_option("--ckpt", ip_ckpt, "checkpoint file")->required();
  ip->add_option("--frame0", ip_f0, "first keyframe PNG")->required();
  ip->add_option("--frame1", ip_f1, "second keyframe PNG")->required();
  ip->add_option("--out", ip_out, "output PNG")->required();
  ip->add_flag("--dump-guidance", ip_dump, "also write guidance maps and flow dumps");
  bool ip_overlays = false;
  ip->add_flag("--dump-overlays", ip_overlays,
               "also write match-line and region-colour overlays");

  auto* ev = app.add_subcommand("evaluate", "metrics over a dataset");
  std::string ev_ckpt, ev_data, ev_out;
  bool ev_oracle = false;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint file");
  ev->add_option("--dataset", ev_data, "dataset root [key: data.root]");
  ev->add_option("--out", ev_out, "report directory")->required();
  ev->add_flag("--predict-target", ev_oracle, "oracle pass-through (perfect predictor)");

  auto* ckeys = app.add_subcommand("config-keys", "print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    apply_threads(threads);
    Config cfg = assemble_config(config_path, sets, seed_flag);

    if (ckeys->parsed()) {
      std::cout << cfg.serialize();
      return 0;
    }
    if (sk->parsed()) return cmd_sketchize(sk_in, sk_out, cfg);
    if (bd->parsed()) {
      DatasetIndex idx = build_dataset(bd_frames, bd_out, bd_stride, bd_split);
      std::cout << "triplets: " << idx.entries.size()
                << " skipped_clips: " << idx.skipped_clips << "\n";
      return 0;
    }
    if (tr->parsed()) {
      if (!tr_data.empty()) cfg.set("data.root", tr_data);
      if (!tr_out.empty()) cfg.set("train.out_dir", tr_out);
      if (tr_epochs >= 0) cfg.set("train.epochs", std::to_string(tr_epochs));
      if (!tr_ablate.empty()) cfg.set("ablate", tr_ablate);
      if (!tr_trace.empty()) cfg.set("trace.times", tr_trace);
      cfg.net_config();  // validate ablation/trace combination up front
      DatasetIndex idx = DatasetIndex::load(cfg.get("data.root"));
      idx.validate_files();
      TrainOptions opt;
      opt.resume_path = tr_resume;
      TrainResult res = train(cfg, idx, cfg.get("train.out_dir"), opt);
      if (res.aborted_nan) {
        std::cerr << "training aborted on non-finite loss; last checkpoint: "
                  << res.final_checkpoint << "\n";
        return 1;
      }
      std::cout << "final checkpoint: " << res.final_checkpoint << "\n";
      return 0;
    }
    if (ip->parsed()) return cmd_interpolate(ip_ckpt, ip_f0, ip_f1, ip_out, ip_dump, ip_overlays);
    if (ev->parsed()) {
      if (!ev_oracle && ev_ckpt.empty())
        throw ContractError("evaluate: --ckpt required unless --predict-target");
      std::string root = !ev_data.empty() ? ev_data : cfg.get("data.root");
      DatasetIndex idx = DatasetIndex::load(root);
      idx.validate_files();
      EvaluateOptions opt;
      opt.predict_target = ev_oracle;
      MetricsReport rep = evaluate(ev_ckpt, idx, opt);
      fs::create_directories(ev_out);
      rep.write_csv((fs::path(ev_out) / "metrics.csv").string());
      rep.write_summary((fs::path(ev_out) / "summary.txt").string());
      std::cout << rep.summary_table();
      return 0;
    }
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
