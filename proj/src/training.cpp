#include "fcsin/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace fs = std::filesystem;

namespace fcsin {

using autodiff::Graph;
using autodiff::NodePtr;

double loss_l1(const Raster& pred, const Raster& target) {
  if (!pred.same_shape(target)) throw ContractError("loss_l1: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i)
    acc += std::abs(pred.data[i] - target.data[i]);
  return acc / double(pred.data.size());
}

// ---------------------------------------------------------------------------
// perceptual loss

namespace {
constexpr int kFeatStages = 3;
constexpr int kFeatWidths[kFeatStages + 1] = {1, 8, 16, 32};

Tensor raster_tensor(const Raster& r) {
  Tensor t({r.h, r.w, r.c});
  t.data = r.data;
  return t;
}
}  // namespace

PerceptualFeaturizer::PerceptualFeaturizer(uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x6c5f705350313233ull);
  for (int s = 0; s < kFeatStages; ++s) {
    Tensor w({3, 3, kFeatWidths[s], kFeatWidths[s + 1]});
    double bound = std::sqrt(1.0 / (9.0 * kFeatWidths[s]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : w.data) v = dist(rng);
    weights.push_back(std::move(w));
  }
}

NodePtr PerceptualFeaturizer::loss_node(Graph& g, NodePtr pred,
                                        const Raster& target) const {
  NodePtr tgt = g.leaf(raster_tensor(target), false);
  std::vector<NodePtr> stage_losses;
  NodePtr a = pred, b = tgt;
  for (int s = 0; s < kFeatStages; ++s) {
    NodePtr w = g.leaf(weights[s], false);
    a = autodiff::channel_l2norm(g, autodiff::gelu(g, autodiff::conv2d(g, a, w, nullptr, 2, 1)));
    b = autodiff::channel_l2norm(g, autodiff::gelu(g, autodiff::conv2d(g, b, w, nullptr, 2, 1)));
    stage_losses.push_back(autodiff::mean_sq_diff(g, a, b));
  }
  return autodiff::weighted_sum(g, stage_losses,
                                std::vector<double>(kFeatStages, 1.0 / kFeatStages));
}

double PerceptualFeaturizer::loss(const Raster& pred, const Raster& target) const {
  if (!pred.same_shape(target)) throw ContractError("loss_perceptual: shape mismatch");
  Graph g;
  NodePtr p = g.leaf(raster_tensor(pred), false);
  return loss_node(g, p, target)->value.data[0];
}

double loss_perceptual(const Raster& pred, const Raster& target, uint64_t featurizer_seed) {
  return PerceptualFeaturizer(featurizer_seed).loss(pred, target);
}

double total_loss(const Raster& pred, const Raster& target, const LossWeights& w,
                  const PerceptualFeaturizer& feat) {
  return w.lambda_l1 * loss_l1(pred, target) + w.lambda_lpips * feat.loss(pred, target);
}

// ---------------------------------------------------------------------------
// AdaMax

void OptimState::init_like(const ModelParams& params) {
  m.clear();
  u.clear();
  for (const auto& [name, t] : params.tensors) {
    m.emplace(name, Tensor(t.shape, 0.0));
    u.emplace(name, Tensor(t.shape, 0.0));
  }
  step = 0;
}

bool adamax_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
                 OptimState& st, double lr_scale) {
  for (const auto& [name, g] : grads)
    for (double v : g.data)
      if (!std::isfinite(v)) {
        ++st.faults;
        return false;
      }
  const OptimParams& hp = st.hp;
  const int64_t t = ++st.step;
  const double bias_corr = 1.0 - std::pow(hp.beta1, double(t));
  const double lr_eff = hp.lr * lr_scale;
  for (auto& [name, theta] : params.tensors) {
    auto git = grads.find(name);
    if (git == grads.end()) throw ContractError("adamax_step: missing gradient for " + name);
    Tensor& m = st.m.at(name);
    Tensor& u = st.u.at(name);
    const Tensor& g = git->second;
    const double shrink = hp.decay_on_lr ? 1.0 : (1.0 - lr_eff * hp.weight_decay);
    for (size_t i = 0; i < theta.data.size(); ++i) {
      m.data[i] = hp.beta1 * m.data[i] + (1.0 - hp.beta1) * g.data[i];
      u.data[i] = std::max(hp.beta2 * u.data[i], std::abs(g.data[i]));
      theta.data[i] = theta.data[i] * shrink -
                      (lr_eff / bias_corr) * m.data[i] / (u.data[i] + hp.eps);
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// training loop

uint64_t derive_seed(uint64_t seed, const std::string& tag, uint64_t a, uint64_t b) {
  uint64_t h = 1469598103934665603ull ^ seed;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (char c : tag) {
    h ^= uint64_t(uint8_t(c));
    h *= 1099511628211ull;
  }
  mix(a);
  mix(b);
  return h;
}

TrainResult train(const Config& cfg, const DatasetIndex& data,
                  const std::string& out_dir, const TrainOptions& opt) {
  if (data.entries.empty()) throw ContractError("train: dataset is empty");
  const NetConfig net_cfg = cfg.net_config();
  const GuidanceParams gp = cfg.guidance_params();
  const uint64_t seed = uint64_t(cfg.get_int("train.seed"));
  const int batch_size = std::max(1, cfg.get_int("train.batch"));
  const int epochs = opt.epochs >= 0 ? opt.epochs : cfg.get_int("train.epochs");
  const bool do_augment = opt.augment_override && cfg.get_bool("train.augment");
  const AugmentParams ap = cfg.augment_params();
  const LossWeights lw{cfg.get_double("loss.lambda_l1"), cfg.get_double("loss.lambda_lpips")};
  const PerceptualFeaturizer feat(uint64_t(cfg.get_int("loss.lpips_seed")));
  const int ckpt_every = std::max(1, cfg.get_int("train.checkpoint_every"));

  fs::create_directories(out_dir);
  const std::string latest = (fs::path(out_dir) / "ckpt_latest.fcsin").string();
  const std::string final_path = (fs::path(out_dir) / "ckpt_final.fcsin").string();
  const std::string csv_path = (fs::path(out_dir) / "loss.csv").string();

  ModelParams params;
  OptimState optim;
  optim.hp.beta1 = cfg.get_double("optim.beta1");
  optim.hp.beta2 = cfg.get_double("optim.beta2");
  optim.hp.lr = cfg.get_double("optim.lr");
  optim.hp.weight_decay = cfg.get_double("optim.weight_decay");
  optim.hp.decay_on_lr = cfg.get("optim.decay_mode") == "lr";
  if (cfg.get("optim.decay_mode") != "lr" && cfg.get("optim.decay_mode") != "param")
    throw ContractError("optim.decay_mode must be 'param' or 'lr'");

  int start_epoch = 0;
  bool fresh_csv = true;
  if (!opt.resume_path.empty()) {
    Checkpoint ck = load_checkpoint(opt.resume_path);
    params = std::move(ck.params);
    optim.m = std::move(ck.opt_m);
    optim.u = std::move(ck.opt_u);
    optim.step = ck.step;
    start_epoch = ck.epoch;
    fresh_csv = false;
  } else {
    params = init_params(net_cfg, seed);
    optim.init_like(params);
  }

  std::ofstream csv(csv_path, fresh_csv ? std::ios::trunc : std::ios::app);
  if (fresh_csv) csv << "step,l1,lpips,total\n";

  auto save = [&](const std::string& path, int next_epoch) {
    Checkpoint ck;
    ck.config_text = cfg.serialize();
    ck.seed = seed;
    ck.step = optim.step;
    ck.epoch = next_epoch;
    ck.params = params;
    ck.opt_m = optim.m;
    ck.opt_u = optim.u;
    save_checkpoint(ck, path);
  };

  TrainResult result;
  const int n = int(data.entries.size());

  for (int epoch = start_epoch; epoch < epochs; ++epoch) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(seed, "shuffle", uint64_t(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr_scale =
        optim.hp.decay_on_lr ? std::pow(1.0 - optim.hp.weight_decay, double(epoch)) : 1.0;

    for (int base = 0; base < n; base += batch_size) {
      const int count = std::min(batch_size, n - base);
      std::map<std::string, Tensor> grad_acc;
      double l1_sum = 0.0, lp_sum = 0.0, total_sum = 0.0;

      for (int k = 0; k < count; ++k) {
        const int idx = order[base + k];
        Triplet t = data.load_triplet(size_t(idx));
        if (do_augment)
          t = augment(t, derive_seed(seed, "augment", uint64_t(epoch), uint64_t(base + k)), ap);

        GuidanceBundle guidance = extract_guidance(t.frame0, t.frame1, net_cfg, gp);
        Graph g;
        std::map<std::string, NodePtr> pnodes;
        NodePtr pred = build_network_graph(g, guidance, net_cfg, params, &pnodes);
        NodePtr l1 = autodiff::mean_abs_diff(g, pred, raster_tensor(t.frame_mid));
        NodePtr lp = feat.loss_node(g, pred, t.frame_mid);
        NodePtr total = autodiff::weighted_sum(g, {l1, lp}, {lw.lambda_l1, lw.lambda_lpips});
        g.backward(total);

        l1_sum += l1->value.data[0];
        lp_sum += lp->value.data[0];
        total_sum += total->value.data[0];

        const double inv = 1.0 / count;
        for (auto& [name, node] : pnodes) {
          Tensor& gsrc = node->ensure_grad();
          auto [it, inserted] = grad_acc.try_emplace(name, Tensor(gsrc.shape, 0.0));
          for (size_t i = 0; i < gsrc.data.size(); ++i)
            it->second.data[i] += inv * gsrc.data[i];
        }
      }

      const double total_mean = total_sum / count;
      if (!std::isfinite(total_mean)) {
        // keep the last good checkpoint and stop
        result.aborted_nan = true;
        result.optimizer_faults = optim.faults;
        result.final_checkpoint = fs::exists(latest) ? latest : "";
        return result;
      }
      adamax_step(params, grad_acc, optim, lr_scale);
      csv << optim.step << ',' << (l1_sum / count) << ',' << (lp_sum / count) << ','
          << total_mean << '\n';
      result.loss_rows.push_back({double(optim.step), l1_sum / count, lp_sum / count,
                                  total_mean});
    }
    if ((epoch + 1) % ckpt_every == 0 || epoch + 1 == epochs) save(latest, epoch + 1);
  }

  save(final_path, epochs);
  result.final_checkpoint = final_path;
  result.optimizer_faults = optim.faults;
  return result;
}

}  // namespace fcsin
