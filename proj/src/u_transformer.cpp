#include "fcsin/u_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fcsin/kernels.hpp"

namespace fcsin {

using autodiff::Graph;
using autodiff::NodePtr;

void NetConfig::validate() const {
  if (channels < 1 || scales < 1 || window < 2 || heads < 1 || channel_cap < channels)
    throw ContractError("NetConfig: bad dimensions");
  if (channels % heads != 0) throw ContractError("NetConfig: heads must divide channels");
  for (int s = 0; s < scales; ++s)
    if (scale_channels(s) % heads != 0)
      throw ContractError("NetConfig: heads must divide every scale width");
  if (enabled_streams() == 0) throw ContractError("NetConfig: no streams enabled");
  if ((stream_ccb0 || stream_ccb1) && !use_sketch)
    throw ContractError("NetConfig: CCB streams need sketch correspondence");
  if ((stream_ccb0 || stream_ccb1) && query_channels() == 0)
    throw ContractError("NetConfig: CCB streams need pixel or region guidance");
  if (guidance_channels() == 0) throw ContractError("NetConfig: all guidance disabled");
  if (use_sketch) {
    if (trace_times.empty()) throw ContractError("NetConfig: empty trace timestamps");
    for (double t : trace_times)
      if (!(t > 0.0 && t < 1.0))
        throw ContractError("NetConfig: trace timestamps must be in (0,1)");
  }
}

int NetConfig::scale_channels(int s) const {
  int64_t c = int64_t(channels) << (s + 1);
  return int(std::min<int64_t>(channel_cap, c));
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ContractError("missing parameter tensor: " + name);
  return it->second;
}
const Tensor& ModelParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ContractError("missing parameter tensor: " + name);
  return it->second;
}
int64_t ModelParams::total_count() const {
  int64_t n = 0;
  for (const auto& [k, v] : tensors) n += v.numel();
  return n;
}
bool ModelParams::all_finite() const {
  for (const auto& [k, v] : tensors)
    for (double x : v.data)
      if (!std::isfinite(x)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// parameter construction

namespace {

uint64_t fnv1a(const std::string& s, uint64_t seed) {
  uint64_t h = 1469598103934665603ull ^ seed;
  for (char c : s) {
    h ^= uint64_t(uint8_t(c));
    h *= 1099511628211ull;
  }
  return h;
}

// conv weights [kh,kw,ci,co] (fan_in = kh*kw*ci), projections [ci,co]
// (fan_in = ci); biases zero
void add_weight(ModelParams& p, const std::string& name, std::vector<int> shape,
                uint64_t seed) {
  Tensor t(shape);
  int64_t fan_in = 1;
  for (size_t i = 0; i + 1 < shape.size(); ++i) fan_in *= shape[i];
  double bound = std::sqrt(1.0 / double(fan_in));
  std::mt19937_64 rng(fnv1a(name, seed));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data) v = dist(rng);
  p.tensors.emplace(name, std::move(t));
}

void add_bias(ModelParams& p, const std::string& name, int n) {
  p.tensors.emplace(name, Tensor({n}, 0.0));
}

void add_conv(ModelParams& p, const std::string& base, int k, int ci, int co,
              uint64_t seed) {
  add_weight(p, base + ".w", {k, k, ci, co}, seed);
  add_bias(p, base + ".b", co);
}

void add_attn(ModelParams& p, const std::string& base, int c, uint64_t seed) {
  add_weight(p, base + ".wq", {c, c}, seed);
  add_weight(p, base + ".wk", {c, c}, seed);
  add_weight(p, base + ".wv", {c, c}, seed);
  add_weight(p, base + ".wo", {c, c}, seed);
}

void add_stream_blocks(ModelParams& p, const std::string& stream,
                       const NetConfig& cfg, bool cross, uint64_t seed) {
  const int c = cfg.channels;
  for (int s = 0; s < cfg.scales; ++s) {
    int ci = s == 0 ? c : cfg.scale_channels(s - 1);
    int co = cfg.scale_channels(s);
    std::string base = stream + ".enc" + std::to_string(s);
    if (cross) {
      add_conv(p, base + ".convx", 3, ci, co, seed);
      add_conv(p, base + ".convy", 3, ci, co, seed);
    } else {
      add_conv(p, base + ".conv", 3, ci, co, seed);
    }
    add_attn(p, base + ".attn", co, seed);
  }
  for (int s = cfg.scales - 1; s >= 0; --s) {
    int ci = cfg.scale_channels(s);
    int co = s > 0 ? cfg.scale_channels(s - 1) : c;
    add_conv(p, stream + ".dec" + std::to_string(s), 2, ci, co, seed);
  }
}

}  // namespace

ModelParams init_params(const NetConfig& cfg, uint64_t seed) {
  cfg.validate();
  ModelParams p;
  const int c = cfg.channels;
  if (cfg.stream_csb) {
    add_conv(p, "csb.coarse.conv0", 3, cfg.guidance_channels(), c, seed);
    add_conv(p, "csb.coarse.conv1", 3, c, c, seed);
    add_stream_blocks(p, "csb", cfg, false, seed);
  }
  for (int k = 0; k < 2; ++k) {
    if (!(k == 0 ? cfg.stream_ccb0 : cfg.stream_ccb1)) continue;
    std::string s = "ccb" + std::to_string(k);
    add_conv(p, s + ".stem.conv0", 3, cfg.query_channels(), c, seed);
    add_conv(p, s + ".stem.conv1", 3, c, c, seed);
    add_conv(p, s + ".ystem.conv0", 3, cfg.trace_depth(), c, seed);
    add_conv(p, s + ".ystem.conv1", 3, c, c, seed);
    add_stream_blocks(p, s, cfg, true, seed);
  }
  add_conv(p, "fusion.conv0", 3, c * cfg.enabled_streams(), c, seed);
  add_conv(p, "fusion.conv1", 3, c, 1, seed);
  return p;
}

int64_t expected_param_count(const NetConfig& cfg) {
  // conv(k, ci, co) = k*k*ci*co + co; attention projections = 4*c*c.
  auto conv = [](int64_t k, int64_t ci, int64_t co) { return k * k * ci * co + co; };
  const int64_t c = cfg.channels;
  auto chan = [&](int s) -> int64_t { return s < 0 ? c : cfg.scale_channels(s); };
  int64_t blocks_self = 0, blocks_cross = 0, dec = 0;
  for (int s = 0; s < cfg.scales; ++s) {
    blocks_self += conv(3, chan(s - 1), chan(s)) + 4 * chan(s) * chan(s);
    blocks_cross += 2 * conv(3, chan(s - 1), chan(s)) + 4 * chan(s) * chan(s);
    dec += conv(2, chan(s), s > 0 ? chan(s - 1) : c);
  }
  int64_t total = 0;
  if (cfg.stream_csb)
    total += conv(3, cfg.guidance_channels(), c) + conv(3, c, c) + blocks_self + dec;
  int64_t ccb = conv(3, cfg.query_channels(), c) + conv(3, c, c) +
                conv(3, cfg.trace_depth(), c) + conv(3, c, c) + blocks_cross + dec;
  if (cfg.stream_ccb0) total += ccb;
  if (cfg.stream_ccb1) total += ccb;
  total += conv(3, c * cfg.enabled_streams(), c) + conv(3, c, 1);
  return total;
}

// ---------------------------------------------------------------------------
// guidance extraction

GuidanceBundle extract_guidance(const Raster& i0, const Raster& i1,
                                const NetConfig& cfg, const GuidanceParams& gp) {
  if (!i0.same_shape(i1)) throw ContractError("fcsin: keyframe dims differ");
  if (i0.c != 1) throw ContractError("fcsin: keyframes must be 1-channel sketches");
  if (i0.h < 16 || i0.w < 16) throw ContractError("fcsin: keyframes must be >= 16 px");
  GuidanceBundle b;
  if (cfg.use_pixel) {
    FlowField f01 = estimate_flow(i0, i1, gp.flow);
    FlowField f10 = estimate_flow(i1, i0, gp.flow);
    auto [t0, t1] = split_time(f01, f10, gp.t_mid);
    b.flow_t0 = std::move(t0);
    b.flow_t1 = std::move(t1);
    b.i0dot = warp(i0, b.flow_t0);
    b.i1dot = warp(i1, b.flow_t1);
  }
  if (cfg.use_sketch) {
    auto ka = detect_keypoints(i0, gp.kp.max_n, gp.kp);
    auto kb = detect_keypoints(i1, gp.kp.max_n, gp.kp);
    MatchParams mp;
    mp.tau = gp.kp_tau;
    mp.sigma_xy = gp.kp_sigma_xy_frac * std::max(i0.h, i0.w);
    auto matches = match_keypoints(ka, kb, gp.kp_theta, mp);
    b.trace = rasterize_traces(matches, ka, kb, cfg.trace_times, i0.h, i0.w);
  }
  if (cfg.use_region) {
    RegionMap ma = trapped_ball_segment(i0, gp.region_radii);
    RegionMap mb = trapped_ball_segment(i1, gp.region_radii);
    auto pairs = match_regions(ma, mb, gp.region_accept);
    auto [ft0, ft1] = aggregate_region_flow(pairs, ma, mb, gp.t_mid, i0.h, i0.w);
    auto [r0, r1] = refine_keyframes_regional(i0, i1, ft0, ft1);
    b.i0ddot = std::move(r0);
    b.i1ddot = std::move(r1);
  }
  return b;
}

// ---------------------------------------------------------------------------
// graph construction

namespace {

Tensor raster_to_tensor(const Raster& r) {
  Tensor t({r.h, r.w, 1});
  t.data = r.data;
  return t;
}

struct ParamLookup {
  Graph& g;
  const ModelParams& params;
  bool trainable;
  std::map<std::string, NodePtr>* out;

  NodePtr operator()(const std::string& name) {
    if (out) {
      auto it = out->find(name);
      if (it != out->end()) return it->second;
    }
    NodePtr n = g.leaf(params.at(name), trainable);
    if (out) out->emplace(name, n);
    return n;
  }
};

NodePtr two_convs(Graph& g, ParamLookup& P, NodePtr x, const std::string& base) {
  x = autodiff::gelu(g, autodiff::conv2d(g, x, P(base + ".conv0.w"), P(base + ".conv0.b"), 1, 1));
  x = autodiff::gelu(g, autodiff::conv2d(g, x, P(base + ".conv1.w"), P(base + ".conv1.b"), 1, 1));
  return x;
}

NodePtr windowed_attention(Graph& g, ParamLookup& P, NodePtr q_map, NodePtr kv_map,
                           const std::string& base, int window, int heads) {
  const int h = q_map->value.dim(0), w = q_map->value.dim(1);
  NodePtr tq = autodiff::window_partition(g, q_map, window);
  NodePtr tk = (kv_map == q_map) ? tq : autodiff::window_partition(g, kv_map, window);
  NodePtr q = autodiff::project(g, tq, P(base + ".wq"));
  NodePtr k = autodiff::project(g, tk, P(base + ".wk"));
  NodePtr v = autodiff::project(g, tk, P(base + ".wv"));
  NodePtr a = autodiff::attention(g, q, k, v, heads);
  a = autodiff::project(g, a, P(base + ".wo"));
  return autodiff::window_merge(g, a, window, h, w);
}

// encoder block: stride-2 conv then windowed self-attention with residual
NodePtr csb_block(Graph& g, ParamLookup& P, NodePtr x, const std::string& base,
                  int window, int heads) {
  NodePtr y = autodiff::gelu(
      g, autodiff::conv2d(g, x, P(base + ".conv.w"), P(base + ".conv.b"), 2, 1));
  NodePtr a = windowed_attention(g, P, y, y, base + ".attn", window, heads);
  return autodiff::add(g, y, a);
}

// cross block: both pyramids downsample; queries from x, keys/values from y
std::pair<NodePtr, NodePtr> ccb_block(Graph& g, ParamLookup& P, NodePtr x, NodePtr y,
                                      const std::string& base, int window, int heads) {
  NodePtr xs = autodiff::gelu(
      g, autodiff::conv2d(g, x, P(base + ".convx.w"), P(base + ".convx.b"), 2, 1));
  NodePtr ys = autodiff::gelu(
      g, autodiff::conv2d(g, y, P(base + ".convy.w"), P(base + ".convy.b"), 2, 1));
  NodePtr a = windowed_attention(g, P, xs, ys, base + ".attn", window, heads);
  return {autodiff::add(g, xs, a), ys};
}

NodePtr decode(Graph& g, ParamLookup& P, const std::string& stream,
               std::vector<NodePtr>& enc, NodePtr stem, int scales) {
  NodePtr cur = enc.back();
  for (int s = scales - 1; s >= 0; --s) {
    std::string base = stream + ".dec" + std::to_string(s);
    NodePtr up = autodiff::gelu(g, autodiff::deconv2(g, cur, P(base + ".w"), P(base + ".b")));
    NodePtr skip = s > 0 ? enc[size_t(s) - 1] : stem;
    cur = autodiff::add(g, up, skip);
  }
  return cur;
}

}  // namespace

NodePtr build_network_graph(Graph& g, const GuidanceBundle& bundle,
                            const NetConfig& cfg, const ModelParams& params,
                            std::map<std::string, NodePtr>* param_nodes) {
  cfg.validate();
  ParamLookup P{g, params, param_nodes != nullptr, param_nodes};

  int h = 0, w = 0;
  if (cfg.use_pixel) {
    h = bundle.i0dot.h;
    w = bundle.i0dot.w;
  } else if (cfg.use_region) {
    h = bundle.i0ddot.h;
    w = bundle.i0ddot.w;
  } else {
    h = bundle.trace.h;
    w = bundle.trace.w;
  }
  if (h < 1 || w < 1) throw ContractError("build_network_graph: empty guidance bundle");

  const int div = cfg.spatial_divisor();
  const int ph = (div - h % div) % div;
  const int pw = (div - w % div) % div;

  auto guidance_leaf = [&](const Raster& r) {
    return autodiff::reflect_pad(g, g.leaf(raster_to_tensor(r), false), ph, pw);
  };

  NodePtr i0dot, i1dot, i0ddot, i1ddot, trace_stack;
  if (cfg.use_pixel) {
    i0dot = guidance_leaf(bundle.i0dot);
    i1dot = guidance_leaf(bundle.i1dot);
  }
  if (cfg.use_region) {
    i0ddot = guidance_leaf(bundle.i0ddot);
    i1ddot = guidance_leaf(bundle.i1ddot);
  }
  if (cfg.use_sketch) {
    if (bundle.trace.depth() != int(cfg.trace_times.size()))
      throw ContractError("build_network_graph: trace depth mismatch");
    std::vector<NodePtr> maps;
    for (const Raster& m : bundle.trace.maps) maps.push_back(guidance_leaf(m));
    trace_stack = maps.size() == 1 ? maps[0] : autodiff::concat_channels(g, maps);
  }

  std::vector<NodePtr> stream_outputs;

  if (cfg.stream_csb) {
    std::vector<NodePtr> gs;
    if (cfg.use_pixel) {
      gs.push_back(i0dot);
      gs.push_back(i1dot);
    }
    if (cfg.use_sketch) gs.push_back(trace_stack);
    if (cfg.use_region) {
      gs.push_back(i0ddot);
      gs.push_back(i1ddot);
    }
    NodePtr coarse = gs.size() == 1 ? gs[0] : autodiff::concat_channels(g, gs);
    coarse = two_convs(g, P, coarse, "csb.coarse");
    std::vector<NodePtr> enc;
    NodePtr cur = coarse;
    for (int s = 0; s < cfg.scales; ++s) {
      cur = csb_block(g, P, cur, "csb.enc" + std::to_string(s), cfg.window, cfg.heads);
      enc.push_back(cur);
    }
    stream_outputs.push_back(decode(g, P, "csb", enc, coarse, cfg.scales));
  }

  for (int kdx = 0; kdx < 2; ++kdx) {
    if (!(kdx == 0 ? cfg.stream_ccb0 : cfg.stream_ccb1)) continue;
    std::string sn = "ccb" + std::to_string(kdx);
    std::vector<NodePtr> qs;
    if (cfg.use_pixel) qs.push_back(kdx == 0 ? i0dot : i1dot);
    if (cfg.use_region) qs.push_back(kdx == 0 ? i0ddot : i1ddot);
    NodePtr xq = qs.size() == 1 ? qs[0] : autodiff::concat_channels(g, qs);
    NodePtr stem = two_convs(g, P, xq, sn + ".stem");
    NodePtr y = two_convs(g, P, trace_stack, sn + ".ystem");
    std::vector<NodePtr> enc;
    NodePtr x = stem;
    for (int s = 0; s < cfg.scales; ++s) {
      auto [nx, ny] = ccb_block(g, P, x, y, sn + ".enc" + std::to_string(s),
                                cfg.window, cfg.heads);
      x = nx;
      y = ny;
      enc.push_back(x);
    }
    stream_outputs.push_back(decode(g, P, sn, enc, stem, cfg.scales));
  }

  // fusion: concat streams, two convs, 1-channel linear output, clamp
  NodePtr fused = stream_outputs.size() == 1 ? stream_outputs[0]
                                             : autodiff::concat_channels(g, stream_outputs);
  fused = autodiff::gelu(
      g, autodiff::conv2d(g, fused, P("fusion.conv0.w"), P("fusion.conv0.b"), 1, 1));
  fused = autodiff::conv2d(g, fused, P("fusion.conv1.w"), P("fusion.conv1.b"), 1, 1);
  fused = autodiff::clamp01(g, fused);
  return autodiff::crop_to(g, fused, h, w);
}

Raster net_forward(const GuidanceBundle& bundle, const NetConfig& cfg,
                   const ModelParams& params, autodiff::AttentionAudit* audit) {
  Graph g;
  g.audit = audit;
  NodePtr out = build_network_graph(g, bundle, cfg, params, nullptr);
  Raster r(out->value.dim(0), out->value.dim(1), 1);
  r.data = out->value.data;
  return r;
}

Raster fcsin_forward(const Raster& i0, const Raster& i1, const NetConfig& cfg,
                     const GuidanceParams& gp, const ModelParams& params) {
  GuidanceBundle b = extract_guidance(i0, i1, cfg, gp);
  return net_forward(b, cfg, params);
}

Tensor window_partition_map(const Tensor& x, int m) {
  Graph g;
  NodePtr n = g.leaf(x, false);
  const int h = x.dim(0), w = x.dim(1);
  const int ph = (m - h % m) % m, pw = (m - w % m) % m;
  if (ph || pw) n = autodiff::reflect_pad(g, n, ph, pw);
  return autodiff::window_partition(g, n, m)->value;
}

Tensor window_merge_map(const Tensor& t, int m, int h, int w) {
  Graph g;
  const int hp = (h + m - 1) / m * m, wp = (w + m - 1) / m * m;
  NodePtr n = autodiff::window_merge(g, g.leaf(t, false), m, hp, wp);
  return autodiff::crop_to(g, n, h, w)->value;
}

Tensor csb_forward(const Tensor& x, const BlockParams& p, int window, int heads) {
  Graph g;
  ModelParams mp;
  mp.tensors = {{"b.conv.w", p.conv_w}, {"b.conv.b", p.conv_b}, {"b.attn.wq", p.wq},
                {"b.attn.wk", p.wk},    {"b.attn.wv", p.wv},    {"b.attn.wo", p.wo}};
  ParamLookup P{g, mp, false, nullptr};
  return csb_block(g, P, g.leaf(x, false), "b", window, heads)->value;
}

std::pair<Tensor, Tensor> ccb_forward(const Tensor& x, const Tensor& y,
                                      const CrossBlockParams& p, int window, int heads) {
  if (!x.same_shape(y)) throw ContractError("ccb_forward: X/Y dims differ");
  Graph g;
  ModelParams mp;
  mp.tensors = {{"b.convx.w", p.convx_w}, {"b.convx.b", p.convx_b},
                {"b.convy.w", p.convy_w}, {"b.convy.b", p.convy_b},
                {"b.attn.wq", p.wq},      {"b.attn.wk", p.wk},
                {"b.attn.wv", p.wv},      {"b.attn.wo", p.wo}};
  ParamLookup P{g, mp, false, nullptr};
  auto [nx, ny] = ccb_block(g, P, g.leaf(x, false), g.leaf(y, false), "b", window, heads);
  return {nx->value, ny->value};
}

Tensor attention_matrix(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.ndim() != 2 || k.ndim() != 2 || v.ndim() != 2)
    throw ContractError("attention_matrix: expects [T,C] matrices");
  if (q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0))
    throw ContractError("attention_matrix: inconsistent shapes");
  const int tq = q.dim(0), c = q.dim(1);
  // general rectangular case handled directly (rows of q attend over k rows)
  const int tk = k.dim(0), cv = v.dim(1);
  Tensor out({tq, cv});
  const double inv_sqrt_d = 1.0 / std::sqrt(double(c));
  std::vector<double> row(tk);
  for (int i = 0; i < tq; ++i) {
    double mx = -1e300;
    for (int j = 0; j < tk; ++j) {
      double s = 0.0;
      for (int d = 0; d < c; ++d) s += q.data[size_t(i) * c + d] * k.data[size_t(j) * c + d];
      row[j] = s * inv_sqrt_d;
      mx = std::max(mx, row[j]);
    }
    double denom = 0.0;
    for (int j = 0; j < tk; ++j) {
      row[j] = std::exp(row[j] - mx);
      denom += row[j];
    }
    for (int j = 0; j < tk; ++j) row[j] /= denom;
    for (int d = 0; d < cv; ++d) {
      double acc = 0.0;
      for (int j = 0; j < tk; ++j) acc += row[j] * v.data[size_t(j) * cv + d];
      out.data[size_t(i) * cv + d] = acc;
    }
  }
  return out;
}

}  // namespace fcsin
