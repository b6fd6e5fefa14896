#include "fcsin/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "fcsin/kernels.hpp"

namespace fcsin::autodiff {

namespace {

void accumulate(Tensor& dst, const Tensor& src) {
  for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

NodePtr make_node(Graph& g, Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const NodePtr& p : n->parents) n->requires_grad |= p->requires_grad;
  if (n->requires_grad) n->backprop = std::move(backprop);
  g.tape.push_back(n);
  return n;
}

}  // namespace

NodePtr Graph::leaf(Tensor v, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  tape.push_back(n);
  return n;
}

void Graph::backward(const NodePtr& scalar_output) {
  if (scalar_output->value.numel() != 1)
    throw std::logic_error("backward: output must be scalar");
  scalar_output->ensure_grad().data[0] = 1.0;
  for (auto it = tape.rbegin(); it != tape.rend(); ++it) {
    Node& n = **it;
    if (!n.backprop || n.grad.empty()) continue;
    n.backprop(n);
  }
}

NodePtr conv2d(Graph& g, NodePtr x, NodePtr w, NodePtr b, int stride, int pad) {
  const int h = x->value.dim(0), iw = x->value.dim(1), ci = x->value.dim(2);
  const int kh = w->value.dim(0), kw = w->value.dim(1), co = w->value.dim(3);
  if (w->value.dim(2) != ci) throw std::logic_error("conv2d: channel mismatch");
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (iw + 2 * pad - kw) / stride + 1;
  Tensor out({oh, ow, co});
  kernels::conv2d_forward(x->value.ptr(), h, iw, ci, w->value.ptr(), kh, kw, co,
                          b ? b->value.ptr() : nullptr, stride, pad, out.ptr());
  std::vector<NodePtr> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(g, std::move(out), std::move(parents), [=](Node& n) {
    Tensor gin, gw, gb;
    double* gin_p = nullptr;
    double* gw_p = nullptr;
    double* gb_p = nullptr;
    if (x->requires_grad) {
      gin = Tensor(x->value.shape);
      gin_p = gin.ptr();
    }
    if (w->requires_grad) {
      gw = Tensor(w->value.shape);
      gw_p = gw.ptr();
    }
    if (b && b->requires_grad) {
      gb = Tensor(b->value.shape);
      gb_p = gb.ptr();
    }
    kernels::conv2d_backward(x->value.ptr(), h, iw, ci, w->value.ptr(), kh, kw,
                             co, stride, pad, n.grad.ptr(), gin_p, gw_p, gb_p);
    if (gin_p) accumulate(x->ensure_grad(), gin);
    if (gw_p) accumulate(w->ensure_grad(), gw);
    if (gb_p) accumulate(b->ensure_grad(), gb);
  });
}

NodePtr deconv2(Graph& g, NodePtr x, NodePtr w, NodePtr b) {
  const int h = x->value.dim(0), iw = x->value.dim(1), ci = x->value.dim(2);
  const int co = w->value.dim(3);
  Tensor out({2 * h, 2 * iw, co});
  kernels::deconv2_forward(x->value.ptr(), h, iw, ci, w->value.ptr(), co,
                           b ? b->value.ptr() : nullptr, out.ptr());
  std::vector<NodePtr> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(g, std::move(out), std::move(parents), [=](Node& n) {
    Tensor gin, gw, gb;
    double* gin_p = nullptr;
    double* gw_p = nullptr;
    double* gb_p = nullptr;
    if (x->requires_grad) {
      gin = Tensor(x->value.shape);
      gin_p = gin.ptr();
    }
    if (w->requires_grad) {
      gw = Tensor(w->value.shape);
      gw_p = gw.ptr();
    }
    if (b && b->requires_grad) {
      gb = Tensor(b->value.shape);
      gb_p = gb.ptr();
    }
    kernels::deconv2_backward(x->value.ptr(), h, iw, ci, w->value.ptr(), co,
                              n.grad.ptr(), gin_p, gw_p, gb_p);
    if (gin_p) accumulate(x->ensure_grad(), gin);
    if (gw_p) accumulate(w->ensure_grad(), gw);
    if (gb_p) accumulate(b->ensure_grad(), gb);
  });
}

NodePtr gelu(Graph& g, NodePtr x) {
  Tensor out(x->value.shape);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (size_t i = 0; i < out.data.size(); ++i) {
    double v = x->value.data[i];
    out.data[i] = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
  }
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
    for (size_t i = 0; i < gx.data.size(); ++i) {
      double v = x->value.data[i];
      double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
      double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      gx.data[i] += n.grad.data[i] * (cdf + v * pdf);
    }
  });
}

NodePtr add(Graph& g, NodePtr a, NodePtr b) {
  if (!a->value.same_shape(b->value)) throw std::logic_error("add: shape mismatch");
  Tensor out(a->value.shape);
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = a->value.data[i] + b->value.data[i];
  return make_node(g, std::move(out), {a, b}, [=](Node& n) {
    if (a->requires_grad) accumulate(a->ensure_grad(), n.grad);
    if (b->requires_grad) accumulate(b->ensure_grad(), n.grad);
  });
}

NodePtr scale(Graph& g, NodePtr x, double s) {
  Tensor out(x->value.shape);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = s * x->value.data[i];
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += s * n.grad.data[i];
  });
}

NodePtr concat_channels(Graph& g, const std::vector<NodePtr>& xs) {
  if (xs.empty()) throw std::logic_error("concat_channels: empty input");
  const int h = xs[0]->value.dim(0), w = xs[0]->value.dim(1);
  int ct = 0;
  for (const NodePtr& x : xs) {
    if (x->value.dim(0) != h || x->value.dim(1) != w)
      throw std::logic_error("concat_channels: spatial dims differ");
    ct += x->value.dim(2);
  }
  Tensor out({h, w, ct});
  size_t px = size_t(h) * w;
  int off = 0;
  for (const NodePtr& x : xs) {
    int c = x->value.dim(2);
    for (size_t p = 0; p < px; ++p)
      for (int ch = 0; ch < c; ++ch)
        out.data[p * ct + off + ch] = x->value.data[p * c + ch];
    off += c;
  }
  return make_node(g, std::move(out), xs, [=](Node& n) {
    int o = 0;
    for (const NodePtr& x : xs) {
      int c = x->value.dim(2);
      if (x->requires_grad) {
        Tensor& gx = x->ensure_grad();
        for (size_t p = 0; p < px; ++p)
          for (int ch = 0; ch < c; ++ch)
            gx.data[p * c + ch] += n.grad.data[p * size_t(ct) + o + ch];
      }
      o += c;
    }
  });
}

NodePtr clamp01(Graph& g, NodePtr x) {
  Tensor out(x->value.shape);
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = std::min(1.0, std::max(0.0, x->value.data[i]));
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (size_t i = 0; i < gx.data.size(); ++i) {
      double v = x->value.data[i];
      if (v >= 0.0 && v <= 1.0) gx.data[i] += n.grad.data[i];
    }
  });
}

NodePtr reflect_pad(Graph& g, NodePtr x, int pad_bottom, int pad_right) {
  const int h = x->value.dim(0), w = x->value.dim(1), c = x->value.dim(2);
  if (pad_bottom >= h || pad_right >= w)
    throw std::logic_error("reflect_pad: pad too large for input");
  if (pad_bottom == 0 && pad_right == 0) return x;
  const int nh = h + pad_bottom, nw = w + pad_right;
  auto mirror = [](int i, int n) { return i < n ? i : 2 * n - 2 - i; };
  Tensor out({nh, nw, c});
  for (int y = 0; y < nh; ++y)
    for (int xx = 0; xx < nw; ++xx) {
      int sy = mirror(y, h), sx = mirror(xx, w);
      for (int ch = 0; ch < c; ++ch)
        out.data[(size_t(y) * nw + xx) * c + ch] =
            x->value.data[(size_t(sy) * w + sx) * c + ch];
    }
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (int y = 0; y < nh; ++y)
      for (int xx = 0; xx < nw; ++xx) {
        int sy = mirror(y, h), sx = mirror(xx, w);
        for (int ch = 0; ch < c; ++ch)
          gx.data[(size_t(sy) * w + sx) * c + ch] +=
              n.grad.data[(size_t(y) * nw + xx) * c + ch];
      }
  });
}

NodePtr crop_to(Graph& g, NodePtr x, int out_h, int out_w) {
  const int h = x->value.dim(0), w = x->value.dim(1), c = x->value.dim(2);
  if (out_h == h && out_w == w) return x;
  if (out_h > h || out_w > w) throw std::logic_error("crop_to: target larger than input");
  Tensor out({out_h, out_w, c});
  for (int y = 0; y < out_h; ++y)
    for (int xx = 0; xx < out_w; ++xx)
      for (int ch = 0; ch < c; ++ch)
        out.data[(size_t(y) * out_w + xx) * c + ch] =
            x->value.data[(size_t(y) * w + xx) * c + ch];
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (int y = 0; y < out_h; ++y)
      for (int xx = 0; xx < out_w; ++xx)
        for (int ch = 0; ch < c; ++ch)
          gx.data[(size_t(y) * w + xx) * c + ch] +=
              n.grad.data[(size_t(y) * out_w + xx) * c + ch];
  });
}

NodePtr window_partition(Graph& g, NodePtr x, int m) {
  const int h = x->value.dim(0), w = x->value.dim(1), c = x->value.dim(2);
  if (h % m != 0 || w % m != 0)
    throw std::logic_error("window_partition: dims not divisible by window");
  const int gy = h / m, gx = w / m, k = gy * gx, t = m * m;
  Tensor out({k, t, c});
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      int wnd = (y / m) * gx + (xx / m);
      int tok = (y % m) * m + (xx % m);
      for (int ch = 0; ch < c; ++ch)
        out.data[(size_t(wnd) * t + tok) * c + ch] =
            x->value.data[(size_t(y) * w + xx) * c + ch];
    }
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gxt = x->ensure_grad();
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        int wnd = (y / m) * gx + (xx / m);
        int tok = (y % m) * m + (xx % m);
        for (int ch = 0; ch < c; ++ch)
          gxt.data[(size_t(y) * w + xx) * c + ch] +=
              n.grad.data[(size_t(wnd) * t + tok) * c + ch];
      }
  });
}

NodePtr window_merge(Graph& g, NodePtr x, int m, int h, int w) {
  const int c = x->value.dim(2), t = m * m, gx = w / m;
  if (x->value.dim(0) != (h / m) * (w / m) || x->value.dim(1) != t)
    throw std::logic_error("window_merge: inconsistent window layout");
  Tensor out({h, w, c});
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      int wnd = (y / m) * gx + (xx / m);
      int tok = (y % m) * m + (xx % m);
      for (int ch = 0; ch < c; ++ch)
        out.data[(size_t(y) * w + xx) * c + ch] =
            x->value.data[(size_t(wnd) * t + tok) * c + ch];
    }
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gxt = x->ensure_grad();
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        int wnd = (y / m) * gx + (xx / m);
        int tok = (y % m) * m + (xx % m);
        for (int ch = 0; ch < c; ++ch)
          gxt.data[(size_t(wnd) * t + tok) * c + ch] +=
              n.grad.data[(size_t(y) * w + xx) * c + ch];
      }
  });
}

NodePtr project(Graph& g, NodePtr x, NodePtr w) {
  const int k = x->value.dim(0), t = x->value.dim(1), ci = x->value.dim(2);
  const int co = w->value.dim(1);
  if (w->value.dim(0) != ci) throw std::logic_error("project: dim mismatch");
  Tensor out({k, t, co});
  kernels::matmul_batched(x->value.ptr(), w->value.ptr(), k, t, ci, co, out.ptr());
  return make_node(g, std::move(out), {x, w}, [=](Node& n) {
    Tensor gx, gw;
    double* gx_p = nullptr;
    double* gw_p = nullptr;
    if (x->requires_grad) {
      gx = Tensor(x->value.shape);
      gx_p = gx.ptr();
    }
    if (w->requires_grad) {
      gw = Tensor(w->value.shape);
      gw_p = gw.ptr();
    }
    kernels::matmul_batched_backward(x->value.ptr(), w->value.ptr(), n.grad.ptr(),
                                     k, t, ci, co, gx_p, gw_p);
    if (gx_p) accumulate(x->ensure_grad(), gx);
    if (gw_p) accumulate(w->ensure_grad(), gw);
  });
}

NodePtr attention(Graph& g, NodePtr q, NodePtr k, NodePtr v, int heads) {
  const int nw = q->value.dim(0), t = q->value.dim(1), c = q->value.dim(2);
  if (!q->value.same_shape(k->value) || !q->value.same_shape(v->value))
    throw std::logic_error("attention: q/k/v shapes differ");
  if (c % heads != 0) throw std::logic_error("attention: heads must divide channels");
  auto attn = std::make_shared<Tensor>(std::vector<int>{nw, heads, t, t});
  Tensor out({nw, t, c});
  kernels::attention_forward(q->value.ptr(), k->value.ptr(), v->value.ptr(), nw,
                             t, c, heads, attn->ptr(), out.ptr());
  if (g.audit) {
    for (int64_t r = 0; r < int64_t(nw) * heads * t; ++r) {
      double sum = 0.0;
      for (int j = 0; j < t; ++j) sum += attn->data[size_t(r) * t + j];
      g.audit->max_row_sum_err = std::max(g.audit->max_row_sum_err, std::abs(sum - 1.0));
      ++g.audit->rows;
    }
  }
  return make_node(g, std::move(out), {q, k, v}, [=](Node& n) {
    Tensor gq(q->value.shape), gk(k->value.shape), gv(v->value.shape);
    kernels::attention_backward(q->value.ptr(), k->value.ptr(), v->value.ptr(),
                                attn->ptr(), n.grad.ptr(), nw, t, c, heads,
                                gq.ptr(), gk.ptr(), gv.ptr());
    if (q->requires_grad) accumulate(q->ensure_grad(), gq);
    if (k->requires_grad) accumulate(k->ensure_grad(), gk);
    if (v->requires_grad) accumulate(v->ensure_grad(), gv);
  });
}

NodePtr channel_l2norm(Graph& g, NodePtr x, double eps) {
  const int h = x->value.dim(0), w = x->value.dim(1), c = x->value.dim(2);
  Tensor out(x->value.shape);
  const size_t px = size_t(h) * w;
  for (size_t p = 0; p < px; ++p) {
    double s = eps;
    for (int ch = 0; ch < c; ++ch) {
      double vv = x->value.data[p * c + ch];
      s += vv * vv;
    }
    double inv = 1.0 / std::sqrt(s);
    for (int ch = 0; ch < c; ++ch) out.data[p * c + ch] = x->value.data[p * c + ch] * inv;
  }
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (size_t p = 0; p < px; ++p) {
      double s = eps;
      for (int ch = 0; ch < c; ++ch) {
        double vv = x->value.data[p * c + ch];
        s += vv * vv;
      }
      double invn = 1.0 / std::sqrt(s);
      double dot = 0.0;
      for (int ch = 0; ch < c; ++ch)
        dot += n.grad.data[p * c + ch] * x->value.data[p * c + ch];
      for (int ch = 0; ch < c; ++ch)
        gx.data[p * c + ch] += n.grad.data[p * c + ch] * invn -
                               x->value.data[p * c + ch] * dot * invn * invn * invn;
    }
  });
}

NodePtr mean_abs_diff(Graph& g, NodePtr x, const Tensor& target) {
  if (!x->value.same_shape(target)) throw std::logic_error("mean_abs_diff: shape mismatch");
  const double n_inv = 1.0 / double(x->value.numel());
  double acc = 0.0;
  for (size_t i = 0; i < x->value.data.size(); ++i)
    acc += std::abs(x->value.data[i] - target.data[i]);
  Tensor out({1});
  out.data[0] = acc * n_inv;
  Tensor tgt = target;
  return make_node(g, std::move(out), {x}, [=](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    double go = n.grad.data[0] * n_inv;
    for (size_t i = 0; i < gx.data.size(); ++i) {
      double d = x->value.data[i] - tgt.data[i];
      gx.data[i] += go * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
    }
  });
}

NodePtr mean_sq_diff(Graph& g, NodePtr x, NodePtr y) {
  if (!x->value.same_shape(y->value)) throw std::logic_error("mean_sq_diff: shape mismatch");
  const double n_inv = 1.0 / double(x->value.numel());
  double acc = 0.0;
  for (size_t i = 0; i < x->value.data.size(); ++i) {
    double d = x->value.data[i] - y->value.data[i];
    acc += d * d;
  }
  Tensor out({1});
  out.data[0] = acc * n_inv;
  return make_node(g, std::move(out), {x, y}, [=](Node& n) {
    double go = n.grad.data[0] * n_inv * 2.0;
    if (x->requires_grad) {
      Tensor& gx = x->ensure_grad();
      for (size_t i = 0; i < gx.data.size(); ++i)
        gx.data[i] += go * (x->value.data[i] - y->value.data[i]);
    }
    if (y->requires_grad) {
      Tensor& gy = y->ensure_grad();
      for (size_t i = 0; i < gy.data.size(); ++i)
        gy.data[i] -= go * (x->value.data[i] - y->value.data[i]);
    }
  });
}

NodePtr weighted_sum(Graph& g, const std::vector<NodePtr>& xs,
                     const std::vector<double>& ws) {
  if (xs.size() != ws.size() || xs.empty())
    throw std::logic_error("weighted_sum: arity mismatch");
  Tensor out({1});
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i]->value.numel() != 1) throw std::logic_error("weighted_sum: needs scalars");
    out.data[0] += ws[i] * xs[i]->value.data[0];
  }
  return make_node(g, std::move(out), xs, [=](Node& n) {
    for (size_t i = 0; i < xs.size(); ++i)
      if (xs[i]->requires_grad)
        xs[i]->ensure_grad().data[0] += ws[i] * n.grad.data[0];
  });
}

}  // namespace fcsin::autodiff
