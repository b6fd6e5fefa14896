#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fcsin/tensor.hpp"

namespace fcsin::autodiff {

// Define-by-run reverse-mode tape. Ops append nodes in topological order;
// Graph::backward walks the tape in reverse. Heavy lifting (convolution,
// attention, matmul) is delegated to fcsin::kernels, so forward and
// backward inherit the kernels' thread-count-independent determinism.

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;                     // allocated lazily during backward
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // scatters this->grad into parents

  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor(value.shape, 0.0);
    return grad;
  }
};

/// Optional audit of attention softmax rows (acceptance checks read it).
struct AttentionAudit {
  int64_t rows = 0;
  double max_row_sum_err = 0.0;
};

struct Graph {
  std::vector<NodePtr> tape;
  AttentionAudit* audit = nullptr;

  NodePtr leaf(Tensor v, bool requires_grad = false);
  /// Leaf sharing external storage is not supported; parameters are copied
  /// in and their gradients read back from `grad` after backward().
  void backward(const NodePtr& scalar_output);
};

// shape: x [h,w,ci], w [kh,kw,ci,co], b [co] or empty node
NodePtr conv2d(Graph& g, NodePtr x, NodePtr w, NodePtr b, int stride, int pad);
// transposed conv, 2x2 kernel stride 2: x [h,w,ci], w [2,2,ci,co], b [co]
NodePtr deconv2(Graph& g, NodePtr x, NodePtr w, NodePtr b);
NodePtr gelu(Graph& g, NodePtr x);
NodePtr add(Graph& g, NodePtr a, NodePtr b);
NodePtr scale(Graph& g, NodePtr x, double s);
NodePtr concat_channels(Graph& g, const std::vector<NodePtr>& xs);
NodePtr clamp01(Graph& g, NodePtr x);
/// Mirror-pad [h,w,c] on bottom/right to (h+pb, w+pr); inverse of crop_to.
NodePtr reflect_pad(Graph& g, NodePtr x, int pad_bottom, int pad_right);
NodePtr crop_to(Graph& g, NodePtr x, int out_h, int out_w);
/// [h,w,c] -> [K, M*M, c] window partition; dims must divide by M.
NodePtr window_partition(Graph& g, NodePtr x, int m);
NodePtr window_merge(Graph& g, NodePtr x, int m, int h, int w);
/// Batched projection: x [K,T,ci] times w [ci,co].
NodePtr project(Graph& g, NodePtr x, NodePtr w);
/// Multi-head scaled dot-product attention over windows; q,k,v [K,T,C].
NodePtr attention(Graph& g, NodePtr q, NodePtr k, NodePtr v, int heads);
/// Per-pixel channel L2 normalization: y = x / sqrt(sum_c x^2 + eps).
NodePtr channel_l2norm(Graph& g, NodePtr x, double eps = 1e-12);

// scalar outputs (shape [1])
NodePtr mean_abs_diff(Graph& g, NodePtr x, const Tensor& target);
NodePtr mean_sq_diff(Graph& g, NodePtr x, NodePtr y);
NodePtr weighted_sum(Graph& g, const std::vector<NodePtr>& xs,
                     const std::vector<double>& ws);

}  // namespace fcsin::autodiff
