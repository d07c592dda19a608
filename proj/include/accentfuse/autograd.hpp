// Copyright (c) 2026 The accentfuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// A small reverse-mode tape over dense matrices.
//
// Sequence batches are "packed": the frames of every utterance are stacked
// vertically without padding and a Segments object records each utterance's
// length. Every sequence op works segment by segment, which is equivalent to
// padding the batch and re-masking after every layer.

#pragma once

#include <algorithm>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "accentfuse/common.hpp"

namespace accentfuse {

/// Lengths of the utterances packed into one matrix.
struct Segments {
  std::vector<int> lengths;

  Segments() = default;
  explicit Segments(std::vector<int> l) : lengths(std::move(l)) {}

  int count() const { return static_cast<int>(lengths.size()); }
  int total() const { return std::accumulate(lengths.begin(), lengths.end(), 0); }
  std::vector<int> offsets() const {
    std::vector<int> off(lengths.size() + 1, 0);
    for (size_t i = 0; i < lengths.size(); ++i) off[i + 1] = off[i] + lengths[i];
    return off;
  }
  bool operator==(const Segments& o) const { return lengths == o.lengths; }
};

template <typename S>
struct Parameter {
  std::string name;
  Mat<S> value;
  Mat<S> grad;
  bool trainable = true;
  bool is_buffer = false;  // running statistics; saved but never optimized

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

/// Named parameter tensors in insertion order. Addresses are stable.
template <typename S>
class ParameterStore {
 public:
  Parameter<S>& Add(const std::string& name, int rows, int cols, bool is_buffer = false) {
    ACCENTFUSE_REQUIRE(!index_.count(name), ContractError, "duplicate parameter: " + name);
    auto p = std::make_unique<Parameter<S>>();
    p->name = name;
    p->value = Mat<S>::Zero(rows, cols);
    p->grad = Mat<S>::Zero(rows, cols);
    p->is_buffer = is_buffer;
    p->trainable = !is_buffer;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  bool Has(const std::string& name) const { return index_.count(name) > 0; }

  Parameter<S>& Get(const std::string& name) {
    auto it = index_.find(name);
    ACCENTFUSE_REQUIRE(it != index_.end(), LookupError, "unknown parameter: " + name);
    return *params_[it->second];
  }
  const Parameter<S>& Get(const std::string& name) const {
    auto it = index_.find(name);
    ACCENTFUSE_REQUIRE(it != index_.end(), LookupError, "unknown parameter: " + name);
    return *params_[it->second];
  }

  std::vector<Parameter<S>*> All() {
    std::vector<Parameter<S>*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }
  std::vector<const Parameter<S>*> All() const {
    std::vector<const Parameter<S>*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  std::vector<Parameter<S>*> WithPrefix(const std::string& prefix) {
    std::vector<Parameter<S>*> out;
    for (auto& p : params_)
      if (p->name.rfind(prefix, 0) == 0) out.push_back(p.get());
    return out;
  }

  void ZeroGrad() {
    for (auto& p : params_) p->ZeroGrad();
  }

  /// Marks every non-buffer parameter under `prefix` as (non-)trainable.
  void SetTrainable(const std::string& prefix, bool trainable) {
    for (auto* p : WithPrefix(prefix))
      if (!p->is_buffer) p->trainable = trainable;
  }

  /// FNV-1a over names and raw value bytes (buffers included).
  std::uint64_t Checksum(const std::string& prefix = "") const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, size_t n) {
      const auto* b = static_cast<const unsigned char*>(data);
      for (size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
      }
    };
    for (const auto& p : params_) {
      if (p->name.rfind(prefix, 0) != 0) continue;
      mix(p->name.data(), p->name.size());
      mix(p->value.data(), sizeof(S) * static_cast<size_t>(p->value.size()));
    }
    return h;
  }

  size_t size() const { return params_.size(); }

  template <typename T>
  ParameterStore<T> Cast() const {
    ParameterStore<T> out;
    for (const auto& p : params_) {
      auto& q = out.Add(p->name, static_cast<int>(p->value.rows()),
                        static_cast<int>(p->value.cols()), p->is_buffer);
      q.value = p->value.template cast<T>();
      q.trainable = p->trainable;
    }
    return out;
  }

  /// Copies values of every parameter whose name exists in `src` (after
  /// replacing `src_prefix` by `dst_prefix`). Returns the number copied.
  int CopyFrom(const ParameterStore<S>& src, const std::string& src_prefix,
               const std::string& dst_prefix) {
    int n = 0;
    for (const auto* p : src.All()) {
      if (p->name.rfind(src_prefix, 0) != 0) continue;
      const std::string name = dst_prefix + p->name.substr(src_prefix.size());
      if (!Has(name)) continue;
      auto& q = Get(name);
      ACCENTFUSE_REQUIRE(q.value.rows() == p->value.rows() && q.value.cols() == p->value.cols(),
                         ConfigError, "shape mismatch copying " + name);
      q.value = p->value;
      ++n;
    }
    return n;
  }

 private:
  std::vector<std::unique_ptr<Parameter<S>>> params_;
  std::map<std::string, size_t> index_;
};

/// Forward-pass mode shared by dropout and batch normalization.
struct RunContext {
  bool training = false;
  Rng* rng = nullptr;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <typename S>
class Graph {
 public:
  using Backward = std::function<void(Graph&)>;

  struct Node {
    Mat<S> value;
    Mat<S> grad;
    bool requires_grad = false;
    Parameter<S>* param = nullptr;
    Backward backward;
  };

  Var Constant(Mat<S> v) { return Push(std::move(v), false, nullptr); }

  /// Leaf that reads a parameter; gradients flow back into Parameter::grad
  /// only when the parameter is trainable.
  Var Param(Parameter<S>& p) {
    Var v = Push(p.value, p.trainable && !p.is_buffer, nullptr);
    nodes_[v.id].param = &p;
    return v;
  }

  Var Input(Mat<S> v, bool requires_grad) { return Push(std::move(v), requires_grad, nullptr); }

  Var Push(Mat<S> v, bool requires_grad, Backward bw) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(bw);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Mat<S>& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  bool requires_grad(std::initializer_list<Var> vs) const {
    for (Var v : vs)
      if (v.valid() && nodes_[v.id].requires_grad) return true;
    return false;
  }

  /// Gradient accumulator of a node, zero-initialized on first touch.
  Mat<S>& grad(Var v) {
    auto& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = Mat<S>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }
  bool has_grad(Var v) const { return nodes_[v.id].grad.size() != 0; }

  /// Reverse sweep from a scalar node.
  void Backprop(Var loss) {
    ACCENTFUSE_REQUIRE(value(loss).size() == 1, ContractError, "backprop needs a scalar");
    if (!nodes_[loss.id].requires_grad) return;
    grad(loss).setOnes();
    for (int i = loss.id; i >= 0; --i) {
      auto& n = nodes_[i];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this);
      if (n.param != nullptr) {
        if (n.param->grad.size() == 0) n.param->ZeroGrad();
        n.param->grad += n.grad;
      }
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Elementwise and dense ops

template <typename S>
Var Add(Graph<S>& g, Var a, Var b) {
  ACCENTFUSE_REQUIRE(g.value(a).rows() == g.value(b).rows() && g.value(a).cols() == g.value(b).cols(),
                     ContractError, "Add: shape mismatch");
  Mat<S> y = g.value(a) + g.value(b);
  return g.Push(std::move(y), g.requires_grad({a, b}), [a, b, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
    if (gr.requires_grad(a)) gr.grad(a) += gr.grad(out);
    if (gr.requires_grad(b)) gr.grad(b) += gr.grad(out);
  });
}

/// a + scale * b
template <typename S>
Var AddScaled(Graph<S>& g, Var a, Var b, S scale) {
  Mat<S> y = g.value(a) + scale * g.value(b);
  return g.Push(std::move(y), g.requires_grad({a, b}),
                [a, b, scale, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  if (gr.requires_grad(a)) gr.grad(a) += gr.grad(out);
                  if (gr.requires_grad(b)) gr.grad(b) += scale * gr.grad(out);
                });
}

template <typename S>
Var Scale(Graph<S>& g, Var a, S scale) {
  Mat<S> y = scale * g.value(a);
  return g.Push(std::move(y), g.requires_grad(a), [a, scale, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
    gr.grad(a) += scale * gr.grad(out);
  });
}

template <typename S>
Var Relu(Graph<S>& g, Var a) {
  Mat<S> y = g.value(a).cwiseMax(S(0));
  return g.Push(std::move(y), g.requires_grad(a), [a, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
    gr.grad(a).array() += (gr.value(a).array() > S(0)).template cast<S>() * gr.grad(out).array();
  });
}

template <typename S>
Var Sigmoid(Graph<S>& g, Var a) {
  Mat<S> y = (S(1) + (-g.value(a).array()).exp()).inverse().matrix();
  return g.Push(std::move(y), g.requires_grad(a), [a, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
    const auto& s = gr.value(out).array();
    gr.grad(a).array() += gr.grad(out).array() * s * (S(1) - s);
  });
}

/// x * W + b, with x: N x in, W: in x out, b: 1 x out (b optional).
template <typename S>
Var Linear(Graph<S>& g, Var x, Var w, Var b = Var{}) {
  const auto& X = g.value(x);
  const auto& W = g.value(w);
  ACCENTFUSE_REQUIRE(X.cols() == W.rows(), ContractError,
                     "Linear: input width " + std::to_string(X.cols()) + " vs weight rows " +
                         std::to_string(W.rows()));
  Mat<S> y(X.rows(), W.cols());
  y.noalias() = X * W;
  if (b.valid()) y.rowwise() += g.value(b).row(0);
  return g.Push(std::move(y), g.requires_grad({x, w, b}),
                [x, w, b, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const auto& dy = gr.grad(out);
                  if (gr.requires_grad(x)) gr.grad(x).noalias() += dy * gr.value(w).transpose();
                  if (gr.requires_grad(w)) gr.grad(w).noalias() += gr.value(x).transpose() * dy;
                  if (b.valid() && gr.requires_grad(b)) gr.grad(b) += dy.colwise().sum();
                });
}

template <typename S>
Var ConcatCols(Graph<S>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  ACCENTFUSE_REQUIRE(A.rows() == B.rows(), ContractError, "ConcatCols: row mismatch");
  Mat<S> y(A.rows(), A.cols() + B.cols());
  y.leftCols(A.cols()) = A;
  y.rightCols(B.cols()) = B;
  const auto ca = A.cols();
  const auto cb = B.cols();
  return g.Push(std::move(y), g.requires_grad({a, b}),
                [a, b, ca, cb, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const auto& dy = gr.grad(out);
                  if (gr.requires_grad(a)) gr.grad(a) += dy.leftCols(ca);
                  if (gr.requires_grad(b)) gr.grad(b) += dy.rightCols(cb);
                });
}

/// Inverted dropout. Identity outside training or at rate 0.
template <typename S>
Var Dropout(Graph<S>& g, Var x, double rate, const RunContext& ctx) {
  if (!ctx.training || rate <= 0.0 || ctx.rng == nullptr) return x;
  const auto& X = g.value(x);
  Mat<S> mask(X.rows(), X.cols());
  const S keep_scale = S(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = Uniform01(*ctx.rng) < rate ? S(0) : keep_scale;
  Mat<S> y = X.cwiseProduct(mask);
  return g.Push(std::move(y), g.requires_grad(x),
                [x, mask = std::move(mask), out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  gr.grad(x) += gr.grad(out).cwiseProduct(mask);
                });
}

// ---------------------------------------------------------------------------
// Sequence ops

/// Output length of a "same"-padded strided convolution.
inline int ConvOutputLength(int length, int stride) { return (length + stride - 1) / stride; }

inline Segments ConvOutputSegments(const Segments& in, int stride) {
  Segments out;
  out.lengths.reserve(in.lengths.size());
  for (int l : in.lengths) out.lengths.push_back(ConvOutputLength(l, stride));
  return out;
}

/// 1-D convolution over each segment with zero padding at segment edges.
/// Weight layout: (kernel * in_channels) x out_channels, tap-major. Output
/// frame t is centered on input frame stride * t.
template <typename S>
Var Conv1d(Graph<S>& g, Var x, const Segments& segs, Var w, int kernel, int stride = 1, int dilation = 1) {
  const auto& X = g.value(x);
  const auto& W = g.value(w);
  const int cin = static_cast<int>(X.cols());
  ACCENTFUSE_REQUIRE(W.rows() == static_cast<Eigen::Index>(kernel) * cin, ContractError,
                     "Conv1d: weight rows must equal kernel * in_channels");
  ACCENTFUSE_REQUIRE(X.rows() == segs.total(), ContractError, "Conv1d: rows != segment total");
  if (kernel == 1 && stride == 1) return Linear(g, x, w);

  const Segments out_segs = ConvOutputSegments(segs, stride);
  const auto in_off = segs.offsets();
  const auto out_off = out_segs.offsets();
  const int pad = dilation * (kernel - 1) / 2;

  // im2col: each output row gathers `kernel` input rows.
  Mat<S> col = Mat<S>::Zero(out_segs.total(), static_cast<Eigen::Index>(kernel) * cin);
  for (int s = 0; s < segs.count(); ++s) {
    const int len = segs.lengths[s];
    for (int t = 0; t < out_segs.lengths[s]; ++t) {
      for (int j = 0; j < kernel; ++j) {
        const int src = stride * t - pad + j * dilation;
        if (src < 0 || src >= len) continue;
        col.row(out_off[s] + t).segment(static_cast<Eigen::Index>(j) * cin, cin) = X.row(in_off[s] + src);
      }
    }
  }
  Mat<S> y(col.rows(), W.cols());
  y.noalias() = col * W;
  const bool need_x = g.requires_grad(x);
  return g.Push(
      std::move(y), g.requires_grad({x, w}),
      [x, w, segs, out_segs, in_off, out_off, kernel, stride, dilation, pad, cin, need_x,
       col = std::move(col), out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
        const auto& dy = gr.grad(out);
        if (gr.requires_grad(w)) gr.grad(w).noalias() += col.transpose() * dy;
        if (!need_x) return;
        Mat<S> dcol(dy.rows(), gr.value(w).rows());
        dcol.noalias() = dy * gr.value(w).transpose();
        auto& dx = gr.grad(x);
        for (int s = 0; s < segs.count(); ++s) {
          const int len = segs.lengths[s];
          for (int t = 0; t < out_segs.lengths[s]; ++t) {
            for (int j = 0; j < kernel; ++j) {
              const int src = stride * t - pad + j * dilation;
              if (src < 0 || src >= len) continue;
              dx.row(in_off[s] + src) += dcol.row(out_off[s] + t).segment(static_cast<Eigen::Index>(j) * cin, cin);
            }
          }
        }
      });
}

/// Batch normalization over all rows. In training mode the batch statistics
/// are used and the running buffers are updated in place.
template <typename S>
Var BatchNorm(Graph<S>& g, Var x, Var gamma, Var beta, Parameter<S>& running_mean,
              Parameter<S>& running_var, bool training, double momentum = 0.1, double eps = 1e-5) {
  const auto& X = g.value(x);
  const auto n = X.rows();
  const auto c = X.cols();
  RowVec<S> mean(c), inv_std(c);
  if (training) {
    ACCENTFUSE_REQUIRE(n > 0, ContractError, "BatchNorm: empty batch");
    mean = X.colwise().mean();
    RowVec<S> var = (X.rowwise() - mean).array().square().colwise().sum().matrix() / S(n);
    inv_std = (var.array() + S(eps)).rsqrt().matrix();
    const S unbiased = n > 1 ? S(n) / S(n - 1) : S(1);
    running_mean.value.row(0) = S(1 - momentum) * running_mean.value.row(0) + S(momentum) * mean;
    running_var.value.row(0) = S(1 - momentum) * running_var.value.row(0) + S(momentum) * unbiased * var;
  } else {
    mean = running_mean.value.row(0);
    inv_std = (running_var.value.row(0).array() + S(eps)).rsqrt().matrix();
  }
  Mat<S> xhat = (X.rowwise() - mean).array().rowwise() * inv_std.array();
  Mat<S> y = (xhat.array().rowwise() * g.value(gamma).row(0).array()).rowwise() + g.value(beta).row(0).array();
  return g.Push(std::move(y), g.requires_grad({x, gamma, beta}),
                [x, gamma, beta, training, inv_std, xhat = std::move(xhat),
                 out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const auto& dy = gr.grad(out);
                  if (gr.requires_grad(gamma)) gr.grad(gamma) += dy.cwiseProduct(xhat).colwise().sum();
                  if (gr.requires_grad(beta)) gr.grad(beta) += dy.colwise().sum();
                  if (!gr.requires_grad(x)) return;
                  Mat<S> dxhat = dy.array().rowwise() * gr.value(gamma).row(0).array();
                  if (!training) {
                    gr.grad(x).array() += dxhat.array().rowwise() * inv_std.array();
                    return;
                  }
                  const S n = S(dy.rows());
                  RowVec<S> sum_d = dxhat.colwise().sum();
                  RowVec<S> sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
                  Mat<S> dx = (n * dxhat.array()).rowwise() - sum_d.array();
                  dx.array() -= xhat.array().rowwise() * sum_dx.array();
                  dx.array().rowwise() *= (inv_std.array() / n);
                  gr.grad(x) += dx;
                });
}

/// Per-row layer normalization.
template <typename S>
Var LayerNorm(Graph<S>& g, Var x, Var gamma, Var beta, double eps = 1e-5) {
  const auto& X = g.value(x);
  const auto c = X.cols();
  Eigen::Matrix<S, Eigen::Dynamic, 1> mean = X.rowwise().mean();
  Mat<S> centered = X.colwise() - mean;
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std =
      ((centered.array().square().rowwise().sum() / S(c)) + S(eps)).rsqrt().matrix();
  Mat<S> xhat = centered.array().colwise() * inv_std.array();
  Mat<S> y = (xhat.array().rowwise() * g.value(gamma).row(0).array()).rowwise() + g.value(beta).row(0).array();
  return g.Push(std::move(y), g.requires_grad({x, gamma, beta}),
                [x, gamma, beta, inv_std, xhat = std::move(xhat), out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const auto& dy = gr.grad(out);
                  if (gr.requires_grad(gamma)) gr.grad(gamma) += dy.cwiseProduct(xhat).colwise().sum();
                  if (gr.requires_grad(beta)) gr.grad(beta) += dy.colwise().sum();
                  if (!gr.requires_grad(x)) return;
                  const S c = S(dy.cols());
                  Mat<S> dxhat = dy.array().rowwise() * gr.value(gamma).row(0).array();
                  Eigen::Matrix<S, Eigen::Dynamic, 1> sum_d = dxhat.rowwise().sum();
                  Eigen::Matrix<S, Eigen::Dynamic, 1> sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
                  Mat<S> dx = (c * dxhat.array()).colwise() - sum_d.array();
                  dx.array() -= xhat.array().colwise() * sum_dx.array();
                  dx.array().colwise() *= (inv_std.array() / c);
                  gr.grad(x) += dx;
                });
}

/// Mean and standard deviation of every segment: B x 2C, [mean | std],
/// std = sqrt(population variance + eps).
template <typename S>
Var SegmentStatPool(Graph<S>& g, Var x, const Segments& segs, double eps = 1e-5) {
  const auto& X = g.value(x);
  const auto c = X.cols();
  const auto off = segs.offsets();
  Mat<S> y(segs.count(), 2 * c);
  for (int s = 0; s < segs.count(); ++s) {
    ACCENTFUSE_REQUIRE(segs.lengths[s] >= 1, ContractError, "statistic pooling over zero frames");
    auto block = X.middleRows(off[s], segs.lengths[s]);
    RowVec<S> mean = block.colwise().mean();
    RowVec<S> var = (block.rowwise() - mean).array().square().colwise().mean().matrix();
    y.row(s).head(c) = mean;
    y.row(s).tail(c) = (var.array() + S(eps)).sqrt().matrix();
  }
  return g.Push(y, g.requires_grad(x), [x, segs, off, c, y, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
    const auto& dy = gr.grad(out);
    const auto& X = gr.value(x);
    auto& dx = gr.grad(x);
    for (int s = 0; s < segs.count(); ++s) {
      const S len = S(segs.lengths[s]);
      RowVec<S> mean = y.row(s).head(c);
      RowVec<S> coef = dy.row(s).tail(c).array() / (y.row(s).tail(c).array() * len);
      RowVec<S> dmean = dy.row(s).head(c) / len;
      for (int t = 0; t < segs.lengths[s]; ++t) {
        const int r = off[s] + t;
        dx.row(r).array() += dmean.array() + coef.array() * (X.row(r) - mean).array();
      }
    }
  });
}

/// Per-segment time max plus time mean: B x C.
template <typename S>
Var SegmentMaxPlusMean(Graph<S>& g, Var x, const Segments& segs) {
  const auto& X = g.value(x);
  const auto c = X.cols();
  const auto off = segs.offsets();
  Mat<S> y(segs.count(), c);
  std::vector<int> argmax(static_cast<size_t>(segs.count()) * c);
  for (int s = 0; s < segs.count(); ++s) {
    ACCENTFUSE_REQUIRE(segs.lengths[s] >= 1, ContractError, "pooling over zero frames");
    auto block = X.middleRows(off[s], segs.lengths[s]);
    for (Eigen::Index ch = 0; ch < c; ++ch) {
      int best = 0;
      for (int t = 1; t < segs.lengths[s]; ++t)
        if (block(t, ch) > block(best, ch)) best = t;
      argmax[static_cast<size_t>(s) * c + ch] = best;
      y(s, ch) = block(best, ch) + block.col(ch).mean();
    }
  }
  return g.Push(std::move(y), g.requires_grad(x),
                [x, segs, off, c, argmax = std::move(argmax), out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const auto& dy = gr.grad(out);
                  auto& dx = gr.grad(x);
                  for (int s = 0; s < segs.count(); ++s) {
                    const S len = S(segs.lengths[s]);
                    dx.middleRows(off[s], segs.lengths[s]).rowwise() += dy.row(s) / len;
                    for (Eigen::Index ch = 0; ch < c; ++ch)
                      dx(off[s] + argmax[static_cast<size_t>(s) * c + ch], ch) += dy(s, ch);
                  }
                });
}

/// Multiplies every frame of segment b by row b of `scale` (B x C).
template <typename S>
Var SegmentScaleChannels(Graph<S>& g, Var x, Var scale, const Segments& segs) {
  const auto& X = g.value(x);
  const auto& SC = g.value(scale);
  ACCENTFUSE_REQUIRE(SC.rows() == segs.count() && SC.cols() == X.cols(), ContractError,
                     "SegmentScaleChannels: shape mismatch");
  const auto off = segs.offsets();
  Mat<S> y(X.rows(), X.cols());
  for (int s = 0; s < segs.count(); ++s)
    y.middleRows(off[s], segs.lengths[s]) = X.middleRows(off[s], segs.lengths[s]).array().rowwise() * SC.row(s).array();
  return g.Push(std::move(y), g.requires_grad({x, scale}),
                [x, scale, segs, off, out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const auto& dy = gr.grad(out);
                  for (int s = 0; s < segs.count(); ++s) {
                    auto dys = dy.middleRows(off[s], segs.lengths[s]);
                    if (gr.requires_grad(x))
                      gr.grad(x).middleRows(off[s], segs.lengths[s]).array() +=
                          dys.array().rowwise() * gr.value(scale).row(s).array();
                    if (gr.requires_grad(scale))
                      gr.grad(scale).row(s) += dys.cwiseProduct(gr.value(x).middleRows(off[s], segs.lengths[s])).colwise().sum();
                  }
                });
}

/// Receives the softmax weights of every (segment, head) pair, row-normalized,
/// when attached to an attention op.
template <typename S>
struct AttentionCapture {
  std::vector<Mat<S>> weights;  // index: segment * heads + head
};

/// Scaled dot-product attention for every segment and head. q, k, v are the
/// already-projected N x d matrices; heads split the columns. `key_valid`
/// (optional, size N) excludes keys from every softmax.
template <typename S>
Var MultiHeadAttentionCore(Graph<S>& g, Var q, Var k, Var v, const Segments& segs, int heads,
                           const std::vector<std::uint8_t>* key_valid = nullptr,
                           AttentionCapture<S>* capture = nullptr) {
  const auto& Q = g.value(q);
  const auto& K = g.value(k);
  const auto& V = g.value(v);
  const int d = static_cast<int>(Q.cols());
  ACCENTFUSE_REQUIRE(heads >= 1 && d % heads == 0, ConfigError, "attention dim must be divisible by heads");
  ACCENTFUSE_REQUIRE(Q.rows() == segs.total(), ContractError, "attention: rows != segment total");
  const int dk = d / heads;
  const S scale = S(1) / std::sqrt(S(dk));
  const auto off = segs.offsets();
  Mat<S> y = Mat<S>::Zero(Q.rows(), d);
  std::vector<Mat<S>> probs(static_cast<size_t>(segs.count()) * heads);
  for (int s = 0; s < segs.count(); ++s) {
    const int len = segs.lengths[s];
    bool any = false;
    for (int t = 0; t < len; ++t) any = any || key_valid == nullptr || (*key_valid)[off[s] + t];
    ACCENTFUSE_REQUIRE(any, ContractError, "attention: every position is masked");
    for (int h = 0; h < heads; ++h) {
      auto qh = Q.block(off[s], h * dk, len, dk);
      auto kh = K.block(off[s], h * dk, len, dk);
      auto vh = V.block(off[s], h * dk, len, dk);
      Mat<S> sc(len, len);
      sc.noalias() = qh * kh.transpose();
      sc *= scale;
      for (int i = 0; i < len; ++i) {
        S mx = -std::numeric_limits<S>::infinity();
        for (int j = 0; j < len; ++j) {
          if (key_valid != nullptr && !(*key_valid)[off[s] + j]) {
            sc(i, j) = -std::numeric_limits<S>::infinity();
            continue;
          }
          mx = std::max(mx, sc(i, j));
        }
        S total = 0;
        for (int j = 0; j < len; ++j) {
          const S e = std::isinf(sc(i, j)) ? S(0) : std::exp(sc(i, j) - mx);
          sc(i, j) = e;
          total += e;
        }
        sc.row(i) /= total;
      }
      y.block(off[s], h * dk, len, dk).noalias() = sc * vh;
      if (capture != nullptr) capture->weights.push_back(sc);
      probs[static_cast<size_t>(s) * heads + h] = std::move(sc);
    }
  }
  return g.Push(std::move(y), g.requires_grad({q, k, v}),
                [q, k, v, segs, off, heads, dk, scale, probs = std::move(probs),
                 out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const auto& dy = gr.grad(out);
                  const bool gq = gr.requires_grad(q), gk = gr.requires_grad(k), gv = gr.requires_grad(v);
                  for (int s = 0; s < segs.count(); ++s) {
                    const int len = segs.lengths[s];
                    for (int h = 0; h < heads; ++h) {
                      const auto& P = probs[static_cast<size_t>(s) * heads + h];
                      auto dyh = dy.block(off[s], h * dk, len, dk);
                      auto qh = gr.value(q).block(off[s], h * dk, len, dk);
                      auto kh = gr.value(k).block(off[s], h * dk, len, dk);
                      auto vh = gr.value(v).block(off[s], h * dk, len, dk);
                      if (gv) gr.grad(v).block(off[s], h * dk, len, dk).noalias() += P.transpose() * dyh;
                      if (!gq && !gk) continue;
                      Mat<S> dp(len, len);
                      dp.noalias() = dyh * vh.transpose();
                      Eigen::Matrix<S, Eigen::Dynamic, 1> rs = dp.cwiseProduct(P).rowwise().sum();
                      Mat<S> ds = P.array() * (dp.array().colwise() - rs.array());
                      ds *= scale;
                      if (gq) gr.grad(q).block(off[s], h * dk, len, dk).noalias() += ds * kh;
                      if (gk) gr.grad(k).block(off[s], h * dk, len, dk).noalias() += ds.transpose() * qh;
                    }
                  }
                });
}

/// Selects whole segments (rows of their frames) into a new packed matrix.
template <typename S>
Var SelectRows(Graph<S>& g, Var x, std::vector<int> rows) {
  const auto& X = g.value(x);
  Mat<S> y(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (size_t i = 0; i < rows.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return g.Push(std::move(y), g.requires_grad(x),
                [x, rows = std::move(rows), out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const auto& dy = gr.grad(out);
                  auto& dx = gr.grad(x);
                  for (size_t i = 0; i < rows.size(); ++i) dx.row(rows[i]) += dy.row(static_cast<Eigen::Index>(i));
                });
}

}  // namespace accentfuse
