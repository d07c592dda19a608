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

#pragma once

#include <limits>
#include <vector>

#include "accentfuse/autograd.hpp"

namespace accentfuse {

namespace detail {

inline double LogSumExp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

template <typename Derived>
MatD LogSoftmaxRows(const Eigen::MatrixBase<Derived>& logits) {
  MatD x = logits.template cast<double>();
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double m = x.row(t).maxCoeff();
    const double lse = m + std::log((x.row(t).array() - m).exp().sum());
    x.row(t).array() -= lse;
  }
  return x;
}

}  // namespace detail

/// Minimum number of frames that can emit `target` under CTC: one per label
/// plus one separating blank between equal neighbours.
inline int CtcMinFrames(const std::vector<int>& target) {
  int repeats = 0;
  for (size_t i = 1; i < target.size(); ++i) repeats += target[i] == target[i - 1];
  return static_cast<int>(target.size()) + repeats;
}

struct CtcResult {
  double loss = 0.0;
  MatD grad;  // d loss / d logits, filled when requested
};

/// Negative log-likelihood of `target` given per-frame logits (T x K, blank at
/// index 0), via the log-space forward-backward recursions.
template <typename Derived>
CtcResult CtcForwardBackward(const Eigen::MatrixBase<Derived>& logits, const std::vector<int>& target,
                             bool want_grad) {
  const int T = static_cast<int>(logits.rows());
  const int K = static_cast<int>(logits.cols());
  const int L = static_cast<int>(target.size());
  ACCENTFUSE_REQUIRE(T >= 1, ContractError, "ctc: no frames");
  for (int lab : target)
    ACCENTFUSE_REQUIRE(lab > kBlank && lab < K, ContractError, "ctc: target label out of range");
  if (CtcMinFrames(target) > T)
    throw InfeasibleAlignmentError("ctc: " + std::to_string(T) + " frames cannot emit a target needing " +
                                   std::to_string(CtcMinFrames(target)));

  const MatD lp = detail::LogSoftmaxRows(logits);
  const int S = 2 * L + 1;
  auto label = [&](int s) { return (s % 2 == 0) ? kBlank : target[s / 2]; };
  auto skip_ok = [&](int s) { return s >= 2 && label(s) != kBlank && label(s) != label(s - 2); };
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  MatD alpha = MatD::Constant(T, S, kNegInf);
  alpha(0, 0) = lp(0, kBlank);
  if (S > 1) alpha(0, 1) = lp(0, label(1));
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = detail::LogSumExp(a, alpha(t - 1, s - 1));
      if (skip_ok(s)) a = detail::LogSumExp(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, label(s));
    }
  }
  double log_p = alpha(T - 1, S - 1);
  if (S > 1) log_p = detail::LogSumExp(log_p, alpha(T - 1, S - 2));

  CtcResult res;
  res.loss = -log_p;
  if (!want_grad) return res;

  MatD beta = MatD::Constant(T, S, kNegInf);
  beta(T - 1, S - 1) = lp(T - 1, kBlank);
  if (S > 1) beta(T - 1, S - 2) = lp(T - 1, label(S - 2));
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < S) b = detail::LogSumExp(b, beta(t + 1, s + 1));
      if (s + 2 < S && skip_ok(s + 2)) b = detail::LogSumExp(b, beta(t + 1, s + 2));
      beta(t, s) = b == kNegInf ? kNegInf : b + lp(t, label(s));
    }
  }

  res.grad = lp.array().exp().matrix();
  for (int t = 0; t < T; ++t) {
    std::vector<double> occ(K, kNegInf);
    for (int s = 0; s < S; ++s) {
      const double v = alpha(t, s) + beta(t, s);
      if (v == kNegInf) continue;
      occ[label(s)] = detail::LogSumExp(occ[label(s)], v - lp(t, label(s)));
    }
    for (int k = 0; k < K; ++k)
      if (occ[k] != kNegInf) res.grad(t, k) -= std::exp(occ[k] - log_p);
  }
  return res;
}

/// CTC loss of a single utterance.
template <typename S>
double CtcLoss(const Mat<S>& logits, const std::vector<int>& target, int valid_length) {
  ACCENTFUSE_REQUIRE(valid_length >= 1 && valid_length <= logits.rows(), ContractError,
                     "ctc: valid_length out of range");
  return CtcForwardBackward(logits.topRows(valid_length), target, false).loss;
}

/// Cross-entropy of one logit vector against `label`.
template <typename S>
double CrossEntropy(const RowVec<S>& logits, int label) {
  ACCENTFUSE_REQUIRE(label >= 0 && label < logits.size(), ContractError,
                     "cross-entropy: label " + std::to_string(label) + " out of range");
  const MatD lp = detail::LogSoftmaxRows(logits);
  return -lp(0, label);
}

/// Mean cross-entropy over the rows of `logits` (B x K).
template <typename S>
Var CrossEntropyLoss(Graph<S>& g, Var logits, std::vector<int> labels) {
  const auto& Z = g.value(logits);
  ACCENTFUSE_REQUIRE(Z.rows() == static_cast<Eigen::Index>(labels.size()), ContractError,
                     "cross-entropy: batch size mismatch");
  const MatD lp = detail::LogSoftmaxRows(Z);
  double total = 0;
  for (size_t b = 0; b < labels.size(); ++b) {
    ACCENTFUSE_REQUIRE(labels[b] >= 0 && labels[b] < Z.cols(), ContractError,
                       "cross-entropy: label out of range");
    total -= lp(static_cast<Eigen::Index>(b), labels[b]);
  }
  const double n = static_cast<double>(labels.size());
  Mat<S> y(1, 1);
  y(0, 0) = S(total / n);
  return g.Push(std::move(y), g.requires_grad(logits),
                [logits, lp, n, labels = std::move(labels), out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
                  const S up = gr.grad(out)(0, 0);
                  MatD d = lp.array().exp().matrix();
                  for (size_t b = 0; b < labels.size(); ++b) d(static_cast<Eigen::Index>(b), labels[b]) -= 1.0;
                  gr.grad(logits) += (d * (double(up) / n)).template cast<S>();
                });
}

/// Batch CTC loss over packed logits. Each utterance's loss is optionally
/// divided by its target length, then the mean over the included utterances
/// is taken. `include` (one flag per segment) drops utterances from the term.
template <typename S>
Var CtcBatchLoss(Graph<S>& g, Var logits, const Segments& segs, const std::vector<std::vector<int>>& targets,
                 bool normalize_by_target_length, const std::vector<std::uint8_t>* include = nullptr) {
  const auto& Z = g.value(logits);
  ACCENTFUSE_REQUIRE(static_cast<int>(targets.size()) == segs.count(), ContractError,
                     "ctc: one target per segment required");
  ACCENTFUSE_REQUIRE(include == nullptr || static_cast<int>(include->size()) == segs.count(), ContractError,
                     "ctc: one include flag per segment required");
  const auto off = segs.offsets();
  const bool rg = g.requires_grad(logits);
  MatD grad = rg ? MatD::Zero(Z.rows(), Z.cols()) : MatD();
  double total = 0;
  double n = 0;
  for (int s = 0; s < segs.count(); ++s) n += include == nullptr || (*include)[s];
  n = std::max(n, 1.0);
  for (int s = 0; s < segs.count(); ++s) {
    if (include != nullptr && !(*include)[s]) continue;
    auto r = CtcForwardBackward(Z.middleRows(off[s], segs.lengths[s]), targets[s], rg);
    const double w = normalize_by_target_length ? 1.0 / std::max<size_t>(1, targets[s].size()) : 1.0;
    total += w * r.loss;
    if (rg) grad.middleRows(off[s], segs.lengths[s]) = r.grad * (w / n);
  }
  Mat<S> y(1, 1);
  y(0, 0) = S(total / n);
  return g.Push(std::move(y), rg, [logits, grad = std::move(grad), out = Var{static_cast<int>(g.size())}](Graph<S>& gr) {
    gr.grad(logits) += (grad * double(gr.grad(out)(0, 0))).template cast<S>();
  });
}

}  // namespace accentfuse
