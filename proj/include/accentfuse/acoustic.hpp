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

// Jasper-style convolutional acoustic model.
//
//   prologue: Conv1D(stride 2) -> BN -> ReLU -> dropout      (T_in -> ceil(T_in/2))
//   block b:  R sub-blocks of Conv1D -> BN -> ReLU -> dropout; the last
//             sub-block adds the block input (1x1 conv + BN when the width
//             changes) before its ReLU
//   epilogue: Conv1D(k=1) -> BN -> ReLU                       (embedding, d_emb)
//   head:     Linear d_emb -> n_labels                        (CTC logits)

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "accentfuse/features.hpp"
#include "accentfuse/layers.hpp"
#include "accentfuse/phonemes.hpp"

namespace accentfuse {

struct AcousticConfig {
  int input_dim = kFbankDim;
  int prologue_channels = 256;
  int prologue_kernel = 11;
  int n_blocks = 2;
  int subblocks_per_block = 2;
  std::vector<int> block_channels{256, 256};
  std::vector<int> block_kernels{11, 13};
  int d_emb = 256;
  int n_labels = kPhonemeClasses;
  double dropout = 0.2;
  int downsample_factor = 2;

  /// 5 blocks x 3 sub-blocks, d_emb = 1024.
  static AcousticConfig FullScale() {
    AcousticConfig c;
    c.n_blocks = 5;
    c.subblocks_per_block = 3;
    c.block_channels = {256, 384, 512, 640, 768};
    c.block_kernels = {11, 13, 17, 21, 25};
    c.d_emb = 1024;
    return c;
  }
  static AcousticConfig Desk() { return AcousticConfig{}; }

  void Validate() const {
    ACCENTFUSE_REQUIRE(downsample_factor == 2, ConfigError, "acoustic model downsamples time by exactly 2");
    ACCENTFUSE_REQUIRE(d_emb > 0 && input_dim > 0 && prologue_channels > 0 && n_labels >= 2, ConfigError,
                       "acoustic dimensions must be positive");
    ACCENTFUSE_REQUIRE(n_blocks >= 0 && subblocks_per_block >= 1, ConfigError, "bad block structure");
    ACCENTFUSE_REQUIRE(static_cast<int>(block_channels.size()) == n_blocks &&
                           static_cast<int>(block_kernels.size()) == n_blocks,
                       ConfigError, "block_channels/block_kernels need one entry per block");
    for (int k : block_kernels) ACCENTFUSE_REQUIRE(k >= 1 && k % 2 == 1, ConfigError, "kernels must be odd");
    ACCENTFUSE_REQUIRE(prologue_kernel >= 1 && prologue_kernel % 2 == 1, ConfigError, "kernels must be odd");
    ACCENTFUSE_REQUIRE(dropout >= 0 && dropout < 1, ConfigError, "dropout must be in [0,1)");
  }

  bool operator==(const AcousticConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const AcousticConfig& c) {
  j = nlohmann::json{{"input_dim", c.input_dim},
                     {"prologue_channels", c.prologue_channels},
                     {"prologue_kernel", c.prologue_kernel},
                     {"n_blocks", c.n_blocks},
                     {"subblocks_per_block", c.subblocks_per_block},
                     {"block_channels", c.block_channels},
                     {"block_kernels", c.block_kernels},
                     {"d_emb", c.d_emb},
                     {"n_labels", c.n_labels},
                     {"dropout", c.dropout},
                     {"downsample_factor", c.downsample_factor}};
}

inline void from_json(const nlohmann::json& j, AcousticConfig& c) {
  AcousticConfig d;
  for (const auto& [key, _] : j.items()) {
    static const std::vector<std::string> known = {"input_dim",      "prologue_channels", "prologue_kernel",
                                                   "n_blocks",       "subblocks_per_block", "block_channels",
                                                   "block_kernels",  "d_emb",             "n_labels",
                                                   "dropout",        "downsample_factor"};
    ACCENTFUSE_REQUIRE(std::count(known.begin(), known.end(), key), ConfigError, "unknown acoustic key: " + key);
  }
  c.input_dim = j.value("input_dim", d.input_dim);
  c.prologue_channels = j.value("prologue_channels", d.prologue_channels);
  c.prologue_kernel = j.value("prologue_kernel", d.prologue_kernel);
  c.n_blocks = j.value("n_blocks", d.n_blocks);
  c.subblocks_per_block = j.value("subblocks_per_block", d.subblocks_per_block);
  c.block_channels = j.value("block_channels", d.block_channels);
  c.block_kernels = j.value("block_kernels", d.block_kernels);
  c.d_emb = j.value("d_emb", d.d_emb);
  c.n_labels = j.value("n_labels", d.n_labels);
  c.dropout = j.value("dropout", d.dropout);
  c.downsample_factor = j.value("downsample_factor", d.downsample_factor);
}

struct AcousticForward {
  Var embedding;  // A_asr (or A_asr^R): T x d_emb
  Var logits;     // T x n_labels
  Segments segs;  // downsampled lengths
};

/// Frame-level result for a single utterance.
struct AcousticOutput {
  MatF embedding;
  MatF phoneme_logits;
  int valid_length = 0;
};

template <typename S>
class AcousticModel {
 public:
  AcousticModel(AcousticConfig cfg, std::string prefix) : cfg_(std::move(cfg)), prefix_(std::move(prefix)) {
    cfg_.Validate();
  }

  const AcousticConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }

  void Init(ParameterStore<S>& store, Rng& rng) const {
    AddConv(store, P("prologue/conv"), cfg_.prologue_kernel, cfg_.input_dim, cfg_.prologue_channels, rng);
    AddBatchNorm(store, P("prologue/bn"), cfg_.prologue_channels);
    int width = cfg_.prologue_channels;
    for (int b = 0; b < cfg_.n_blocks; ++b) {
      const int out = cfg_.block_channels[b];
      if (out != width) {
        AddConv(store, Block(b) + "/residual/conv", 1, width, out, rng);
        AddBatchNorm(store, Block(b) + "/residual/bn", out);
      }
      for (int r = 0; r < cfg_.subblocks_per_block; ++r) {
        AddConv(store, Sub(b, r) + "/conv", cfg_.block_kernels[b], r == 0 ? width : out, out, rng);
        AddBatchNorm(store, Sub(b, r) + "/bn", out);
      }
      width = out;
    }
    AddConv(store, P("epilogue/conv"), 1, width, cfg_.d_emb, rng);
    AddBatchNorm(store, P("epilogue/bn"), cfg_.d_emb);
    AddLinear(store, P("head"), cfg_.d_emb, cfg_.n_labels, true, rng);
  }

  /// Packed-batch forward pass. `ctx.training` selects batch statistics and
  /// dropout; a frozen model is always run with a non-training context.
  AcousticForward Forward(Graph<S>& g, ParameterStore<S>& store, Var x, const Segments& segs,
                          const RunContext& ctx) const {
    ACCENTFUSE_REQUIRE(g.value(x).cols() == cfg_.input_dim, ContractError, "acoustic input width mismatch");
    for (int l : segs.lengths) ACCENTFUSE_REQUIRE(l >= 1, ContractError, "acoustic model: empty input sequence");
    int layer = 0;
    auto check = [&](Var v) { CheckFinite(g, v, std::to_string(layer++)); };

    Segments cur = ConvOutputSegments(segs, cfg_.downsample_factor);
    Var h = Conv1d(g, x, segs, g.Param(store.Get(P("prologue/conv/w"))), cfg_.prologue_kernel, cfg_.downsample_factor);
    h = ApplyBatchNorm(g, store, P("prologue/bn"), h, ctx.training);
    h = Dropout(g, Relu(g, h), cfg_.dropout, ctx);
    check(h);
    for (int b = 0; b < cfg_.n_blocks; ++b) {
      Var residual = h;
      if (store.Has(Block(b) + "/residual/conv/w")) {
        residual = Conv1d(g, h, cur, g.Param(store.Get(Block(b) + "/residual/conv/w")), 1);
        residual = ApplyBatchNorm(g, store, Block(b) + "/residual/bn", residual, ctx.training);
      }
      for (int r = 0; r < cfg_.subblocks_per_block; ++r) {
        h = Conv1d(g, h, cur, g.Param(store.Get(Sub(b, r) + "/conv/w")), cfg_.block_kernels[b]);
        h = ApplyBatchNorm(g, store, Sub(b, r) + "/bn", h, ctx.training);
        if (r + 1 == cfg_.subblocks_per_block) h = Add(g, h, residual);
        h = Dropout(g, Relu(g, h), cfg_.dropout, ctx);
        check(h);
      }
    }
    h = Conv1d(g, h, cur, g.Param(store.Get(P("epilogue/conv/w"))), 1);
    h = ApplyBatchNorm(g, store, P("epilogue/bn"), h, ctx.training);
    Var emb = Relu(g, h);
    check(emb);
    Var logits = ApplyLinear(g, store, P("head"), emb);
    check(logits);
    return {emb, logits, cur};
  }

  /// Single-utterance inference. Frames beyond valid_length are ignored and
  /// the output is zero-padded to ceil(T_in / 2) rows.
  AcousticOutput Run(ParameterStore<S>& store, const FeatureSequence& x) const {
    ACCENTFUSE_REQUIRE(x.frames() > 0 && x.valid_length > 0, ContractError, "acoustic model: empty input");
    Graph<S> g;
    Var in = g.Constant(x.values.topRows(x.valid_length).template cast<S>());
    RunContext ctx;
    auto fw = Forward(g, store, in, Segments({x.valid_length}), ctx);
    const int T = ConvOutputLength(x.frames(), cfg_.downsample_factor);
    AcousticOutput out;
    out.valid_length = fw.segs.lengths[0];
    out.embedding = MatF::Zero(T, cfg_.d_emb);
    out.phoneme_logits = MatF::Zero(T, cfg_.n_labels);
    out.embedding.topRows(out.valid_length) = g.value(fw.embedding).template cast<float>();
    out.phoneme_logits.topRows(out.valid_length) = g.value(fw.logits).template cast<float>();
    return out;
  }

 private:
  std::string P(const std::string& s) const { return prefix_ + s; }
  std::string Block(int b) const { return P("block" + std::to_string(b)); }
  std::string Sub(int b, int r) const { return Block(b) + "/sub" + std::to_string(r); }

  AcousticConfig cfg_;
  std::string prefix_;
};

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
int ArgMax(const Eigen::DenseBase<Derived>& row) {
  int best = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i)
    if (row(i) > row(best)) best = static_cast<int>(i);
  return best;
}

/// Per-frame argmax, repeats collapsed, blanks removed.
template <typename Derived>
std::vector<int> GreedyCtcDecode(const Eigen::MatrixBase<Derived>& logits) {
  std::vector<int> out;
  int prev = -1;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const int k = ArgMax(logits.row(t));
    if (k != prev && k != kBlank) out.push_back(k);
    prev = k;
  }
  return out;
}

inline int EditDistance(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Levenshtein distance divided by the reference length.
inline double PhoneErrorRate(const std::vector<int>& ref, const std::vector<int>& hyp) {
  ACCENTFUSE_REQUIRE(!ref.empty(), ContractError, "phone error rate undefined for an empty reference");
  return static_cast<double>(EditDistance(ref, hyp)) / static_cast<double>(ref.size());
}

}  // namespace accentfuse
