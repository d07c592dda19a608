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

// Self-attention aggregation: Conv1x1 (d_emb -> d_attn), optional sinusoidal
// positions, n_layers pre-norm Transformer encoder layers, statistic pooling,
// a linear reduction 2 d_attn -> d_attn (A_c) and the accent classifier.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "accentfuse/acoustic.hpp"
#include "accentfuse/layers.hpp"

namespace accentfuse {

struct AggregationConfig {
  int d_in = 256;  // width of the merged embedding (d_emb)
  int d_attn = 256;
  int d_ff = 1024;
  int heads = 4;
  int n_layers = 3;
  int d_accent = 8;
  double dropout = 0.1;
  bool positional_encoding = true;

  void Validate() const {
    ACCENTFUSE_REQUIRE(d_in > 0 && d_attn > 0 && d_ff > 0 && heads > 0 && n_layers >= 0 && d_accent > 0,
                       ConfigError, "aggregation dimensions must be positive");
    ACCENTFUSE_REQUIRE(d_attn % heads == 0, ConfigError,
                       "d_attn " + std::to_string(d_attn) + " not divisible by " + std::to_string(heads) + " heads");
    ACCENTFUSE_REQUIRE(dropout >= 0 && dropout < 1, ConfigError, "dropout must be in [0,1)");
  }
  bool operator==(const AggregationConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const AggregationConfig& c) {
  j = nlohmann::json{{"d_in", c.d_in},         {"d_attn", c.d_attn},   {"d_ff", c.d_ff},
                     {"heads", c.heads},       {"n_layers", c.n_layers}, {"d_accent", c.d_accent},
                     {"dropout", c.dropout},   {"positional_encoding", c.positional_encoding}};
}
inline void from_json(const nlohmann::json& j, AggregationConfig& c) {
  static const std::vector<std::string> known = {"d_in",     "d_attn",  "d_ff",    "heads",
                                                 "n_layers", "d_accent", "dropout", "positional_encoding"};
  for (const auto& [key, _] : j.items())
    ACCENTFUSE_REQUIRE(std::count(known.begin(), known.end(), key), ConfigError, "unknown aggregation key: " + key);
  AggregationConfig d;
  c.d_in = j.value("d_in", d.d_in);
  c.d_attn = j.value("d_attn", d.d_attn);
  c.d_ff = j.value("d_ff", d.d_ff);
  c.heads = j.value("heads", d.heads);
  c.n_layers = j.value("n_layers", d.n_layers);
  c.d_accent = j.value("d_accent", d.d_accent);
  c.dropout = j.value("dropout", d.dropout);
  c.positional_encoding = j.value("positional_encoding", d.positional_encoding);
}

/// Sinusoidal position table for each segment, positions restarting at 0.
template <typename S>
Mat<S> SinusoidalPositions(const Segments& segs, int dim) {
  Mat<S> pe(segs.total(), dim);
  int row = 0;
  for (int len : segs.lengths)
    for (int pos = 0; pos < len; ++pos, ++row)
      for (int i = 0; i < dim; ++i) {
        const double angle = pos / std::pow(10000.0, static_cast<double>(2 * (i / 2)) / dim);
        pe(row, i) = S(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
      }
  return pe;
}

/// Multi-head self-attention (Q = K = V = x) with parameters `name/{q,k,v,o}`.
template <typename S>
Var SelfAttention(Graph<S>& g, ParameterStore<S>& store, const std::string& name, Var x, const Segments& segs,
                  int heads, const std::vector<std::uint8_t>* key_valid = nullptr,
                  AttentionCapture<S>* capture = nullptr) {
  Var q = ApplyLinear(g, store, name + "/q", x);
  Var k = ApplyLinear(g, store, name + "/k", x);
  Var v = ApplyLinear(g, store, name + "/v", x);
  Var ctx = MultiHeadAttentionCore(g, q, k, v, segs, heads, key_valid, capture);
  return ApplyLinear(g, store, name + "/o", ctx);
}

template <typename S>
void AddSelfAttention(ParameterStore<S>& store, const std::string& name, int d, Rng& rng) {
  for (const char* p : {"/q", "/k", "/v", "/o"}) AddLinear(store, name + p, d, d, true, rng);
}

/// Single-sequence MHA: rows at or beyond `valid_length` are masked as keys.
template <typename S>
Mat<S> MultiHeadSelfAttention(ParameterStore<S>& store, const std::string& name, const Mat<S>& x, int heads,
                              int valid_length, AttentionCapture<S>* capture = nullptr) {
  ACCENTFUSE_REQUIRE(x.rows() >= 1, ContractError, "attention over an empty sequence");
  std::vector<std::uint8_t> valid(static_cast<size_t>(x.rows()));
  for (Eigen::Index t = 0; t < x.rows(); ++t) valid[t] = t < valid_length;
  Graph<S> g;
  Var in = g.Constant(x);
  return g.value(SelfAttention(g, store, name, in, Segments({static_cast<int>(x.rows())}), heads, &valid, capture));
}

/// [mean | std] over the first `valid_length` rows, std = sqrt(var + 1e-5).
template <typename S>
RowVec<S> StatisticPool(const Mat<S>& x, int valid_length) {
  ACCENTFUSE_REQUIRE(valid_length >= 1 && valid_length <= x.rows(), ContractError,
                     "statistic pooling needs 1 <= valid_length <= T");
  Graph<S> g;
  Var in = g.Constant(x.topRows(valid_length));
  return g.value(SegmentStatPool(g, in, Segments({valid_length}))).row(0);
}

struct AggregationForward {
  Var logits;  // B x d_accent
  Var pooled;  // A_c: B x d_attn
};

struct AccentPrediction {
  RowVec<float> logits;
  RowVec<float> pooled;
  int predicted = 0;
};

template <typename S>
class AggregationModel {
 public:
  AggregationModel(AggregationConfig cfg, std::string prefix) : cfg_(cfg), prefix_(std::move(prefix)) {
    cfg_.Validate();
  }
  const AggregationConfig& config() const { return cfg_; }

  void Init(ParameterStore<S>& store, Rng& rng) const {
    AddLinear(store, P("in_proj"), cfg_.d_in, cfg_.d_attn, true, rng);
    for (int l = 0; l < cfg_.n_layers; ++l) {
      AddLayerNorm(store, Layer(l) + "/ln1", cfg_.d_attn);
      AddSelfAttention(store, Layer(l) + "/mha", cfg_.d_attn, rng);
      AddLayerNorm(store, Layer(l) + "/ln2", cfg_.d_attn);
      AddLinear(store, Layer(l) + "/ff1", cfg_.d_attn, cfg_.d_ff, true, rng);
      AddLinear(store, Layer(l) + "/ff2", cfg_.d_ff, cfg_.d_attn, true, rng);
    }
    AddLayerNorm(store, P("final_ln"), cfg_.d_attn);
    AddLinear(store, P("pool_proj"), 2 * cfg_.d_attn, cfg_.d_attn, true, rng);
    AddLinear(store, P("classifier"), cfg_.d_attn, cfg_.d_accent, true, rng);
  }

  /// Everything up to and including A_c.
  Var Embed(Graph<S>& g, ParameterStore<S>& store, Var x, const Segments& segs, const RunContext& ctx,
            AttentionCapture<S>* capture = nullptr) const {
    ACCENTFUSE_REQUIRE(g.value(x).cols() == cfg_.d_in, ContractError, "aggregation input width mismatch");
    Var h = ApplyLinear(g, store, P("in_proj"), x);
    if (cfg_.positional_encoding) h = Add(g, h, g.Constant(SinusoidalPositions<S>(segs, cfg_.d_attn)));
    for (int l = 0; l < cfg_.n_layers; ++l) {
      Var a = ApplyLayerNorm(g, store, Layer(l) + "/ln1", h);
      a = SelfAttention(g, store, Layer(l) + "/mha", a, segs, cfg_.heads, nullptr, capture);
      h = Add(g, h, Dropout(g, a, cfg_.dropout, ctx));
      Var f = ApplyLayerNorm(g, store, Layer(l) + "/ln2", h);
      f = Dropout(g, Relu(g, ApplyLinear(g, store, Layer(l) + "/ff1", f)), cfg_.dropout, ctx);
      f = ApplyLinear(g, store, Layer(l) + "/ff2", f);
      h = Add(g, h, Dropout(g, f, cfg_.dropout, ctx));
    }
    h = ApplyLayerNorm(g, store, P("final_ln"), h);
    Var pooled = SegmentStatPool(g, h, segs);
    return ApplyLinear(g, store, P("pool_proj"), pooled);
  }

  AggregationForward Forward(Graph<S>& g, ParameterStore<S>& store, Var x, const Segments& segs,
                             const RunContext& ctx, AttentionCapture<S>* capture = nullptr) const {
    Var pooled = Embed(g, store, x, segs, ctx, capture);
    return {ApplyLinear(g, store, P("classifier"), pooled), pooled};
  }

  /// Single-sequence inference over the first `valid_length` rows.
  AccentPrediction Predict(ParameterStore<S>& store, const Mat<S>& a_m, int valid_length) const {
    ACCENTFUSE_REQUIRE(valid_length >= 1 && valid_length <= a_m.rows(), ContractError,
                       "aggregate needs 1 <= valid_length <= T");
    ACCENTFUSE_REQUIRE(a_m.allFinite(), NumericError, "aggregate input not finite");
    Graph<S> g;
    RunContext ctx;
    auto fw = Forward(g, store, g.Constant(a_m.topRows(valid_length)), Segments({valid_length}), ctx);
    AccentPrediction out;
    out.logits = g.value(fw.logits).row(0).template cast<float>();
    out.pooled = g.value(fw.pooled).row(0).template cast<float>();
    out.predicted = ArgMax(out.logits);
    return out;
  }

 private:
  std::string P(const std::string& s) const { return prefix_ + s; }
  std::string Layer(int l) const { return P("layer" + std::to_string(l)); }

  AggregationConfig cfg_;
  std::string prefix_;
};

}  // namespace accentfuse
