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

// Fusion of the trainable and the frozen reference embeddings.
//
// Both streams are first projected by their own linear layer. Then:
//   ADD       merged = P_t + P_r
//   CONCAT    merged = Conv1x1([P_t | P_r])
//   CONCAT_CA C = TimeMax([P_t | P_r]) + TimeMean([P_t | P_r])
//             CA = sigmoid(ReLU(W_e ReLU(W_s C)))        (squeeze by r)
//             merged = Conv1x1(CA * [P_t | P_r])
// The trainable half occupies channels [0, d_emb), the reference half
// [d_emb, 2 d_emb).

#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "accentfuse/layers.hpp"

namespace accentfuse {

enum class FusionMode { kAdd, kConcat, kConcatCa };

inline std::string ToString(FusionMode m) {
  switch (m) {
    case FusionMode::kAdd: return "add";
    case FusionMode::kConcat: return "concat";
    case FusionMode::kConcatCa: return "concat_ca";
  }
  return "?";
}

inline FusionMode ParseFusionMode(const std::string& s) {
  if (s == "add") return FusionMode::kAdd;
  if (s == "concat") return FusionMode::kConcat;
  if (s == "concat_ca") return FusionMode::kConcatCa;
  throw ConfigError("unknown fusion mode: " + s + " (expected add, concat or concat_ca)");
}

struct FusionConfig {
  FusionMode mode = FusionMode::kConcatCa;
  int d_emb = 256;
  int squeeze_ratio = 16;

  void Validate() const {
    ACCENTFUSE_REQUIRE(d_emb > 0, ConfigError, "fusion d_emb must be positive");
    ACCENTFUSE_REQUIRE(squeeze_ratio >= 1, ConfigError, "squeeze ratio must be >= 1");
    ACCENTFUSE_REQUIRE((2 * d_emb) % squeeze_ratio == 0, ConfigError,
                       "squeeze ratio " + std::to_string(squeeze_ratio) + " must divide 2*d_emb = " +
                           std::to_string(2 * d_emb));
  }
  int squeezed() const { return 2 * d_emb / squeeze_ratio; }
  bool operator==(const FusionConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const FusionConfig& c) {
  j = nlohmann::json{{"mode", ToString(c.mode)}, {"d_emb", c.d_emb}, {"squeeze_ratio", c.squeeze_ratio}};
}
inline void from_json(const nlohmann::json& j, FusionConfig& c) {
  for (const auto& [key, _] : j.items())
    ACCENTFUSE_REQUIRE(key == "mode" || key == "d_emb" || key == "squeeze_ratio", ConfigError,
                       "unknown fusion key: " + key);
  c.mode = ParseFusionMode(j.value("mode", std::string("concat_ca")));
  c.d_emb = j.value("d_emb", 256);
  c.squeeze_ratio = j.value("squeeze_ratio", 16);
}

struct FusionForward {
  Var merged;             // A_asr^M: T x d_emb
  std::optional<Var> ca;  // B x 2 d_emb, CONCAT_CA only
};

template <typename S>
class FusionBlock {
 public:
  FusionBlock(FusionConfig cfg, std::string prefix) : cfg_(cfg), prefix_(std::move(prefix)) { cfg_.Validate(); }

  const FusionConfig& config() const { return cfg_; }

  void Init(ParameterStore<S>& store, Rng& rng) const {
    const int d = cfg_.d_emb;
    AddLinear(store, P("proj_t"), d, d, true, rng);
    AddLinear(store, P("proj_r"), d, d, true, rng);
    if (cfg_.mode != FusionMode::kAdd) AddLinear(store, P("conv"), 2 * d, d, true, rng);
    if (cfg_.mode == FusionMode::kConcatCa) {
      // Small weights keep C_excite near zero, so CA starts close to 0.5.
      constexpr double kSmall = 1e-2;
      FillUniform(store.Add(P("squeeze/w"), 2 * d, cfg_.squeezed()), kSmall, rng);
      FillUniform(store.Add(P("squeeze/b"), 1, cfg_.squeezed()), kSmall, rng);
      FillUniform(store.Add(P("excite/w"), cfg_.squeezed(), 2 * d), kSmall, rng);
      FillUniform(store.Add(P("excite/b"), 1, 2 * d), kSmall, rng);
    }
  }

  /// Sets both projections to the identity with zero bias.
  void SetIdentityProjections(ParameterStore<S>& store) const {
    for (const char* name : {"proj_t", "proj_r"}) {
      store.Get(P(name) + "/w").value.setIdentity();
      store.Get(P(name) + "/b").value.setZero();
    }
  }

  FusionForward Forward(Graph<S>& g, ParameterStore<S>& store, Var a_t, Var a_r, const Segments& segs) const {
    const auto& At = g.value(a_t);
    const auto& Ar = g.value(a_r);
    ACCENTFUSE_REQUIRE(At.rows() == Ar.rows() && At.cols() == Ar.cols(), ContractError,
                       "fusion inputs differ in shape");
    ACCENTFUSE_REQUIRE(At.cols() == cfg_.d_emb, ContractError, "fusion input width != d_emb");
    ACCENTFUSE_REQUIRE(At.rows() == segs.total(), ContractError, "fusion: rows != segment total");
    ACCENTFUSE_REQUIRE(At.allFinite() && Ar.allFinite(), NumericError, "fusion inputs not finite");

    Var pt = ApplyLinear(g, store, P("proj_t"), a_t);
    Var pr = ApplyLinear(g, store, P("proj_r"), a_r);
    if (cfg_.mode == FusionMode::kAdd) return {Add(g, pt, pr), std::nullopt};
    Var cat = ConcatCols(g, pt, pr);
    if (cfg_.mode == FusionMode::kConcat) return {ApplyLinear(g, store, P("conv"), cat), std::nullopt};
    Var c = SegmentMaxPlusMean(g, cat, segs);
    Var squeeze = Relu(g, ApplyLinear(g, store, P("squeeze"), c));
    Var excite = Relu(g, ApplyLinear(g, store, P("excite"), squeeze));
    Var ca = Sigmoid(g, excite);
    Var scaled = SegmentScaleChannels(g, cat, ca, segs);
    return {ApplyLinear(g, store, P("conv"), scaled), ca};
  }

 private:
  std::string P(const std::string& s) const { return prefix_ + s; }

  FusionConfig cfg_;
  std::string prefix_;
};

/// Summed attention on the reference half divided by summed attention on the
/// trainable half.
template <typename Derived>
double ReferenceAttentionRatio(const Eigen::MatrixBase<Derived>& ca) {
  ACCENTFUSE_REQUIRE(ca.size() % 2 == 0 && ca.size() > 0, ContractError, "CA vector must have even length");
  const Eigen::Index d = ca.size() / 2;
  double trainable = 0, reference = 0;
  for (Eigen::Index c = 0; c < d; ++c) trainable += static_cast<double>(ca(c));
  for (Eigen::Index c = d; c < 2 * d; ++c) reference += static_cast<double>(ca(c));
  ACCENTFUSE_REQUIRE(trainable > 0, NumericError, "trainable-half attention sums to zero");
  return reference / trainable;
}

}  // namespace accentfuse
