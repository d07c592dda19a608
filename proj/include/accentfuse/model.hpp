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

// The full accent model: trainable acoustic model, optional frozen reference
// acoustic model with a fusion block, and the aggregation model.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "accentfuse/acoustic.hpp"
#include "accentfuse/aggregation.hpp"
#include "accentfuse/checkpoint.hpp"
#include "accentfuse/fusion.hpp"

namespace accentfuse {

inline const std::string kTrainablePrefix = "am_t/";
inline const std::string kReferencePrefix = "am_f/";
inline const std::string kFusionPrefix = "fusion/";
inline const std::string kAggregationPrefix = "agg/";

struct ModelConfig {
  AcousticConfig acoustic;
  AggregationConfig aggregation;
  bool hybrid = false;
  FusionConfig fusion;
  std::vector<std::string> accent_labels;

  /// Full-size preset: Jasper 5x3 with d_emb 1024, d_attn 256, d_ff 1024,
  /// 4 heads, 3 layers, 8 accents.
  static ModelConfig FullScale() {
    ModelConfig c;
    c.acoustic = AcousticConfig::FullScale();
    c.aggregation.d_in = c.acoustic.d_emb;
    c.fusion.d_emb = c.acoustic.d_emb;
    c.accent_labels = {"US", "UK", "CN", "IN", "JP", "KR", "PT", "RU"};
    return c;
  }

  void Validate() const {
    acoustic.Validate();
    aggregation.Validate();
    ACCENTFUSE_REQUIRE(aggregation.d_in == acoustic.d_emb, ConfigError, "aggregation d_in must equal d_emb");
    if (hybrid) {
      fusion.Validate();
      ACCENTFUSE_REQUIRE(fusion.d_emb == acoustic.d_emb, ConfigError, "fusion d_emb must equal acoustic d_emb");
    }
    ACCENTFUSE_REQUIRE(accent_labels.empty() || static_cast<int>(accent_labels.size()) == aggregation.d_accent,
                       ConfigError, "accent_labels must list d_accent labels");
  }

  /// Keeps the derived widths consistent after editing acoustic.d_emb.
  void SyncWidths() {
    aggregation.d_in = acoustic.d_emb;
    fusion.d_emb = acoustic.d_emb;
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"acoustic", c.acoustic},
                     {"aggregation", c.aggregation},
                     {"hybrid", c.hybrid},
                     {"fusion", c.fusion},
                     {"accent_labels", c.accent_labels}};
}
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  for (const auto& [key, _] : j.items())
    ACCENTFUSE_REQUIRE(key == "acoustic" || key == "aggregation" || key == "hybrid" || key == "fusion" ||
                           key == "accent_labels",
                       ConfigError, "unknown model key: " + key);
  c = ModelConfig{};
  if (j.contains("acoustic")) c.acoustic = j.at("acoustic").get<AcousticConfig>();
  if (j.contains("aggregation")) c.aggregation = j.at("aggregation").get<AggregationConfig>();
  c.hybrid = j.value("hybrid", false);
  if (j.contains("fusion")) c.fusion = j.at("fusion").get<FusionConfig>();
  c.accent_labels = j.value("accent_labels", std::vector<std::string>{});
}

/// The reference model is a plain phoneme recognizer: its head always has
/// the 40 phoneme classes, whatever label set the trainable model uses.
inline AcousticConfig ReferenceAcousticConfig(AcousticConfig c) {
  c.n_labels = kPhonemeClasses;
  return c;
}

/// Head-independent view of an acoustic config, used to match checkpoints.
inline nlohmann::json AcousticBodyJson(const AcousticConfig& c) {
  auto j = nlohmann::json(c);
  j.erase("n_labels");
  return j;
}

struct ModelForward {
  AcousticForward trainable;
  std::optional<Var> reference_embedding;  // A_asr^R
  std::optional<FusionForward> fusion;
  Var merged;  // embedding handed to aggregation
  AggregationForward aggregation;
};

template <typename S>
class AccentModel {
 public:
  explicit AccentModel(ModelConfig cfg)
      : cfg_(std::move(cfg)),
        am_t_(cfg_.acoustic, kTrainablePrefix),
        am_f_(ReferenceAcousticConfig(cfg_.acoustic), kReferencePrefix),
        fusion_(cfg_.hybrid ? cfg_.fusion : FusionConfig{FusionMode::kAdd, cfg_.acoustic.d_emb, 1}, kFusionPrefix),
        agg_(cfg_.aggregation, kAggregationPrefix) {
    cfg_.Validate();
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterStore<S>& params() { return store_; }
  const ParameterStore<S>& params() const { return store_; }
  const AcousticModel<S>& trainable_am() const { return am_t_; }
  const AcousticModel<S>& reference_am() const { return am_f_; }
  const FusionBlock<S>& fusion() const { return fusion_; }
  const AggregationModel<S>& aggregation() const { return agg_; }

  void Init(std::uint64_t seed) {
    ACCENTFUSE_REQUIRE(store_.size() == 0, ContractError, "model already initialized");
    Rng rng(seed);
    am_t_.Init(store_, rng);
    if (cfg_.hybrid) {
      am_f_.Init(store_, rng);
      store_.SetTrainable(kReferencePrefix, false);
      fusion_.Init(store_, rng);
    }
    agg_.Init(store_, rng);
  }

  /// Parameters the optimizer may touch (the reference model is excluded).
  std::vector<Parameter<S>*> TrainableParameters() {
    std::vector<Parameter<S>*> out;
    for (auto* p : store_.All())
      if (p->trainable && !p->is_buffer) out.push_back(p);
    return out;
  }

  ModelForward Forward(Graph<S>& g, Var x, const Segments& segs, const RunContext& ctx,
                       AttentionCapture<S>* capture = nullptr) {
    ModelForward out;
    out.trainable = am_t_.Forward(g, store_, x, segs, ctx);
    out.merged = out.trainable.embedding;
    if (cfg_.hybrid) {
      const RunContext frozen;  // the reference model always runs in eval mode
      auto ref = am_f_.Forward(g, store_, x, segs, frozen);
      out.reference_embedding = ref.embedding;
      out.fusion = fusion_.Forward(g, store_, out.trainable.embedding, ref.embedding, out.trainable.segs);
      out.merged = out.fusion->merged;
    }
    out.aggregation = agg_.Forward(g, store_, out.merged, out.trainable.segs, ctx, capture);
    return out;
  }

  nlohmann::json ConfigJson() const { return nlohmann::json(cfg_); }

  void Save(const std::string& path) const { SaveCheckpoint(path, store_, nlohmann::json{{"model", cfg_}}); }

  /// Loads a full-model checkpoint; the stored config must match exactly.
  void Load(const std::string& path) {
    auto data = ReadCheckpoint(path);
    ACCENTFUSE_REQUIRE(data.config.contains("model"), ConfigError, path + ": not a full-model checkpoint");
    ACCENTFUSE_REQUIRE(data.config.at("model") == ConfigJson(), ConfigError,
                       path + ": checkpoint config does not match the requested model config");
    RestoreParameters(data, store_, "", "");
  }

  static AccentModel FromCheckpoint(const std::string& path) {
    auto data = ReadCheckpoint(path);
    ACCENTFUSE_REQUIRE(data.config.contains("model"), ConfigError, path + ": not a full-model checkpoint");
    AccentModel m(data.config.at("model").get<ModelConfig>());
    m.Init(0);
    RestoreParameters(data, m.store_, "", "");
    return m;
  }

  /// Copies an acoustic-only checkpoint into the trainable or reference slot.
  /// The convolutional body must match. When the label counts differ (a
  /// grown label set) the destination keeps its freshly initialized head.
  void LoadAcoustic(const std::string& path, const std::string& dst_prefix) {
    ACCENTFUSE_REQUIRE(dst_prefix == kTrainablePrefix || (dst_prefix == kReferencePrefix && cfg_.hybrid), ConfigError,
                       "no acoustic slot named " + dst_prefix);
    auto data = ReadCheckpoint(path);
    ACCENTFUSE_REQUIRE(data.config.contains("acoustic"), ConfigError, path + ": not an acoustic checkpoint");
    const auto stored = data.config.at("acoustic").get<AcousticConfig>();
    const auto& slot = dst_prefix == kTrainablePrefix ? am_t_.config() : am_f_.config();
    ACCENTFUSE_REQUIRE(AcousticBodyJson(stored) == AcousticBodyJson(slot), ConfigError,
                       path + ": acoustic config mismatch");
    const bool same_head = stored.n_labels == slot.n_labels;
    RestoreParameters(data, store_, kTrainablePrefix, dst_prefix, same_head ? "" : "head/");
  }

 private:
  ModelConfig cfg_;
  AcousticModel<S> am_t_;
  AcousticModel<S> am_f_;
  FusionBlock<S> fusion_;
  AggregationModel<S> agg_;
  ParameterStore<S> store_;
};

}  // namespace accentfuse
