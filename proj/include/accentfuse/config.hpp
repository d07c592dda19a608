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

// Run configuration: one JSON document holding every module's settings, the
// file paths of a run and the global seed. Unknown keys are rejected at every
// level. Module seeds left unset are derived from the global seed.

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "accentfuse/degradation.hpp"
#include "accentfuse/probes.hpp"
#include "accentfuse/synthetic.hpp"
#include "accentfuse/training.hpp"

namespace accentfuse {

namespace detail {

inline void RejectUnknown(const nlohmann::json& j, const std::vector<std::string>& known, const std::string& section) {
  ACCENTFUSE_REQUIRE(j.is_object(), ConfigError, "config section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items())
    ACCENTFUSE_REQUIRE(std::count(known.begin(), known.end(), key), ConfigError,
                       "unknown key '" + key + "' in config section '" + section + "'");
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const ProbeConfig& c) {
  j = nlohmann::json{{"lr", c.lr},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"valid_fraction", c.valid_fraction},
                     {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, ProbeConfig& c) {
  detail::RejectUnknown(j, {"lr", "epochs", "batch_size", "valid_fraction", "seed"}, "probe");
  ProbeConfig d;
  c.lr = j.value("lr", d.lr);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.valid_fraction = j.value("valid_fraction", d.valid_fraction);
  c.seed = j.value("seed", d.seed);
  ACCENTFUSE_REQUIRE(c.lr > 0 && c.epochs >= 1 && c.batch_size >= 1 && c.valid_fraction > 0 && c.valid_fraction < 1,
                     ConfigError, "bad probe configuration");
}

/// Synthetic corpus settings in file form; the substitution table is drawn
/// from (substitutions_per_accent, substitution_prob, table_seed).
struct SynthConfig {
  int n_accents = 4;
  int n_speakers_per_accent = 8;
  int n_utts_per_speaker = 50;
  int substitutions_per_accent = 6;
  double substitution_prob = 1.0;
  std::uint64_t table_seed = 1;
  double timbre_std = 1.0;
  double noise_std = 0.5;
  double prototype_scale = 1.0;
  int min_frames = 3;
  int max_frames = 8;
  int min_words = 2;
  int max_words = 4;
  std::uint64_t seed = 1;
  std::uint64_t prototype_seed = 7;
  std::string name = "synth";

  SyntheticCorpusSpec ToSpec() const {
    SyntheticCorpusSpec s;
    s.n_accents = n_accents;
    s.n_speakers_per_accent = n_speakers_per_accent;
    s.n_utts_per_speaker = n_utts_per_speaker;
    if (substitutions_per_accent > 0)
      s.accent_shift_table = RandomAccentTable(n_accents, substitutions_per_accent, substitution_prob, table_seed);
    s.timbre_std = timbre_std;
    s.noise_std = noise_std;
    s.prototype_scale = prototype_scale;
    s.min_frames = min_frames;
    s.max_frames = max_frames;
    s.min_words = min_words;
    s.max_words = max_words;
    s.seed = seed;
    s.prototype_seed = prototype_seed;
    s.name = name;
    s.Validate();
    return s;
  }
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"n_accents", c.n_accents},
                     {"n_speakers_per_accent", c.n_speakers_per_accent},
                     {"n_utts_per_speaker", c.n_utts_per_speaker},
                     {"substitutions_per_accent", c.substitutions_per_accent},
                     {"substitution_prob", c.substitution_prob},
                     {"table_seed", c.table_seed},
                     {"timbre_std", c.timbre_std},
                     {"noise_std", c.noise_std},
                     {"prototype_scale", c.prototype_scale},
                     {"min_frames", c.min_frames},
                     {"max_frames", c.max_frames},
                     {"min_words", c.min_words},
                     {"max_words", c.max_words},
                     {"seed", c.seed},
                     {"prototype_seed", c.prototype_seed},
                     {"name", c.name}};
}
inline void from_json(const nlohmann::json& j, SynthConfig& c) {
  const SynthConfig d;
  detail::RejectUnknown(j, {"n_accents", "n_speakers_per_accent", "n_utts_per_speaker", "substitutions_per_accent",
                            "substitution_prob", "table_seed", "timbre_std", "noise_std", "prototype_scale",
                            "min_frames", "max_frames", "min_words", "max_words", "seed", "prototype_seed", "name"},
                        "synth");
  c.n_accents = j.value("n_accents", d.n_accents);
  c.n_speakers_per_accent = j.value("n_speakers_per_accent", d.n_speakers_per_accent);
  c.n_utts_per_speaker = j.value("n_utts_per_speaker", d.n_utts_per_speaker);
  c.substitutions_per_accent = j.value("substitutions_per_accent", d.substitutions_per_accent);
  c.substitution_prob = j.value("substitution_prob", d.substitution_prob);
  c.table_seed = j.value("table_seed", d.table_seed);
  c.timbre_std = j.value("timbre_std", d.timbre_std);
  c.noise_std = j.value("noise_std", d.noise_std);
  c.prototype_scale = j.value("prototype_scale", d.prototype_scale);
  c.min_frames = j.value("min_frames", d.min_frames);
  c.max_frames = j.value("max_frames", d.max_frames);
  c.min_words = j.value("min_words", d.min_words);
  c.max_words = j.value("max_words", d.max_words);
  c.seed = j.value("seed", d.seed);
  c.prototype_seed = j.value("prototype_seed", d.prototype_seed);
  c.name = j.value("name", d.name);
}

struct PathsConfig {
  std::string manifest;         // training corpus
  std::string valid_manifest;   // optional; otherwise a speaker-disjoint split
  std::string lexicon;
  std::string hierarchy;
  std::string checkpoint;       // model to evaluate / probe / export
  std::string init_checkpoint;  // pretrained AM_t
  std::string reference_checkpoint;  // frozen AM_f
  std::string checkpoint_dir;
  std::string report_dir;
};

inline void to_json(nlohmann::json& j, const PathsConfig& c) {
  j = nlohmann::json{{"manifest", c.manifest},
                     {"valid_manifest", c.valid_manifest},
                     {"lexicon", c.lexicon},
                     {"hierarchy", c.hierarchy},
                     {"checkpoint", c.checkpoint},
                     {"init_checkpoint", c.init_checkpoint},
                     {"reference_checkpoint", c.reference_checkpoint},
                     {"checkpoint_dir", c.checkpoint_dir},
                     {"report_dir", c.report_dir}};
}
inline void from_json(const nlohmann::json& j, PathsConfig& c) {
  detail::RejectUnknown(j, {"manifest", "valid_manifest", "lexicon", "hierarchy", "checkpoint", "init_checkpoint",
                            "reference_checkpoint", "checkpoint_dir", "report_dir"},
                        "paths");
  c.manifest = j.value("manifest", std::string());
  c.valid_manifest = j.value("valid_manifest", std::string());
  c.lexicon = j.value("lexicon", std::string());
  c.hierarchy = j.value("hierarchy", std::string());
  c.checkpoint = j.value("checkpoint", std::string());
  c.init_checkpoint = j.value("init_checkpoint", std::string());
  c.reference_checkpoint = j.value("reference_checkpoint", std::string());
  c.checkpoint_dir = j.value("checkpoint_dir", std::string());
  c.report_dir = j.value("report_dir", std::string());
}

/// Small model used for desk-scale runs on synthetic data.
inline ModelConfig CompactModelConfig(int n_accents, int width = 64) {
  ModelConfig c;
  c.acoustic.prologue_channels = width;
  c.acoustic.prologue_kernel = 7;
  c.acoustic.n_blocks = 2;
  c.acoustic.subblocks_per_block = 2;
  c.acoustic.block_channels = {width, width};
  c.acoustic.block_kernels = {7, 9};
  c.acoustic.d_emb = width;
  c.acoustic.dropout = 0.1;
  c.aggregation.d_attn = width;
  c.aggregation.d_ff = 2 * width;
  c.aggregation.heads = 4;
  c.aggregation.n_layers = 2;
  c.aggregation.d_accent = n_accents;
  c.aggregation.dropout = 0.1;
  c.fusion.squeeze_ratio = 8;
  c.SyncWidths();
  return c;
}

struct RunConfig {
  std::uint64_t seed = 1;
  int val_speakers_per_accent = 2;
  ModelConfig model = CompactModelConfig(4);
  TrainConfig train;
  PretrainConfig pretrain;
  DegradationConfig degradation;
  ProbeConfig probe;
  SynthConfig synth;
  PathsConfig paths;

  /// Fills every module seed that the document did not set explicitly.
  void DeriveSeeds(const nlohmann::json& doc) {
    auto explicit_seed = [&doc](const char* section) {
      return doc.contains(section) && doc.at(section).contains("seed");
    };
    if (!explicit_seed("train")) train.seed = DeriveSeed(seed, "train");
    if (!explicit_seed("pretrain")) pretrain.seed = DeriveSeed(seed, "pretrain");
    if (!explicit_seed("degradation")) degradation.seed = DeriveSeed(seed, "degradation");
    if (!explicit_seed("probe")) probe.seed = DeriveSeed(seed, "probe");
    if (!explicit_seed("synth")) synth.seed = DeriveSeed(seed, "synth");
    if (!(doc.contains("synth") && doc.at("synth").contains("table_seed")))
      synth.table_seed = DeriveSeed(seed, "synth-table");
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"val_speakers_per_accent", c.val_speakers_per_accent},
                     {"model", c.model},
                     {"train", c.train},
                     {"pretrain", c.pretrain},
                     {"degradation", c.degradation},
                     {"probe", c.probe},
                     {"synth", c.synth},
                     {"paths", c.paths}};
}

/// Parses a run document. Sections not present keep their defaults; module
/// seeds not present are derived from the global seed.
inline RunConfig ParseRunConfig(const nlohmann::json& doc) {
  detail::RejectUnknown(
      doc, {"seed", "val_speakers_per_accent", "model", "train", "pretrain", "degradation", "probe", "synth", "paths"},
      "top level");
  RunConfig c;
  c.seed = doc.value("seed", c.seed);
  c.val_speakers_per_accent = doc.value("val_speakers_per_accent", c.val_speakers_per_accent);
  try {
    if (doc.contains("model")) c.model = doc.at("model").get<ModelConfig>();
    if (doc.contains("train")) c.train = doc.at("train").get<TrainConfig>();
    if (doc.contains("pretrain")) c.pretrain = doc.at("pretrain").get<PretrainConfig>();
    if (doc.contains("degradation")) c.degradation = doc.at("degradation").get<DegradationConfig>();
    if (doc.contains("probe")) c.probe = doc.at("probe").get<ProbeConfig>();
    if (doc.contains("synth")) c.synth = doc.at("synth").get<SynthConfig>();
    if (doc.contains("paths")) c.paths = doc.at("paths").get<PathsConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.DeriveSeeds(doc);
  c.model.Validate();
  c.train.Validate();
  c.pretrain.Validate();
  c.degradation.Validate();
  return c;
}

inline RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  ACCENTFUSE_REQUIRE(in.good(), IoError, "cannot open config: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return ParseRunConfig(doc);
}

}  // namespace accentfuse
