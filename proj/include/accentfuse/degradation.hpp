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

// Transcript corruption. HIERARCHY mode replaces each phoneme by its group
// label with probability theta; RANDOM mode replaces the whole transcript by
// uniform phonemes of the same length.

#pragma once

#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "accentfuse/data.hpp"
#include "accentfuse/phonemes.hpp"
#include "accentfuse/training.hpp"

namespace accentfuse {

enum class DegradationMode { kHierarchy, kRandom };

inline std::string ToString(DegradationMode m) { return m == DegradationMode::kHierarchy ? "hierarchy" : "random"; }

inline DegradationMode ParseDegradationMode(const std::string& s) {
  if (s == "hierarchy") return DegradationMode::kHierarchy;
  if (s == "random") return DegradationMode::kRandom;
  throw ConfigError("unknown degradation mode: " + s + " (expected hierarchy or random)");
}

struct DegradationConfig {
  double theta = 0.0;  // HIERARCHY only
  DegradationMode mode = DegradationMode::kHierarchy;
  std::uint64_t seed = 1;

  void Validate() const {
    ACCENTFUSE_REQUIRE(theta >= 0.0 && theta <= 1.0, ConfigError, "theta must be in [0,1]");
  }
};

inline void to_json(nlohmann::json& j, const DegradationConfig& c) {
  j = nlohmann::json{{"theta", c.theta}, {"mode", ToString(c.mode)}, {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, DegradationConfig& c) {
  for (const auto& [key, _] : j.items())
    ACCENTFUSE_REQUIRE(key == "theta" || key == "mode" || key == "seed", ConfigError,
                       "unknown degradation key: " + key);
  c.theta = j.value("theta", 0.0);
  c.mode = ParseDegradationMode(j.value("mode", std::string("hierarchy")));
  c.seed = j.value("seed", std::uint64_t{1});
}

/// Corrupts one transcript. `stream` separates the random streams of
/// different utterances. In HIERARCHY mode one uniform draw is made per token
/// whatever theta is, so runs at two thetas with the same seed and stream are
/// coupled: positions mapped at the smaller theta are mapped at the larger.
inline std::vector<int> DegradeTranscript(const std::vector<int>& w, const PhonemeHierarchy& hierarchy,
                                          const DegradationConfig& cfg, std::string_view stream = "") {
  cfg.Validate();
  for (int p : w)
    ACCENTFUSE_REQUIRE(p >= 0 && p < kPhonemeClasses, LookupError, "not a phoneme id: " + std::to_string(p));
  Rng rng(DeriveSeed(cfg.seed, stream));
  std::vector<int> out(w.size());
  if (cfg.mode == DegradationMode::kRandom) {
    for (auto& p : out) p = UniformInt(rng, 1, kNumPhonemes);
    return out;
  }
  for (size_t i = 0; i < w.size(); ++i) {
    const double p = Uniform01(rng);
    out[i] = p < cfg.theta ? hierarchy.GroupLabel(w[i]) : w[i];
  }
  return out;
}

/// Number of CTC output classes needed for transcripts degraded with `cfg`.
inline int DegradedLabelCount(const PhonemeHierarchy& hierarchy, const DegradationConfig& cfg) {
  return cfg.mode == DegradationMode::kHierarchy ? hierarchy.label_count() : kPhonemeClasses;
}

/// Copy of `corpus` with every transcript degraded (one stream per utt_id)
/// and the settings recorded as provenance.
inline Corpus DegradeCorpus(const Corpus& corpus, const PhonemeHierarchy& hierarchy, const DegradationConfig& cfg) {
  Corpus out = corpus;
  for (auto& r : out.records) r.transcript_phonemes = DegradeTranscript(r.transcript_phonemes, hierarchy, cfg, r.utt_id);
  nlohmann::json prov = corpus.provenance.is_object() ? corpus.provenance : nlohmann::json::object();
  prov["degradation"] = cfg;
  out.provenance = prov;
  return out;
}

inline Dataset DegradeDataset(const Dataset& ds, const PhonemeHierarchy& hierarchy, const DegradationConfig& cfg) {
  return Dataset{DegradeCorpus(ds.corpus, hierarchy, cfg), ds.features};
}

/// Writes a degraded manifest: provenance header line, then group labels as
/// "@group" symbols in the phonemes field.
inline void WriteDegradedManifest(const std::string& path, const Corpus& degraded, const PhonemeHierarchy& hierarchy) {
  WriteManifest(path, degraded, &hierarchy);
}

// ---------------------------------------------------------------------------
// Robustness suite

struct TranscriptCondition {
  std::string name;
  DegradationConfig degradation;
  bool random() const { return degradation.mode == DegradationMode::kRandom; }
};

/// theta conditions in order, then RANDOM if requested.
inline std::vector<TranscriptCondition> RobustnessConditions(const std::vector<double>& thetas, bool with_random,
                                                             std::uint64_t seed) {
  std::vector<TranscriptCondition> out;
  for (double t : thetas) {
    std::ostringstream name;
    name << "theta=" << t;
    out.push_back({name.str(), DegradationConfig{t, DegradationMode::kHierarchy, seed}});
  }
  if (with_random) out.push_back({"random", DegradationConfig{0.0, DegradationMode::kRandom, seed}});
  return out;
}

/// Reference totals of the original 8-row table (MTL then HYBRID, for theta
/// 0, 0.5, 1 and random transcripts). Kept for the report only.
inline constexpr double kReferenceTotalsMtl[4] = {79.9, 76.8, 74.7, 51.5};
inline constexpr double kReferenceTotalsHybrid[4] = {81.1, 79.3, 77.5, 64.8};

struct RobustnessCell {
  std::string condition;
  Regime regime = Regime::kMtl;
  std::optional<EvalResult> result;
  std::string error;  // set when the cell failed
};

/// Trains and evaluates one cell: (degraded train set, valid set, regime,
/// CTC label count, condition) -> validation result.
using CellTrainer = std::function<EvalResult(const Dataset&, const Dataset&, Regime, int, const TranscriptCondition&)>;

/// Runs every (condition, regime) cell. A failing cell is recorded with its
/// error message and the suite moves on.
inline std::vector<RobustnessCell> RunRobustnessSuite(const Dataset& train, const Dataset& valid,
                                                      const PhonemeHierarchy& hierarchy,
                                                      const std::vector<TranscriptCondition>& conditions,
                                                      const std::vector<Regime>& regimes, const CellTrainer& trainer) {
  for (Regime r : regimes)
    ACCENTFUSE_REQUIRE(r == Regime::kMtl || r == Regime::kHybrid, ConfigError,
                       "robustness cells use the mtl and hybrid regimes");
  std::vector<RobustnessCell> cells;
  for (Regime regime : regimes)
    for (const auto& cond : conditions) {
      RobustnessCell cell{cond.name, regime, std::nullopt, ""};
      try {
        const Dataset degraded = DegradeDataset(train, hierarchy, cond.degradation);
        const Dataset degraded_valid = DegradeDataset(valid, hierarchy, cond.degradation);
        cell.result = trainer(degraded, degraded_valid, regime, DegradedLabelCount(hierarchy, cond.degradation), cond);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  return cells;
}

/// Table with one row per cell: id, regime, transcription, per-accent
/// accuracies, total. Failed cells print FAILED and their error.
inline void WriteRobustnessTable(std::ostream& out, const std::vector<RobustnessCell>& cells,
                                 const std::vector<std::string>& columns) {
  out << "id,regime,transcription";
  for (const auto& c : columns) out << ',' << c;
  out << ",Total,status\n";
  int id = 1;
  for (const auto& cell : cells) {
    std::ostringstream line;
    line << id++ << ',' << ToString(cell.regime) << ',' << cell.condition << std::fixed << std::setprecision(1);
    if (cell.result) {
      for (size_t a = 0; a < columns.size(); ++a) {
        line << ',';
        if (a < cell.result->per_accent_total.size() && cell.result->per_accent_total[a] > 0)
          line << 100.0 * cell.result->accent_accuracy(static_cast<int>(a));
      }
      line << ',' << 100.0 * cell.result->accuracy() << ",ok";
    } else {
      for (size_t a = 0; a < columns.size(); ++a) line << ',';
      std::string err = cell.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      line << ",,FAILED: " << err;
    }
    out << line.str() << '\n';
  }
}

}  // namespace accentfuse
