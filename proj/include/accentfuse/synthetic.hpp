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

// Synthetic accented-speech corpus.
//
// Every phoneme owns one fixed prototype feature vector. An utterance is the
// prototype sequence of its pronounced phonemes, each held for 3-8 frames,
// plus the speaker's timbre offset and white noise. Accents substitute
// phonemes in the audio only; the transcript always keeps the canonical
// pronunciation, the way read-speech corpora label accented speakers.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "accentfuse/data.hpp"
#include "accentfuse/features.hpp"

namespace accentfuse {

struct Substitution {
  int from = 0;
  int to = 0;
  double prob = 1.0;
};

struct SyntheticCorpusSpec {
  int n_accents = 4;
  int n_speakers_per_accent = 8;
  int n_utts_per_speaker = 50;
  std::vector<std::vector<Substitution>> accent_shift_table;  // one list per accent
  std::vector<RowVec<double>> speaker_timbre;  // explicit offsets; generated when empty
  double timbre_std = 1.0;
  double noise_std = 0.5;
  double prototype_scale = 1.0;
  int min_frames = 3;
  int max_frames = 8;
  int min_words = 2;
  int max_words = 4;
  std::uint64_t seed = 1;
  std::uint64_t prototype_seed = 7;  // shared by corpora of the same "language"
  std::string name = "synth";

  int n_speakers() const { return n_accents * n_speakers_per_accent; }

  void Validate() const {
    ACCENTFUSE_REQUIRE(n_accents >= 1 && n_speakers_per_accent >= 1 && n_utts_per_speaker >= 1, ConfigError,
                       "synthetic corpus sizes must be positive");
    ACCENTFUSE_REQUIRE(accent_shift_table.empty() || static_cast<int>(accent_shift_table.size()) == n_accents,
                       ConfigError, "accent_shift_table needs one entry per accent");
    for (const auto& table : accent_shift_table)
      for (const auto& s : table) {
        ACCENTFUSE_REQUIRE(s.prob >= 0.0 && s.prob <= 1.0, ConfigError, "substitution probability outside [0,1]");
        ACCENTFUSE_REQUIRE(s.from >= 1 && s.from <= kNumPhonemes && s.to >= 1 && s.to <= kNumPhonemes, ConfigError,
                           "substitution phoneme out of range");
      }
    ACCENTFUSE_REQUIRE(speaker_timbre.empty() || static_cast<int>(speaker_timbre.size()) == n_speakers(), ConfigError,
                       "speaker_timbre needs one vector per speaker");
    for (const auto& t : speaker_timbre)
      ACCENTFUSE_REQUIRE(t.size() == kFbankDim, ConfigError, "timbre vectors must have 40 dims");
    ACCENTFUSE_REQUIRE(1 <= min_frames && min_frames <= max_frames, ConfigError, "bad frame duration range");
    ACCENTFUSE_REQUIRE(1 <= min_words && min_words <= max_words, ConfigError, "bad word count range");
    ACCENTFUSE_REQUIRE(timbre_std >= 0 && noise_std >= 0, ConfigError, "negative standard deviation");
  }
};

/// Random substitution table: each accent rewrites `per_accent` distinct
/// source phonemes into other phonemes with probability `prob`. Sources are
/// not shared between accents.
inline std::vector<std::vector<Substitution>> RandomAccentTable(int n_accents, int per_accent, double prob,
                                                                std::uint64_t seed) {
  ACCENTFUSE_REQUIRE(n_accents * per_accent <= kNumPhonemes, ConfigError, "too many substitutions requested");
  Rng rng(seed);
  std::vector<int> phonemes(kNumPhonemes);
  for (int i = 0; i < kNumPhonemes; ++i) phonemes[i] = i + 1;
  for (int i = kNumPhonemes - 1; i > 0; --i) std::swap(phonemes[i], phonemes[UniformInt(rng, 0, i)]);
  std::vector<std::vector<Substitution>> table(n_accents);
  for (int a = 0; a < n_accents; ++a)
    for (int k = 0; k < per_accent; ++k) {
      const int from = phonemes[a * per_accent + k];
      int to = from;
      while (to == from) to = UniformInt(rng, 1, kNumPhonemes);
      table[a].push_back({from, to, prob});
    }
  return table;
}

/// Fixed prototype vector of every phoneme (row 0, blank, unused).
inline MatD PhonemePrototypes(std::uint64_t prototype_seed, double scale) {
  Rng rng(prototype_seed);
  MatD proto = MatD::Zero(kPhonemeClasses, kFbankDim);
  for (int p = 1; p < kPhonemeClasses; ++p)
    for (int d = 0; d < kFbankDim; ++d) proto(p, d) = scale * Normal(rng);
  return proto;
}

struct SyntheticCorpus {
  Dataset dataset;
  std::vector<std::vector<int>> pronounced;  // phonemes actually rendered
  std::vector<std::vector<int>> durations;   // frames per pronounced phoneme
  MatD prototypes;
  std::vector<RowVec<double>> timbre;
};

inline SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec) {
  spec.Validate();
  SyntheticCorpus out;
  out.prototypes = PhonemePrototypes(spec.prototype_seed, spec.prototype_scale);

  Rng timbre_rng(DeriveSeed(spec.seed, "timbre"));
  if (!spec.speaker_timbre.empty()) {
    out.timbre = spec.speaker_timbre;
  } else {
    for (int s = 0; s < spec.n_speakers(); ++s) {
      RowVec<double> t(kFbankDim);
      for (int d = 0; d < kFbankDim; ++d) t[d] = spec.timbre_std * Normal(timbre_rng);
      out.timbre.push_back(t);
    }
  }

  const Lexicon& lex = BuiltinLexicon();
  std::vector<std::string> words;
  for (const auto& [w, _] : lex) words.push_back(w);

  Rng rng(DeriveSeed(spec.seed, "utterances"));
  auto& corpus = out.dataset.corpus;
  for (int a = 0; a < spec.n_accents; ++a) corpus.accents.Intern("accent-" + std::to_string(a));
  for (int a = 0; a < spec.n_accents; ++a) {
    for (int k = 0; k < spec.n_speakers_per_accent; ++k) {
      const std::string spk_label = spec.name + "-a" + std::to_string(a) + "-s" + std::to_string(k);
      const int speaker = corpus.speakers.Intern(spk_label);
      const auto& timbre = out.timbre[speaker];
      for (int u = 0; u < spec.n_utts_per_speaker; ++u) {
        UtteranceRecord r;
        r.utt_id = spk_label + "-u" + std::to_string(u);
        r.features_path = r.utt_id + ".fbk";
        const int nw = UniformInt(rng, spec.min_words, spec.max_words);
        std::string text;
        for (int i = 0; i < nw; ++i) {
          r.transcript_words.push_back(words[UniformInt(rng, 0, static_cast<int>(words.size()) - 1)]);
          text += r.transcript_words.back() + " ";
        }
        r.transcript_phonemes = G2P(r.transcript_words, lex, true);
        r.accent = a;
        r.speaker = speaker;

        std::vector<int> pron = r.transcript_phonemes;
        if (!spec.accent_shift_table.empty())
          for (auto& p : pron) {
            for (const auto& sub : spec.accent_shift_table[a]) {
              if (sub.from != p) continue;
              if (Uniform01(rng) < sub.prob) p = sub.to;
              break;
            }
          }
        // Durations depend on the text only, so two speakers reading the same
        // prompt share a time alignment.
        Rng dur_rng(DeriveSeed(spec.seed, "durations:" + text));
        std::vector<int> dur;
        int total = 0;
        for (size_t i = 0; i < pron.size(); ++i) {
          dur.push_back(UniformInt(dur_rng, spec.min_frames, spec.max_frames));
          total += dur.back();
        }
        FeatureSequence fs;
        fs.utt_id = r.utt_id;
        fs.values.resize(total, kFbankDim);
        fs.valid_length = total;
        int row = 0;
        for (size_t i = 0; i < pron.size(); ++i)
          for (int f = 0; f < dur[i]; ++f, ++row)
            for (int d = 0; d < kFbankDim; ++d) {
              const double noise = spec.noise_std > 0 ? spec.noise_std * Normal(rng) : 0.0;
              fs.values(row, d) = static_cast<float>(out.prototypes(pron[i], d) + timbre[d] + noise);
            }
        out.pronounced.push_back(std::move(pron));
        out.durations.push_back(std::move(dur));
        out.dataset.features.push_back(std::move(fs));
        corpus.records.push_back(std::move(r));
      }
    }
  }
  corpus.accents.Freeze();
  corpus.speakers.Freeze();
  return out;
}

/// Writes one feature container per utterance plus `manifest.jsonl` into `dir`.
inline std::string WriteSyntheticCorpus(const SyntheticCorpus& sc, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto& ds = sc.dataset;
  for (size_t i = 0; i < ds.size(); ++i)
    WriteFeatures((std::filesystem::path(dir) / ds.corpus.records[i].features_path).string(), ds.features[i]);
  const std::string manifest = (std::filesystem::path(dir) / "manifest.jsonl").string();
  WriteManifest(manifest, ds.corpus);
  return manifest;
}

}  // namespace accentfuse
