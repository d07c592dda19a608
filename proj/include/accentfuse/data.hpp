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

// Corpus records, manifest files, lexicon-based G2P and corpus splits.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "accentfuse/common.hpp"
#include "accentfuse/features.hpp"
#include "accentfuse/phonemes.hpp"

namespace accentfuse {

using json = nlohmann::json;

struct UtteranceRecord {
  std::string utt_id;
  std::string features_path;
  std::vector<std::string> transcript_words;
  std::vector<int> transcript_phonemes;  // label ids; 0 (blank) never appears
  int accent = 0;
  int speaker = 0;
};

/// Frozen string <-> id mapping for accent or speaker labels.
class LabelVocab {
 public:
  int Intern(const std::string& label) {
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    ACCENTFUSE_REQUIRE(!frozen_, LookupError, "label not in frozen vocabulary: " + label);
    const int id = static_cast<int>(labels_.size());
    labels_.push_back(label);
    index_[label] = id;
    return id;
  }
  int Id(const std::string& label) const {
    auto it = index_.find(label);
    ACCENTFUSE_REQUIRE(it != index_.end(), LookupError, "unknown label: " + label);
    return it->second;
  }
  const std::string& Label(int id) const { return labels_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& labels() const { return labels_; }
  int size() const { return static_cast<int>(labels_.size()); }
  void Freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  static LabelVocab FromLabels(const std::vector<std::string>& labels) {
    LabelVocab v;
    for (const auto& l : labels) v.Intern(l);
    v.Freeze();
    return v;
  }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int> index_;
  bool frozen_ = false;
};

/// Column order of the AESRC accent report.
inline const std::vector<std::string>& AesrcAccentOrder() {
  static const std::vector<std::string> order = {"US", "UK", "CN", "IN", "JP", "KR", "PT", "RU"};
  return order;
}

struct Corpus {
  std::vector<UtteranceRecord> records;
  LabelVocab accents;
  LabelVocab speakers;
  json provenance;  // set when the manifest carried a provenance header

  int n_accents() const { return accents.size(); }
  int n_speakers() const { return speakers.size(); }

  /// speaker id -> accent id; the corpus invariant guarantees a function.
  std::vector<int> SpeakerAccents() const {
    std::vector<int> out(static_cast<size_t>(n_speakers()), -1);
    for (const auto& r : records) out[r.speaker] = r.accent;
    return out;
  }
};

// ---------------------------------------------------------------------------
// Lexicon and G2P

using Lexicon = std::map<std::string, std::vector<int>>;

inline std::string UpperCase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

/// CMU-dictionary style lexicon: "WORD<TAB>PH PH ..." per line. Stress digits
/// are stripped; alternate pronunciations "WORD(2)" are ignored.
inline Lexicon ParseLexicon(std::istream& in, const std::string& source) {
  const auto& vocab = PhonemeVocabulary::Get();
  Lexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind(";;;", 0) == 0) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    if (word.empty()) continue;
    if (word.back() == ')' && word.find('(') != std::string::npos) continue;
    std::vector<int> pron;
    std::string ph;
    while (fields >> ph) {
      try {
        pron.push_back(vocab.Id(ph));
      } catch (const LookupError& e) {
        throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    ACCENTFUSE_REQUIRE(!pron.empty(), ParseError, source + ":" + std::to_string(lineno) + ": empty pronunciation");
    lex.emplace(UpperCase(word), std::move(pron));
  }
  return lex;
}

inline Lexicon LoadLexicon(const std::string& path) {
  std::ifstream in(path);
  ACCENTFUSE_REQUIRE(in.good(), IoError, "cannot open lexicon: " + path);
  return ParseLexicon(in, path);
}

/// Small built-in lexicon covering all 39 phonemes; used by the synthetic
/// corpus generator.
inline const Lexicon& BuiltinLexicon() {
  static const Lexicon lex = [] {
    std::istringstream in(
        "APPLE\tAE P AH L\nBANANA\tB AH N AE N AH\nORANGE\tAO R AH N JH\nWATER\tW AO T ER\n"
        "THE\tDH AH\nTHINK\tTH IH NG K\nBOOK\tB UH K\nFOOD\tF UW D\nHOUSE\tHH AW S\nMY\tM AY\n"
        "BOY\tB OY\nTOY\tT OY\nMEASURE\tM EH ZH ER\nVISION\tV IH ZH AH N\nCHAIR\tCH EH R\n"
        "JUDGE\tJH AH JH\nYES\tY EH S\nSHIP\tSH IH P\nSHEEP\tSH IY P\nGOOD\tG UH D\nCAT\tK AE T\n"
        "DOG\tD AO G\nFATHER\tF AA DH ER\nCAR\tK AA R\nTODAY\tT AH D EY\nDAY\tD EY\nPLAY\tP L EY\n"
        "GO\tG OW\nHOME\tHH OW M\nZOO\tZ UW\nBIRD\tB ER D\nSING\tS IH NG\nRING\tR IH NG\n"
        "VERY\tV EH R IY\nWHAT\tW AH T\nLOOK\tL UH K\nNOW\tN AW\nNINE\tN AY N\nTHREE\tTH R IY\n"
        "MOTHER\tM AH DH ER\nPEOPLE\tP IY P AH L\nYELLOW\tY EH L OW\nGARAGE\tG ER AA ZH\n"
        "PLEASURE\tP L EH ZH ER\nJUICE\tJH UW S\nKITCHEN\tK IH CH AH N\nTEACHER\tT IY CH ER\n"
        "HELLO\tHH AH L OW\nWORLD\tW ER L D\nVOICE\tV OY S\nNOISE\tN OY Z\nTHANK\tTH AE NG K\n"
        "OFTEN\tAO F AH N\nHOT\tHH AA T\nRED\tR EH D\nBLUE\tB L UW\nGREEN\tG R IY N\n");
    return ParseLexicon(in, "<builtin>");
  }();
  return lex;
}

/// Per-letter fallback pronunciation for out-of-vocabulary words.
inline std::vector<int> LetterToPhonemes(char letter) {
  static const std::map<char, std::string> table = {
      {'A', "AE"}, {'B', "B"},  {'C', "K"},  {'D', "D"}, {'E', "EH"}, {'F', "F"},   {'G', "G"},
      {'H', "HH"}, {'I', "IH"}, {'J', "JH"}, {'K', "K"}, {'L', "L"},  {'M', "M"},   {'N', "N"},
      {'O', "AA"}, {'P', "P"},  {'Q', "K"},  {'R', "R"}, {'S', "S"},  {'T', "T"},   {'U', "AH"},
      {'V', "V"},  {'W', "W"},  {'X', "K S"}, {'Y', "Y"}, {'Z', "Z"}};
  auto it = table.find(static_cast<char>(std::toupper(static_cast<unsigned char>(letter))));
  if (it == table.end()) return {};
  return PhonemeVocabulary::Get().Ids(it->second);
}

/// Concatenates the pronunciations of `words`. Unknown words fall back to
/// letter-by-letter conversion unless `strict` is set.
inline std::vector<int> G2P(const std::vector<std::string>& words, const Lexicon& lexicon, bool strict = false) {
  std::vector<int> out;
  for (const auto& w : words) {
    auto it = lexicon.find(UpperCase(w));
    if (it != lexicon.end()) {
      out.insert(out.end(), it->second.begin(), it->second.end());
      continue;
    }
    ACCENTFUSE_REQUIRE(!strict, LookupError, "word not in lexicon: " + w);
    for (char c : w) {
      auto ph = LetterToPhonemes(c);
      out.insert(out.end(), ph.begin(), ph.end());
    }
  }
  return out;
}

inline std::vector<std::string> SplitWords(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestOptions {
  const Lexicon* lexicon = nullptr;          // used when a record has no "phonemes"
  bool strict_g2p = false;
  const LabelVocab* accent_vocab = nullptr;  // frozen vocabulary to map accents through
  const PhonemeHierarchy* hierarchy = nullptr;  // resolves "@group" labels
};

namespace detail {

inline std::string LabelString(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(where + ": label must be a string or integer");
}

}  // namespace detail

/// Parses line-delimited JSON records (utt_id, features_path, text, accent,
/// speaker, optional phonemes). A first line holding {"provenance": ...} is
/// kept as corpus metadata.
inline Corpus ParseManifest(std::istream& in, const std::string& source, const ManifestOptions& opts = {}) {
  Corpus corpus;
  if (opts.accent_vocab != nullptr) corpus.accents = *opts.accent_vocab;
  std::map<int, std::pair<int, int>> speaker_first_seen;  // speaker -> (accent, line)
  const PhonemeHierarchy default_hierarchy = PhonemeHierarchy::Default();
  const PhonemeHierarchy& hierarchy = opts.hierarchy ? *opts.hierarchy : default_hierarchy;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": malformed record: " + e.what());
    }
    if (!obj.is_object()) throw ParseError(where + ": record must be an object");
    if (obj.contains("provenance") && obj.size() == 1) {
      corpus.provenance = obj["provenance"];
      continue;
    }
    for (const char* key : {"utt_id", "features_path", "text", "accent", "speaker"})
      ACCENTFUSE_REQUIRE(obj.contains(key), ParseError, where + ": missing field '" + key + "'");
    UtteranceRecord r;
    try {
      r.utt_id = obj.at("utt_id").get<std::string>();
      r.features_path = obj.at("features_path").get<std::string>();
      r.transcript_words = SplitWords(obj.at("text").get<std::string>());
      if (obj.contains("phonemes")) {
        std::istringstream ph(obj.at("phonemes").get<std::string>());
        std::string tok;
        while (ph >> tok) r.transcript_phonemes.push_back(hierarchy.LabelId(tok));
      } else {
        ACCENTFUSE_REQUIRE(opts.lexicon != nullptr, ParseError, where + ": no phonemes and no lexicon for G2P");
        r.transcript_phonemes = G2P(r.transcript_words, *opts.lexicon, opts.strict_g2p);
      }
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const LookupError& e) {
      throw ParseError(where + ": " + e.what());
    }
    ACCENTFUSE_REQUIRE(!r.transcript_phonemes.empty(), ParseError, where + ": empty phoneme transcript");
    try {
      r.accent = corpus.accents.Intern(detail::LabelString(obj.at("accent"), where));
    } catch (const LookupError& e) {
      throw ParseError(where + ": " + e.what());
    }
    r.speaker = corpus.speakers.Intern(detail::LabelString(obj.at("speaker"), where));
    auto [it, inserted] = speaker_first_seen.emplace(r.speaker, std::make_pair(r.accent, lineno));
    if (!inserted && it->second.first != r.accent)
      throw ConsistencyError(where + ": speaker '" + corpus.speakers.Label(r.speaker) + "' has accent '" +
                             corpus.accents.Label(r.accent) + "' but line " + std::to_string(it->second.second) +
                             " gave accent '" + corpus.accents.Label(it->second.first) + "'");
    corpus.records.push_back(std::move(r));
  }
  // Known AESRC labels are reported in the challenge's column order.
  if (opts.accent_vocab == nullptr && corpus.n_accents() > 0) {
    const auto& order = AesrcAccentOrder();
    const bool all_known = std::all_of(corpus.accents.labels().begin(), corpus.accents.labels().end(),
                                       [&](const std::string& l) { return std::count(order.begin(), order.end(), l); });
    if (all_known) {
      std::vector<std::string> sorted;
      for (const auto& l : order)
        if (std::count(corpus.accents.labels().begin(), corpus.accents.labels().end(), l)) sorted.push_back(l);
      LabelVocab reordered = LabelVocab::FromLabels(sorted);
      for (auto& r : corpus.records) r.accent = reordered.Id(corpus.accents.Label(r.accent));
      corpus.accents = reordered;
    }
  }
  corpus.accents.Freeze();
  corpus.speakers.Freeze();
  return corpus;
}

inline Corpus LoadManifest(const std::string& path, const ManifestOptions& opts = {}) {
  std::ifstream in(path);
  ACCENTFUSE_REQUIRE(in.good(), IoError, "cannot open manifest: " + path);
  return ParseManifest(in, path, opts);
}

inline json RecordToJson(const Corpus& corpus, const UtteranceRecord& r,
                         const PhonemeHierarchy* hierarchy = nullptr) {
  std::string text, phonemes;
  for (size_t i = 0; i < r.transcript_words.size(); ++i) text += (i ? " " : "") + r.transcript_words[i];
  const PhonemeHierarchy def = hierarchy ? *hierarchy : PhonemeHierarchy::Default();
  for (size_t i = 0; i < r.transcript_phonemes.size(); ++i)
    phonemes += (i ? " " : "") + def.LabelSymbol(r.transcript_phonemes[i]);
  json j;
  j["utt_id"] = r.utt_id;
  j["features_path"] = r.features_path;
  j["text"] = text;
  j["phonemes"] = phonemes;
  j["accent"] = corpus.accents.Label(r.accent);
  j["speaker"] = corpus.speakers.Label(r.speaker);
  return j;
}

inline void WriteManifest(const std::string& path, const Corpus& corpus, const PhonemeHierarchy* hierarchy = nullptr) {
  std::ofstream out(path);
  ACCENTFUSE_REQUIRE(out.good(), IoError, "cannot write manifest: " + path);
  if (!corpus.provenance.is_null()) out << json{{"provenance", corpus.provenance}}.dump() << "\n";
  for (const auto& r : corpus.records) out << RecordToJson(corpus, r, hierarchy).dump() << "\n";
}

// ---------------------------------------------------------------------------
// In-memory dataset and splits

/// Records plus their loaded feature matrices, index-aligned.
struct Dataset {
  Corpus corpus;
  std::vector<FeatureSequence> features;

  size_t size() const { return corpus.records.size(); }

  Dataset Subset(const std::vector<size_t>& indices) const {
    Dataset out;
    out.corpus.accents = corpus.accents;
    out.corpus.speakers = corpus.speakers;
    out.corpus.provenance = corpus.provenance;
    for (size_t i : indices) {
      out.corpus.records.push_back(corpus.records[i]);
      if (!features.empty()) out.features.push_back(features[i]);
    }
    return out;
  }
};

/// Loads every record's feature file; relative paths resolve against `base_dir`.
inline Dataset LoadDataset(const std::string& manifest_path, const ManifestOptions& opts = {}) {
  Dataset ds;
  ds.corpus = LoadManifest(manifest_path, opts);
  const auto base = std::filesystem::path(manifest_path).parent_path();
  for (const auto& r : ds.corpus.records) {
    std::filesystem::path p(r.features_path);
    if (p.is_relative()) p = base / p;
    ds.features.push_back(ReadFeatures(p.string()));
  }
  return ds;
}

struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> valid;
};

/// Holds out `val_speakers_per_accent` whole speakers of every accent.
inline SplitIndices SpeakerDisjointSplit(const Corpus& corpus, int val_speakers_per_accent, std::uint64_t seed) {
  std::map<int, std::vector<int>> speakers_by_accent;
  const auto sa = corpus.SpeakerAccents();
  for (int s = 0; s < static_cast<int>(sa.size()); ++s)
    if (sa[s] >= 0) speakers_by_accent[sa[s]].push_back(s);
  std::set<int> held_out;
  Rng rng(seed);
  for (auto& [accent, spk] : speakers_by_accent) {
    ACCENTFUSE_REQUIRE(static_cast<int>(spk.size()) > val_speakers_per_accent, SplitError,
                       "accent '" + corpus.accents.Label(accent) + "' has too few speakers for a speaker-disjoint split");
    for (int i = static_cast<int>(spk.size()) - 1; i > 0; --i) std::swap(spk[i], spk[UniformInt(rng, 0, i)]);
    for (int i = 0; i < val_speakers_per_accent; ++i) held_out.insert(spk[i]);
  }
  SplitIndices out;
  for (size_t i = 0; i < corpus.records.size(); ++i)
    (held_out.count(corpus.records[i].speaker) ? out.valid : out.train).push_back(i);
  return out;
}

/// Utterance-level split stratified per speaker: each speaker contributes
/// round(valid_fraction * n) (at least one) utterances to the validation side
/// and at least one to training.
inline SplitIndices UtteranceSplit(const Corpus& corpus, double valid_fraction, std::uint64_t seed) {
  std::map<int, std::vector<size_t>> by_speaker;
  for (size_t i = 0; i < corpus.records.size(); ++i) by_speaker[corpus.records[i].speaker].push_back(i);
  Rng rng(seed);
  SplitIndices out;
  for (auto& [spk, idx] : by_speaker) {
    ACCENTFUSE_REQUIRE(idx.size() >= 2, SplitError,
                       "speaker '" + corpus.speakers.Label(spk) + "' needs at least two utterances to appear in both splits");
    for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) std::swap(idx[i], idx[UniformInt(rng, 0, i)]);
    int n_val = static_cast<int>(std::lround(valid_fraction * static_cast<double>(idx.size())));
    n_val = std::clamp(n_val, 1, static_cast<int>(idx.size()) - 1);
    for (int i = 0; i < static_cast<int>(idx.size()); ++i) (i < n_val ? out.valid : out.train).push_back(idx[i]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  return out;
}

/// Fails unless every speaker of `corpus` appears on both sides of `split`.
inline void CheckSpeakersInBoth(const Corpus& corpus, const SplitIndices& split) {
  std::set<int> a, b;
  for (size_t i : split.train) a.insert(corpus.records[i].speaker);
  for (size_t i : split.valid) b.insert(corpus.records[i].speaker);
  std::set<int> present;
  for (const auto& r : corpus.records) present.insert(r.speaker);
  for (int s : present)
    ACCENTFUSE_REQUIRE(a.count(s) && b.count(s), SplitError,
                       "speaker '" + corpus.speakers.Label(s) + "' is missing from one side of the probe split");
}

}  // namespace accentfuse
