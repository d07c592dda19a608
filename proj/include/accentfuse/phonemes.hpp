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

#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "accentfuse/common.hpp"

namespace accentfuse {

inline constexpr int kNumPhonemes = 39;
inline constexpr int kPhonemeClasses = kNumPhonemes + 1;  // with blank

/// The 39 ARPAbet phonemes (stress removed) plus the CTC blank at index 0.
class PhonemeVocabulary {
 public:
  static const PhonemeVocabulary& Get() {
    static const PhonemeVocabulary vocab;
    return vocab;
  }

  const std::vector<std::string>& symbols() const { return symbols_; }
  int size() const { return static_cast<int>(symbols_.size()); }

  const std::string& Symbol(int id) const {
    ACCENTFUSE_REQUIRE(id >= 0 && id < size(), LookupError, "phoneme id out of range: " + std::to_string(id));
    return symbols_[id];
  }

  /// Accepts stress-marked symbols ("AH0") and any letter case.
  int Id(std::string symbol) const {
    while (!symbol.empty() && std::isdigit(static_cast<unsigned char>(symbol.back()))) symbol.pop_back();
    for (auto& ch : symbol) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    auto it = index_.find(symbol);
    ACCENTFUSE_REQUIRE(it != index_.end(), LookupError, "unknown phoneme: " + symbol);
    return it->second;
  }

  bool Contains(std::string symbol) const {
    try {
      Id(std::move(symbol));
      return true;
    } catch (const LookupError&) {
      return false;
    }
  }

  std::vector<int> Ids(const std::string& space_separated) const {
    std::vector<int> out;
    std::istringstream in(space_separated);
    std::string tok;
    while (in >> tok) out.push_back(Id(tok));
    return out;
  }

  std::string Join(const std::vector<int>& ids) const {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ' ';
      out += Symbol(ids[i]);
    }
    return out;
  }

 private:
  PhonemeVocabulary() {
    symbols_ = {"<BLANK>", "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",
                "F",       "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY", "P",
                "R",       "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};
    for (int i = 0; i < static_cast<int>(symbols_.size()); ++i) index_[symbols_[i]] = i;
  }

  std::vector<std::string> symbols_;
  std::map<std::string, int> index_;
};

/// One-level grouping of phonemes into articulatory classes. Group g gets
/// the label id kPhonemeClasses + g, so degraded transcripts live in an
/// alphabet of 40 + n_groups symbols.
class PhonemeHierarchy {
 public:
  /// Standard English taxonomy: vowels split into monophthongs and
  /// diphthongs, consonants into stops, affricates, fricatives, nasals,
  /// liquids and semivowels.
  static PhonemeHierarchy Default() {
    static const char* kTable =
        "AA\tmonophthong\nAE\tmonophthong\nAH\tmonophthong\nAO\tmonophthong\nEH\tmonophthong\n"
        "ER\tmonophthong\nIH\tmonophthong\nIY\tmonophthong\nUH\tmonophthong\nUW\tmonophthong\n"
        "AW\tdiphthong\nAY\tdiphthong\nEY\tdiphthong\nOW\tdiphthong\nOY\tdiphthong\n"
        "B\tstop\nD\tstop\nG\tstop\nK\tstop\nP\tstop\nT\tstop\n"
        "CH\taffricate\nJH\taffricate\n"
        "DH\tfricative\nF\tfricative\nHH\tfricative\nS\tfricative\nSH\tfricative\nTH\tfricative\n"
        "V\tfricative\nZ\tfricative\nZH\tfricative\n"
        "M\tnasal\nN\tnasal\nNG\tnasal\n"
        "L\tliquid\nR\tliquid\n"
        "W\tsemivowel\nY\tsemivowel\n";
    std::istringstream in(kTable);
    return Parse(in, "<builtin>");
  }

  /// "PHONEME TAB GROUP" per line; blank lines and '#' comments ignored.
  static PhonemeHierarchy Parse(std::istream& in, const std::string& source) {
    const auto& vocab = PhonemeVocabulary::Get();
    PhonemeHierarchy h;
    h.group_of_.assign(kPhonemeClasses, -1);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream fields(line);
      std::string ph, group;
      if (!(fields >> ph >> group))
        throw ParseError(source + ":" + std::to_string(lineno) + ": expected PHONEME<TAB>GROUP");
      int id;
      try {
        id = vocab.Id(ph);
      } catch (const LookupError& e) {
        throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what());
      }
      ACCENTFUSE_REQUIRE(id != kBlank, ParseError, source + ": blank cannot be grouped");
      ACCENTFUSE_REQUIRE(h.group_of_[id] < 0, ParseError,
                         source + ":" + std::to_string(lineno) + ": phoneme listed twice: " + ph);
      int gid = -1;
      for (size_t g = 0; g < h.names_.size(); ++g)
        if (h.names_[g] == group) gid = static_cast<int>(g);
      if (gid < 0) {
        gid = static_cast<int>(h.names_.size());
        h.names_.push_back(group);
      }
      h.group_of_[id] = gid;
    }
    for (int id = 1; id < kPhonemeClasses; ++id)
      ACCENTFUSE_REQUIRE(h.group_of_[id] >= 0, ParseError,
                         source + ": phoneme " + vocab.Symbol(id) + " has no group");
    return h;
  }

  static PhonemeHierarchy Load(const std::string& path) {
    std::ifstream in(path);
    ACCENTFUSE_REQUIRE(in.good(), IoError, "cannot open hierarchy file: " + path);
    return Parse(in, path);
  }

  int n_groups() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& group_names() const { return names_; }

  /// Group index (0-based) of a phoneme id.
  int GroupOf(int phoneme) const {
    ACCENTFUSE_REQUIRE(phoneme >= 1 && phoneme < kPhonemeClasses, LookupError,
                       "phoneme id out of range: " + std::to_string(phoneme));
    return group_of_[phoneme];
  }

  /// Label id of a phoneme's group in the extended alphabet; blank maps to
  /// itself.
  int GroupLabel(int phoneme) const {
    if (phoneme == kBlank) return kBlank;
    return kPhonemeClasses + GroupOf(phoneme);
  }

  int label_count() const { return kPhonemeClasses + n_groups(); }

  /// Symbol for any label in the extended alphabet.
  std::string LabelSymbol(int label) const {
    if (label < kPhonemeClasses) return PhonemeVocabulary::Get().Symbol(label);
    const int g = label - kPhonemeClasses;
    ACCENTFUSE_REQUIRE(g < n_groups(), LookupError, "label out of range: " + std::to_string(label));
    return "@" + names_[g];
  }

  int LabelId(const std::string& symbol) const {
    if (!symbol.empty() && symbol[0] == '@') {
      for (int g = 0; g < n_groups(); ++g)
        if ("@" + names_[g] == symbol) return kPhonemeClasses + g;
      throw LookupError("unknown group label: " + symbol);
    }
    return PhonemeVocabulary::Get().Id(symbol);
  }

  std::string ToText() const {
    std::string out;
    const auto& vocab = PhonemeVocabulary::Get();
    for (int id = 1; id < kPhonemeClasses; ++id) out += vocab.Symbol(id) + "\t" + names_[group_of_[id]] + "\n";
    return out;
  }

 private:
  std::vector<int> group_of_;
  std::vector<std::string> names_;
};

}  // namespace accentfuse
