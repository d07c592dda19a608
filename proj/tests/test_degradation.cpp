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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "accentfuse/degradation.hpp"
#include "support/fixtures.hpp"

using namespace accentfuse;

namespace {

std::vector<int> RandomTranscript(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> w(n);
  for (auto& p : w) p = UniformInt(rng, 1, kNumPhonemes);
  return w;
}

int Mapped(const std::vector<int>& out, const std::vector<int>& in) {
  int n = 0;
  for (size_t i = 0; i < in.size(); ++i) n += out[i] != in[i];
  return n;
}

const PhonemeHierarchy& H() {
  static const PhonemeHierarchy h = PhonemeHierarchy::Default();
  return h;
}

}  // namespace

TEST_CASE("theta zero is the identity and theta one maps every token") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto w = RandomTranscript(50, seed);
    CHECK(DegradeTranscript(w, H(), {0.0, DegradationMode::kHierarchy, seed}) == w);
    const auto all = DegradeTranscript(w, H(), {1.0, DegradationMode::kHierarchy, seed});
    REQUIRE(all.size() == w.size());
    for (size_t i = 0; i < w.size(); ++i) {
      CHECK(all[i] == H().GroupLabel(w[i]));
      CHECK(all[i] >= kPhonemeClasses);
    }
  }
}

TEST_CASE("theta one half maps half of the tokens") {
  const auto w = RandomTranscript(10000, 4);
  const auto out = DegradeTranscript(w, H(), {0.5, DegradationMode::kHierarchy, 17});
  const double rate = Mapped(out, w) / 10000.0;
  CHECK(rate > 0.48);
  CHECK(rate < 0.52);
}

TEST_CASE("coupled draws give monotone coverage") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto w = RandomTranscript(200, seed);
    const auto lo = DegradeTranscript(w, H(), {0.3, DegradationMode::kHierarchy, seed}, "utt");
    const auto hi = DegradeTranscript(w, H(), {0.7, DegradationMode::kHierarchy, seed}, "utt");
    for (size_t i = 0; i < w.size(); ++i)
      if (lo[i] != w[i]) CHECK(hi[i] == lo[i]);
    CHECK(Mapped(lo, w) <= Mapped(hi, w));
  }
}

TEST_CASE("degradation keeps the length and validates its input") {
  const auto w = RandomTranscript(37, 2);
  for (double t : {0.0, 0.2, 0.9})
    CHECK(DegradeTranscript(w, H(), {t, DegradationMode::kHierarchy, 3}).size() == w.size());
  CHECK(DegradeTranscript(w, H(), {0.0, DegradationMode::kRandom, 3}).size() == w.size());
  CHECK(DegradeTranscript({}, H(), {0.5, DegradationMode::kHierarchy, 3}).empty());
  CHECK_THROWS_AS(DegradeTranscript(w, H(), {1.5, DegradationMode::kHierarchy, 3}), ConfigError);
  CHECK_THROWS_AS(DegradeTranscript({0, 99}, H(), {0.5, DegradationMode::kHierarchy, 3}), LookupError);
  CHECK_THROWS_AS(ParseDegradationMode("swap"), ConfigError);
}

TEST_CASE("random transcripts are uniform over the phonemes") {
  std::vector<int> counts(kPhonemeClasses, 0);
  const std::vector<int> w(1000, 5);
  for (int u = 0; u < 100; ++u)
    for (int p : DegradeTranscript(w, H(), {0.0, DegradationMode::kRandom, 8}, std::to_string(u))) ++counts[p];
  CHECK(counts[0] == 0);
  const double expected = 1e5 / kNumPhonemes;
  double chi2 = 0;
  for (int p = 1; p < kPhonemeClasses; ++p) chi2 += (counts[p] - expected) * (counts[p] - expected) / expected;
  // Upper 1% point of chi-square with 38 degrees of freedom.
  CHECK(chi2 < 61.162);
}

TEST_CASE("group labels extend the label alphabet") {
  CHECK(H().n_groups() == 8);
  CHECK(H().label_count() == 48);
  CHECK(DegradedLabelCount(H(), {0.5, DegradationMode::kHierarchy, 1}) == 48);
  CHECK(DegradedLabelCount(H(), {0.0, DegradationMode::kRandom, 1}) == kPhonemeClasses);
  std::set<int> groups;
  for (int p = 1; p < kPhonemeClasses; ++p) groups.insert(H().GroupLabel(p));
  CHECK(groups.size() == 8);
  CHECK(*groups.begin() == kPhonemeClasses);
}

TEST_CASE("the shipped hierarchy file matches the built-in table") {
  const auto shipped = PhonemeHierarchy::Load(std::string(ACCENTFUSE_DATA_DIR) + "/hierarchy.tsv");
  CHECK(shipped.ToText() == H().ToText());
  std::istringstream missing("AA\tmonophthong\n");
  CHECK_THROWS_AS(PhonemeHierarchy::Parse(missing, "mem"), ParseError);
}

TEST_CASE("degraded manifests round-trip with their provenance") {
  const auto sc = GenerateSyntheticCorpus(fixtures::SmallSpec(2, 2, 3, 5));
  const DegradationConfig cfg{0.5, DegradationMode::kHierarchy, 21};
  const Corpus degraded = DegradeCorpus(sc.dataset.corpus, H(), cfg);
  const auto dir = fixtures::TempDir("degraded");
  const std::string path = (dir / "degraded.jsonl").string();
  WriteDegradedManifest(path, degraded, H());
  const std::string text = fixtures::ReadFile(path);
  CHECK(text.rfind("{\"provenance\"", 0) == 0);
  CHECK(text.find('@') != std::string::npos);
  ManifestOptions opts;
  opts.hierarchy = &H();
  const Corpus back = LoadManifest(path, opts);
  REQUIRE(back.records.size() == degraded.records.size());
  for (size_t i = 0; i < back.records.size(); ++i)
    CHECK(back.records[i].transcript_phonemes == degraded.records[i].transcript_phonemes);
  CHECK(back.provenance.at("degradation").get<DegradationConfig>().theta == 0.5);
  CHECK(back.provenance.at("degradation").at("mode") == "hierarchy");
  CHECK(LoadManifest(path).records[0].transcript_phonemes == degraded.records[0].transcript_phonemes);
}

TEST_CASE("the robustness suite fills an eight-row table and survives failing cells") {
  const auto sc = GenerateSyntheticCorpus(fixtures::SmallSpec(2, 2, 3, 6));
  const auto conditions = RobustnessConditions({0.0, 0.5, 1.0}, true, 4);
  REQUIRE(conditions.size() == 4);
  std::vector<int> label_counts;
  CellTrainer fake = [&](const Dataset& train, const Dataset&, Regime regime, int labels,
                         const TranscriptCondition& cond) {
    label_counts.push_back(labels);
    if (regime == Regime::kHybrid && cond.random()) throw NumericError("diverged, at step 3");
    EvalResult r;
    r.n = static_cast<int>(train.size());
    r.correct = r.n / 2;
    r.per_accent_total = {r.n / 2, r.n - r.n / 2};
    r.per_accent_correct = {r.n / 2, 0};
    return r;
  };
  const auto cells = RunRobustnessSuite(sc.dataset, sc.dataset, H(), conditions, {Regime::kMtl, Regime::kHybrid}, fake);
  REQUIRE(cells.size() == 8);
  CHECK(label_counts == std::vector<int>{48, 48, 48, 40, 48, 48, 48, 40});
  CHECK(cells[7].error.find("diverged") != std::string::npos);
  std::ostringstream table;
  WriteRobustnessTable(table, cells, {"accent-0", "accent-1"});
  std::vector<std::string> lines;
  std::istringstream in(table.str());
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  REQUIRE(lines.size() == 9);
  CHECK(lines[0] == "id,regime,transcription,accent-0,accent-1,Total,status");
  CHECK(lines[1] == "1,mtl,theta=0,100.0,0.0,50.0,ok");
  CHECK(lines[8].rfind("8,hybrid,random,,,,FAILED: diverged; at step 3", 0) == 0);
  CHECK_THROWS_AS(RunRobustnessSuite(sc.dataset, sc.dataset, H(), conditions, {Regime::kArOnly}, fake), ConfigError);
}
