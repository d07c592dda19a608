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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "accentfuse/probes.hpp"
#include "support/fixtures.hpp"

using namespace accentfuse;

namespace {

std::vector<std::string> Split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  return out;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("speaker probe on a corpus without speaker signal stays at chance") {
  auto spec = fixtures::SmallSpec(2, 4, 20, 3);
  spec.accent_shift_table.clear();
  spec.timbre_std = 0;
  spec.noise_std = 0;
  const Dataset ds = GenerateSyntheticCorpus(spec).dataset;
  AccentModel<float> model(fixtures::SmallModel(2));
  model.Init(4);
  const auto checksum = model.params().Checksum();
  ProbeConfig cfg;
  cfg.epochs = 10;
  const auto r = SpeakerProbe(model, ds, cfg);
  CHECK(r.n_classes == 8);
  CHECK(r.final_accuracy < 0.35);
  CHECK(model.params().Checksum() == checksum);
  CHECK(r.accuracy_curve.size() == 10);
  for (size_t i = 1; i < r.loss_curve.size(); ++i) CHECK(r.loss_curve[i].first > r.loss_curve[i - 1].first);
  for (const auto& [_, a] : r.accuracy_curve) CHECK((a >= 0.0 && a <= 1.0));
}

TEST_CASE("speaker probe picks up strong speaker timbre") {
  auto spec = fixtures::SmallSpec(2, 3, 20, 5);
  spec.timbre_std = 3.0;
  const Dataset ds = GenerateSyntheticCorpus(spec).dataset;
  AccentModel<float> model(fixtures::SmallModel(2));
  model.Init(6);
  ProbeConfig cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 30;
  CHECK(SpeakerProbe(model, ds, cfg).final_accuracy > 0.5);
}

TEST_CASE("speaker probe needs every speaker on both sides") {
  const Dataset ds = GenerateSyntheticCorpus(fixtures::SmallSpec(2, 2, 5, 6)).dataset;
  std::vector<size_t> keep;
  for (size_t i = 0; i < ds.size(); ++i)
    if (ds.corpus.records[i].speaker != 0 || keep.empty()) keep.push_back(i);
  AccentModel<float> model(fixtures::SmallModel(2));
  model.Init(1);
  CHECK_THROWS_AS(SpeakerProbe(model, ds.Subset(keep), ProbeConfig{}), SplitError);
}

TEST_CASE("attention ratio needs a concat_ca hybrid model") {
  const Dataset ds = GenerateSyntheticCorpus(fixtures::SmallSpec(2, 2, 3, 7)).dataset;
  AccentModel<float> plain(fixtures::SmallModel(2));
  plain.Init(1);
  CHECK_THROWS_AS(AttentionRatio(plain, ds, AllIndices(ds)), ContractError);
  ModelConfig add = fixtures::SmallModel(2, true);
  add.fusion.mode = FusionMode::kAdd;
  AccentModel<float> adder(add);
  adder.Init(1);
  CHECK_THROWS_AS(AttentionRatio(adder, ds, AllIndices(ds)), ContractError);
}

TEST_CASE("attention ratio does not depend on utterance order") {
  const Dataset ds = GenerateSyntheticCorpus(fixtures::SmallSpec(2, 2, 6, 8)).dataset;
  AccentModel<double> model(fixtures::SmallModel(2, true));
  model.Init(2);
  for (auto* p : model.params().WithPrefix(kFusionPrefix)) p->value = fixtures::RandomMat(
      static_cast<int>(p->value.rows()), static_cast<int>(p->value.cols()), std::hash<std::string>{}(p->name), 0.5);
  auto idx = AllIndices(ds);
  const auto forward = AttentionRatio(model, ds, idx, 5);
  std::reverse(idx.begin(), idx.end());
  const auto backward = AttentionRatio(model, ds, idx, 3);
  CHECK(forward.n_utterances == static_cast<int>(ds.size()));
  CHECK(forward.rho == doctest::Approx(backward.rho).epsilon(1e-12));
  CHECK(forward.rho != doctest::Approx(1.0).epsilon(1e-6));
  CHECK(forward.rho == doctest::Approx(ReferenceAttentionRatio(forward.ca)).epsilon(1e-15));
  for (Eigen::Index c = 0; c < forward.ca.size(); ++c) CHECK((forward.ca[c] > 0.0 && forward.ca[c] < 1.0));

  std::ostringstream out;
  WriteAttentionReport(out, forward);
  const auto lines = Lines(out.str());
  REQUIRE(lines.size() == 2);
  const auto header = Split(lines[0], ',');
  REQUIRE(header.size() == 2 * 16 + 1);
  CHECK(header.front() == "c0");
  CHECK(header[31] == "c31");
  CHECK(header.back() == "rho");
  CHECK(std::stod(Split(lines[1], ',').back()) == doctest::Approx(forward.rho).epsilon(1e-8));
}

TEST_CASE("embedding export writes one finite row per utterance, reproducibly") {
  const Dataset ds = GenerateSyntheticCorpus(fixtures::SmallSpec(2, 2, 4, 9)).dataset;
  AccentModel<float> model(fixtures::SmallModel(2));
  model.Init(3);
  std::ostringstream a, b;
  ExportEmbeddings(model, ds, a);
  ExportEmbeddings(model, ds, b);
  CHECK(a.str() == b.str());
  const auto lines = Lines(a.str());
  REQUIRE(lines.size() == ds.size() + 1);
  const auto header = Split(lines[0], ',');
  CHECK(header.size() == 3 + 16);
  CHECK(header[0] == "utt_id");
  CHECK(header[3] == "e0");
  CHECK(header.back() == "e15");
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto f = Split(lines[i], ',');
    REQUIRE(f.size() == header.size());
    CHECK(f[0] == ds.corpus.records[i - 1].utt_id);
    for (size_t c = 3; c < f.size(); ++c) CHECK(std::isfinite(std::stod(f[c])));
  }
  Dataset empty;
  std::ostringstream none;
  ExportEmbeddings(model, empty, none);
  CHECK(Lines(none.str()).size() == 1);
}

TEST_CASE("an accent classifier trained on a dumped embedding beats chance") {
  const Dataset ds = GenerateSyntheticCorpus(fixtures::SmallSpec(2, 4, 20, 10)).dataset;
  AccentModel<float> model(fixtures::SmallModel(2));
  model.Init(5);
  TrainConfig tc;
  tc.lr = 3e-3;
  tc.batch_size = 8;
  tc.max_epochs = 3;
  TrainAccentModel(model, ds, Dataset{}, tc);
  std::ostringstream dump;
  ExportEmbeddings(model, ds, dump);

  // Rebuild features and labels from the text dump alone.
  const auto lines = Lines(dump.str());
  MatF x(static_cast<Eigen::Index>(lines.size() - 1), 16);
  std::vector<int> y;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto f = Split(lines[i], ',');
    y.push_back(ds.corpus.accents.Id(f[1]));
    for (int c = 0; c < 16; ++c) x(static_cast<Eigen::Index>(i - 1), c) = std::stof(f[3 + c]);
  }
  const auto split = UtteranceSplit(ds.corpus, 0.25, 2);
  auto rows = [&](const std::vector<size_t>& idx, std::vector<int>& labels) {
    MatF m(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (size_t i = 0; i < idx.size(); ++i) {
      m.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
      labels.push_back(y[idx[i]]);
    }
    return m;
  };
  std::vector<int> ty, vy;
  const MatF tx = rows(split.train, ty), vx = rows(split.valid, vy);
  ProbeConfig pc;
  pc.lr = 1e-2;
  pc.epochs = 40;
  CHECK(TrainLinearProbe(tx, ty, vx, vy, 2, pc).final_accuracy > 0.7);
}

TEST_CASE("probe curves are written as two CSV files") {
  ProbeResult r;
  r.loss_curve = {{1, 2.5}, {2, 2.25}};
  r.accuracy_curve = {{1, 0.5}};
  std::ostringstream loss, acc;
  WriteProbeCurves(loss, acc, r);
  CHECK(loss.str() == "step,ce\n1,2.5\n2,2.25\n");
  CHECK(acc.str() == "epoch,accuracy\n1,0.5\n");
  CHECK_THROWS_AS(TrainLinearProbe(MatF(2, 3), {0}, MatF(1, 3), {0}, 2, ProbeConfig{}), ContractError);
}
