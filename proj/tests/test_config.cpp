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

#include "doctest.h"
#include "support/fixtures.hpp"

using namespace accentfuse;
using nlohmann::json;

TEST_CASE("run config defaults and seed derivation") {
  const RunConfig a = ParseRunConfig(json{{"seed", 5}});
  const RunConfig b = ParseRunConfig(json{{"seed", 6}});
  CHECK(a.seed == 5);
  CHECK(a.train.seed == DeriveSeed(5, "train"));
  CHECK(a.probe.seed == DeriveSeed(5, "probe"));
  CHECK(a.train.seed != b.train.seed);
  CHECK(a.train.seed != a.pretrain.seed);
  CHECK(a.train.lambda == 0.1);
  CHECK(a.train.lr == 1e-4);
  CHECK(a.probe.lr == 1e-4);
  const RunConfig pinned = ParseRunConfig(json{{"seed", 5}, {"train", {{"seed", 42}}}});
  CHECK(pinned.train.seed == 42);
  CHECK(pinned.pretrain.seed == a.pretrain.seed);
}

TEST_CASE("run config round-trips through json") {
  RunConfig c = ParseRunConfig(json{{"seed", 3}});
  c.train.regime = Regime::kHybrid;
  c.train.lambda = 0.3;
  c.model.hybrid = true;
  c.model.fusion.mode = FusionMode::kConcat;
  c.degradation.theta = 0.25;
  c.degradation.mode = DegradationMode::kRandom;
  c.synth.n_accents = 3;
  c.model = CompactModelConfig(3, 32);
  c.model.hybrid = true;
  const json doc = c;
  const RunConfig back = ParseRunConfig(doc);
  CHECK(json(back) == doc);
  CHECK(back.model.aggregation.d_accent == 3);
  CHECK(back.degradation.mode == DegradationMode::kRandom);
}

TEST_CASE("run config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(ParseRunConfig(json{{"sede", 1}}), ConfigError);
  CHECK_THROWS_AS(ParseRunConfig(json{{"train", {{"lamda", 0.1}}}}), ConfigError);
  CHECK_THROWS_AS(ParseRunConfig(json{{"train", {{"regime", "joint"}}}}), ConfigError);
  CHECK_THROWS_AS(ParseRunConfig(json{{"train", {{"lr", "fast"}}}}), ConfigError);
  CHECK_THROWS_AS(ParseRunConfig(json{{"degradation", {{"theta", 2.0}}}}), ConfigError);
  CHECK_THROWS_AS(ParseRunConfig(json{{"model", {{"acoustic", {{"d_emb", 0}}}}}}), ConfigError);
  const auto dir = fixtures::TempDir("config");
  fixtures::WriteFile(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(LoadRunConfig((dir / "bad.json").string()), ConfigError);
  CHECK_THROWS_AS(LoadRunConfig((dir / "absent.json").string()), IoError);
  fixtures::WriteFile(dir / "ok.json", R"({"seed": 9, "train": {"max_epochs": 2}})");
  const RunConfig ok = LoadRunConfig((dir / "ok.json").string());
  CHECK(ok.seed == 9);
  CHECK(ok.train.max_epochs == 2);
}

TEST_CASE("full-size preset dimensions") {
  const ModelConfig c = ModelConfig::FullScale();
  CHECK(c.acoustic.d_emb == 1024);
  CHECK(c.acoustic.input_dim == 40);
  CHECK(c.acoustic.n_labels == 40);
  CHECK(c.acoustic.n_blocks == 5);
  CHECK(c.acoustic.subblocks_per_block == 3);
  CHECK(c.aggregation.d_attn == 256);
  CHECK(c.aggregation.d_accent == 8);
  CHECK_NOTHROW(c.Validate());
}
