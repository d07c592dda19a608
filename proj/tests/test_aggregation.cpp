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

#include <cmath>

#include "doctest.h"

#include "accentfuse/aggregation.hpp"
#include "support/convert.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace accentfuse;

namespace {

ParameterStore<double> AttentionStore(int d, std::uint64_t seed) {
  ParameterStore<double> store;
  Rng rng(seed);
  AddSelfAttention(store, "mha", d, rng);
  return store;
}

AggregationConfig TinyAggregation(bool positional) {
  AggregationConfig c;
  c.d_in = 6;
  c.d_attn = 4;
  c.d_ff = 8;
  c.heads = 2;
  c.n_layers = 2;
  c.d_accent = 3;
  c.positional_encoding = positional;
  return c;
}

MatD Permute(const MatD& x, const std::vector<int>& perm) {
  MatD y(x.rows(), x.cols());
  for (size_t i = 0; i < perm.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
  return y;
}

}  // namespace

TEST_CASE("multi-head attention matches the scalar transcription") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto store = AttentionStore(4, seed);
    const MatD x = fixtures::RandomMat(3, 4, seed + 40);
    const MatD got = MultiHeadSelfAttention<double>(store, "mha", x, 2, 3);
    const MatD want = convert::FromNested(
        oracle::SelfAttention(convert::ToNested(x), convert::AttentionFromStore(store, "mha"), 2));
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("a single frame attends only to itself") {
  auto store = AttentionStore(4, 5);
  const MatD x = fixtures::RandomMat(1, 4, 6);
  const MatD v = (x * store.Get("mha/v/w").value) + store.Get("mha/v/b").value;
  const MatD want = v * store.Get("mha/o/w").value + store.Get("mha/o/b").value;
  CHECK(MultiHeadSelfAttention<double>(store, "mha", x, 2, 1).isApprox(want, 1e-12));
}

TEST_CASE("attention rows sum to one over valid keys") {
  auto store = AttentionStore(8, 2);
  AttentionCapture<double> cap;
  MultiHeadSelfAttention<double>(store, "mha", fixtures::RandomMat(6, 8, 3, 4.0), 4, 4, &cap);
  REQUIRE(cap.weights.size() == 4);
  for (const auto& w : cap.weights) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) CHECK(std::abs(w.row(i).sum() - 1.0) < 1e-6);
    CHECK(w.rightCols(2).isZero(0));
  }
  CHECK_THROWS_AS(MultiHeadSelfAttention<double>(store, "mha", fixtures::RandomMat(3, 8, 3), 4, 0), ContractError);
}

TEST_CASE("statistic pooling") {
  MatD c(3, 2);
  c << 1.5, -2, 1.5, -2, 1.5, -2;
  RowVec<double> want(4);
  want << 1.5, -2, std::sqrt(1e-5), std::sqrt(1e-5);
  CHECK(StatisticPool(c, 3).isApprox(want, 1e-12));
  CHECK(StatisticPool(c, 1).isApprox(want, 1e-12));
  MatD two(2, 1);
  two << 0, 2;
  const auto p = StatisticPool(two, 2);
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(p(1) == doctest::Approx(std::sqrt(1.0 + 1e-5)));
  MatD padded(3, 1);
  padded << 0, 2, 1000;
  CHECK(StatisticPool(padded, 2).isApprox(p));
  CHECK_THROWS_AS(StatisticPool(two, 0), ContractError);
}

TEST_CASE("statistic pooling is frame-permutation invariant") {
  const MatD x = fixtures::RandomMat(6, 5, 1);
  CHECK(StatisticPool(x, 6).isApprox(StatisticPool(Permute(x, {5, 3, 1, 0, 2, 4}), 6), 1e-12));
}

TEST_CASE("padded frames do not change the prediction") {
  AggregationModel<double> agg(TinyAggregation(true), "agg/");
  ParameterStore<double> store;
  Rng rng(3);
  agg.Init(store, rng);
  MatD a = fixtures::RandomMat(7, 6, 1);
  MatD b = a;
  b.bottomRows(3) = fixtures::RandomMat(3, 6, 99, 10.0);
  const auto pa = agg.Predict(store, a, 4), pb = agg.Predict(store, b, 4);
  CHECK(pa.logits == pb.logits);
  CHECK(pa.pooled.size() == 4);
  CHECK(pa.logits.size() == 3);
  CHECK(pa.predicted == ArgMax(pa.logits));
}

TEST_CASE("aggregate permutation behaviour with and without positional encoding") {
  const MatD x = fixtures::RandomMat(5, 6, 2);
  const MatD y = Permute(x, {4, 2, 0, 1, 3});
  for (bool pe : {false, true}) {
    AggregationModel<double> agg(TinyAggregation(pe), "agg/");
    ParameterStore<double> store;
    Rng rng(8);
    agg.Init(store, rng);
    const auto a = agg.Predict(store, x, 5), b = agg.Predict(store, y, 5);
    if (pe)
      CHECK_FALSE(a.logits.isApprox(b.logits, 1e-4f));
    else
      CHECK(a.logits.isApprox(b.logits, 1e-4f));
  }
}

TEST_CASE("argmax is invariant to shifts and positive rescaling, ties go low") {
  RowVec<float> z(5);
  z << 0.1f, 2.0f, -1.0f, 2.0f, 1.9f;
  CHECK(ArgMax(z) == 1);
  CHECK(ArgMax(RowVec<float>(z.array() + 7.0f)) == 1);
  CHECK(ArgMax(RowVec<float>(z * 0.25f)) == 1);
}

TEST_CASE("aggregation config validation") {
  AggregationConfig c;
  c.heads = 3;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = AggregationConfig{};
  c.d_accent = 0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json({{"depth", 2}}).get<AggregationConfig>(), ConfigError);
}
