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

#include "accentfuse/fusion.hpp"
#include "support/convert.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace accentfuse;

namespace {

struct FusionRun {
  MatD merged;
  std::optional<MatD> ca;
};

FusionRun Run(const FusionBlock<double>& block, ParameterStore<double>& store, const MatD& at, const MatD& ar,
              const Segments& segs) {
  Graph<double> g;
  auto out = block.Forward(g, store, g.Constant(at), g.Constant(ar), segs);
  FusionRun r{g.value(out.merged), std::nullopt};
  if (out.ca) r.ca = g.value(*out.ca);
  return r;
}

/// Store whose every fusion weight is small random noise.
ParameterStore<double> SmallWeights(const FusionBlock<double>& block, std::uint64_t seed) {
  ParameterStore<double> store;
  Rng rng(seed);
  block.Init(store, rng);
  Rng noise(seed + 1);
  for (auto* p : store.All())
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = 0.4 * Normal(noise);
  return store;
}

}  // namespace

TEST_CASE("concat_ca matches the scalar transcription on a 2x4 instance") {
  FusionBlock<double> block({FusionMode::kConcatCa, 4, 2}, "fusion/");
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    auto store = SmallWeights(block, seed);
    const MatD at = fixtures::RandomMat(2, 4, seed * 10), ar = fixtures::RandomMat(2, 4, seed * 10 + 1);
    const auto got = Run(block, store, at, ar, Segments({2}));
    const auto want = oracle::ConcatChannelAttention(convert::ToNested(at), convert::ToNested(ar),
                                                     convert::FusionFromStore(store, "fusion/"));
    CHECK((got.merged - convert::FromNested(want.merged)).cwiseAbs().maxCoeff() < 1e-6);
    REQUIRE(got.ca);
    for (int c = 0; c < 8; ++c) CHECK((*got.ca)(0, c) == doctest::Approx(want.ca[c]).epsilon(1e-9));
  }
}

TEST_CASE("channel attention lies strictly inside (0, 1)") {
  FusionBlock<double> block({FusionMode::kConcatCa, 8, 4}, "fusion/");
  ParameterStore<double> store;
  Rng rng(3);
  block.Init(store, rng);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = Run(block, store, fixtures::RandomMat(7, 8, seed, 5.0), fixtures::RandomMat(7, 8, seed + 99, 5.0),
                       Segments({3, 4}));
    REQUIRE(r.ca);
    CHECK(r.ca->rows() == 2);
    CHECK(r.ca->cols() == 16);
    CHECK((r.ca->array() > 0.0).all());
    CHECK((r.ca->array() < 1.0).all());
  }
}

TEST_CASE("freshly initialized channel attention starts near one half") {
  FusionBlock<double> block({FusionMode::kConcatCa, 16, 4}, "fusion/");
  ParameterStore<double> store;
  Rng rng(7);
  block.Init(store, rng);
  const auto r = Run(block, store, fixtures::RandomMat(5, 16, 1), fixtures::RandomMat(5, 16, 2), Segments({5}));
  CHECK((r.ca->array() - 0.5).abs().maxCoeff() < 0.05);
}

TEST_CASE("add and concat fusion") {
  const MatD at = fixtures::RandomMat(3, 4, 1), ar = fixtures::RandomMat(3, 4, 2);
  FusionBlock<double> add({FusionMode::kAdd, 4, 1}, "fusion/");
  auto s1 = SmallWeights(add, 4);
  add.SetIdentityProjections(s1);
  const auto r1 = Run(add, s1, at, ar, Segments({3}));
  CHECK(r1.merged.isApprox(at + ar));
  CHECK_FALSE(r1.ca);

  FusionBlock<double> cat({FusionMode::kConcat, 4, 1}, "fusion/");
  auto s2 = SmallWeights(cat, 5);
  cat.SetIdentityProjections(s2);
  const auto r2 = Run(cat, s2, at, ar, Segments({3}));
  MatD both(3, 8);
  both << at, ar;
  const MatD want = (both * s2.Get("fusion/conv/w").value).rowwise() + s2.Get("fusion/conv/b").value.row(0);
  CHECK(r2.merged.isApprox(want));
  CHECK_FALSE(r2.ca);
  CHECK_FALSE(s2.Has("fusion/squeeze/w"));
}

TEST_CASE("channel attention is frame-permutation invariant") {
  FusionBlock<double> block({FusionMode::kConcatCa, 4, 2}, "fusion/");
  auto store = SmallWeights(block, 9);
  const MatD at = fixtures::RandomMat(5, 4, 1), ar = fixtures::RandomMat(5, 4, 2);
  const std::vector<int> perm = {3, 0, 4, 2, 1};
  MatD pt(5, 4), pr(5, 4);
  for (int i = 0; i < 5; ++i) {
    pt.row(i) = at.row(perm[i]);
    pr.row(i) = ar.row(perm[i]);
  }
  const auto a = Run(block, store, at, ar, Segments({5}));
  const auto b = Run(block, store, pt, pr, Segments({5}));
  CHECK(a.ca->isApprox(*b.ca, 1e-12));
  for (int i = 0; i < 5; ++i) CHECK(b.merged.row(i).isApprox(a.merged.row(perm[i]), 1e-12));
}

TEST_CASE("reference attention ratio") {
  CHECK(ReferenceAttentionRatio(RowVec<double>::Constant(8, 0.5)) == 1.0);
  CHECK(ReferenceAttentionRatio(RowVec<float>::Constant(512, 0.5f)) == 1.0);
  RowVec<double> ca(4);
  ca << 0.2, 0.3, 0.6, 0.4;
  CHECK(ReferenceAttentionRatio(ca) == doctest::Approx(2.0));
  CHECK_THROWS_AS(ReferenceAttentionRatio(RowVec<double>::Constant(3, 0.5)), ContractError);
}

TEST_CASE("fusion contract checks") {
  CHECK_THROWS_AS((FusionConfig{FusionMode::kConcatCa, 4, 3}.Validate()), ConfigError);
  CHECK_THROWS_AS(ParseFusionMode("sum"), ConfigError);
  CHECK(ParseFusionMode(ToString(FusionMode::kConcatCa)) == FusionMode::kConcatCa);
  FusionBlock<double> block({FusionMode::kConcatCa, 4, 2}, "fusion/");
  auto store = SmallWeights(block, 1);
  CHECK_THROWS_AS(Run(block, store, fixtures::RandomMat(2, 4, 1), fixtures::RandomMat(3, 4, 1), Segments({2})),
                  ContractError);
  MatD bad = fixtures::RandomMat(2, 4, 1);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(Run(block, store, bad, fixtures::RandomMat(2, 4, 1), Segments({2})), NumericError);
}
