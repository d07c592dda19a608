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

#include <chrono>

#include "doctest.h"
#include "support/suites.hpp"

TEST_CASE("analytic gradients match central differences") {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& c : suites::GradientSuite()) {
    CAPTURE(c.name);
    CAPTURE(c.worst_tensor);
    CHECK(c.max_rel_err < 1e-4);
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 60.0);
}

TEST_CASE("gradient check detects a wrong gradient") {
  using namespace accentfuse;
  ParameterStore<double> store;
  store.Add("input/x", 2, 3).value = fixtures::RandomMat(2, 3, 1);
  // Detach the value path from the tape so the analytic gradient is zero.
  auto fn = [](Graph<double>& g, ParameterStore<double>& s) {
    Var x = g.Param(s.Get("input/x"));
    Var c = g.Constant(g.value(x));
    return CrossEntropyLoss(g, Add(g, Scale(g, x, 0.0), c), {0, 1});
  };
  CHECK(gradcheck::MaxError(gradcheck::Check(store, fn)) > 0.5);
}

TEST_CASE("ctc loss equals the exhaustive path sum") {
  const auto start = std::chrono::steady_clock::now();
  const auto r = suites::CompareCtcWithPathSum(200, 7);
  CHECK(r.instances == 200);
  CHECK(r.max_rel_err < 1e-6);
  CHECK(r.infeasible_raised == r.infeasible_expected);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 10.0);
}

TEST_CASE("full-size shape chain") {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& c : suites::FullScaleShapeChain({1, 2, 10, 11, 257})) {
    CAPTURE(c.t_in);
    CAPTURE(c.detail);
    CHECK(c.ok);
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 30.0);
}
