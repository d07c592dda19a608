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

#include "accentfuse/features.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace accentfuse;

namespace {

std::vector<std::int16_t> Tone(double hz, int n, double amp = 8000.0) {
  std::vector<std::int16_t> pcm(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pcm[i] = static_cast<std::int16_t>(std::lround(amp * std::sin(2 * M_PI * hz * i / 16000.0)));
  return pcm;
}

FeatureSequence Ramp(int T) {
  FeatureSequence f;
  f.values.resize(T, kFbankDim);
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < kFbankDim; ++d) f.values(t, d) = static_cast<float>(t * 100 + d);
  f.valid_length = T;
  return f;
}

}  // namespace

TEST_CASE("frame count") {
  CHECK(ExtractFbank(std::vector<std::int16_t>(400, 0)).frames() == 1);
  for (int n : {400, 559, 560, 16000, 16399})
    CHECK(ExtractFbank(std::vector<std::int16_t>(n, 1)).frames() == 1 + (n - 400) / 160);
}

TEST_CASE("too short or wrong rate") {
  CHECK_THROWS_AS(ExtractFbank({}), TooShortError);
  CHECK_THROWS_AS(ExtractFbank(std::vector<std::int16_t>(399, 0)), TooShortError);
  CHECK_THROWS_AS(ExtractFbank(std::vector<std::int16_t>(800, 0), 8000), FormatError);
}

TEST_CASE("silence gives the log floor everywhere") {
  const auto f = ExtractFbank(std::vector<std::int16_t>(1600, 0));
  CHECK(f.values.cols() == kFbankDim);
  CHECK((f.values.array() == static_cast<float>(std::log(1e-10))).all());
}

TEST_CASE("440 Hz tone peaks in the filter whose center is nearest 440 Hz") {
  const auto centers = oracle::MelCenters(kFbankDim, 20.0, 7600.0);
  int nearest = 0;
  for (int b = 1; b < kFbankDim; ++b)
    if (std::abs(centers[b] - 440.0) < std::abs(centers[nearest] - 440.0)) nearest = b;
  const auto f = ExtractFbank(Tone(440.0, 16000));
  CHECK(f.frames() == 98);
  for (int t = 0; t < f.frames(); ++t) {
    Eigen::Index arg;
    f.values.row(t).maxCoeff(&arg);
    CHECK(arg == nearest);
  }
}

TEST_CASE("extraction is deterministic and finite") {
  const auto pcm = Tone(1234.5, 4000);
  const auto a = ExtractFbank(pcm), b = ExtractFbank(pcm);
  CHECK(a.values == b.values);
  CHECK(a.values.allFinite());
}

TEST_CASE("wav and feature containers round-trip") {
  const auto dir = fixtures::TempDir("features");
  const auto pcm = Tone(300.0, 2000);
  WriteWav((dir / "a.wav").string(), pcm);
  const auto wav = ReadWav((dir / "a.wav").string());
  CHECK(wav.sample_rate == 16000);
  CHECK(wav.samples == pcm);

  auto f = ExtractFbank(pcm);
  f.utt_id = "utt-7";
  WriteFeatures((dir / "a.fbk").string(), f);
  const auto g = ReadFeatures((dir / "a.fbk").string());
  CHECK(g.utt_id == "utt-7");
  CHECK(g.valid_length == f.valid_length);
  CHECK(g.values == f.values);
  fixtures::WriteFile(dir / "bad.fbk", "nope");
  CHECK_THROWS_AS(ReadFeatures((dir / "bad.fbk").string()), FormatError);
}

TEST_CASE("spec augment with zero widths is the identity") {
  const auto x = Ramp(30);
  SpecAugPolicy p{2, 0, 2, 0, 5};
  CHECK(SpecAugment(x, p).values == x.values);
}

TEST_CASE("one full-width time mask replaces at most one contiguous band") {
  const auto x = Ramp(25);
  const float mean = x.values.mean();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SpecAugPolicy p{0, 0, 1, 25, seed};
    const auto y = SpecAugment(x, p);
    CHECK(y.values.rows() == x.values.rows());
    CHECK(y.values.cols() == x.values.cols());
    CHECK(y.valid_length == x.valid_length);
    std::vector<int> masked;
    for (int t = 0; t < 25; ++t)
      if (y.values.row(t) != x.values.row(t)) {
        CHECK((y.values.row(t).array() == mean).all());
        masked.push_back(t);
      }
    if (!masked.empty()) CHECK(masked.back() - masked.front() + 1 == static_cast<int>(masked.size()));
  }
}

TEST_CASE("spec augment is deterministic in its seed and keeps the shape") {
  const auto x = Ramp(40);
  SpecAugPolicy p;
  p.seed = 17;
  const auto a = SpecAugment(x, p), b = SpecAugment(x, p);
  CHECK(a.values == b.values);
  CHECK(a.values.rows() == 40);
  CHECK(a.values.cols() == kFbankDim);
}
