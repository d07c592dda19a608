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

// Small builders shared by the test binaries.

#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "accentfuse/config.hpp"

namespace fixtures {

using namespace accentfuse;

template <typename S = double>
Mat<S> RandomMat(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Mat<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = S(scale * Normal(rng));
  return m;
}

/// Acoustic model small enough for exhaustive finite differences.
inline AcousticConfig TinyAcoustic(int input_dim = 3, int d_emb = 4, int n_labels = 5) {
  AcousticConfig c;
  c.input_dim = input_dim;
  c.prologue_channels = 4;
  c.prologue_kernel = 3;
  c.n_blocks = 2;
  c.subblocks_per_block = 2;
  c.block_channels = {4, 3};
  c.block_kernels = {3, 1};
  c.d_emb = d_emb;
  c.n_labels = n_labels;
  c.dropout = 0.0;
  return c;
}

/// Full model on 40-dim features with narrow layers.
inline ModelConfig SmallModel(int n_accents, bool hybrid = false, int width = 16) {
  ModelConfig c = CompactModelConfig(n_accents, width);
  c.acoustic.prologue_kernel = 5;
  c.acoustic.block_kernels = {5, 5};
  c.aggregation.n_layers = 1;
  c.aggregation.heads = 2;
  c.fusion.squeeze_ratio = 4;
  c.hybrid = hybrid;
  c.SyncWidths();
  return c;
}

/// Randomizes BN affine terms and running statistics so eval-mode BN is not
/// the identity.
template <typename S>
void PerturbBatchNorm(ParameterStore<S>& store, std::uint64_t seed) {
  Rng rng(seed);
  for (auto* p : store.All()) {
    const auto& n = p->name;
    auto ends = [&n](const std::string& s) { return n.size() >= s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0; };
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      if (ends("/running_var") || ends("/gamma")) p->value.data()[i] = S(0.5 + Uniform01(rng));
      if (ends("/running_mean") || ends("/beta")) p->value.data()[i] = S(0.3 * Normal(rng));
    }
  }
}

inline SyntheticCorpusSpec SmallSpec(int n_accents, int speakers, int utts, std::uint64_t seed) {
  SyntheticCorpusSpec s;
  s.n_accents = n_accents;
  s.n_speakers_per_accent = speakers;
  s.n_utts_per_speaker = utts;
  s.accent_shift_table = RandomAccentTable(n_accents, 6, 1.0, DeriveSeed(seed, "table"));
  s.seed = seed;
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("accentfuse-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace fixtures
