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

// Checkpoint container:
//   "AFCK" | u32 version | u32 n | config JSON (n bytes) | u32 tensor count |
//   per tensor: u32 name length | name | u32 is_buffer | u32 rows | u32 cols |
//               rows * cols little-endian float32, row-major

#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "json.hpp"

#include "accentfuse/autograd.hpp"

namespace accentfuse {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
  nlohmann::json config;
  ParameterStore<float> params;
};

template <typename S>
void SaveCheckpoint(const std::string& path, const ParameterStore<S>& store, const nlohmann::json& config) {
  std::ofstream out(path, std::ios::binary);
  ACCENTFUSE_REQUIRE(out.good(), IoError, "cannot write checkpoint: " + path);
  auto u32 = [&out](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  out.write("AFCK", 4);
  u32(kCheckpointVersion);
  const std::string cfg = config.dump();
  u32(static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  u32(static_cast<std::uint32_t>(store.size()));
  for (const auto* p : store.All()) {
    u32(static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    u32(p->is_buffer ? 1u : 0u);
    u32(static_cast<std::uint32_t>(p->value.rows()));
    u32(static_cast<std::uint32_t>(p->value.cols()));
    const MatF v = p->value.template cast<float>();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
  }
  ACCENTFUSE_REQUIRE(out.good(), IoError, "short write: " + path);
}

inline CheckpointData ReadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ACCENTFUSE_REQUIRE(in.good(), IoError, "cannot open checkpoint: " + path);
  auto u32 = [&in, &path]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    ACCENTFUSE_REQUIRE(in.good(), FormatError, path + ": truncated checkpoint");
    return v;
  };
  char magic[4];
  in.read(magic, 4);
  ACCENTFUSE_REQUIRE(in && std::string(magic, 4) == "AFCK", FormatError, path + ": not a checkpoint");
  const auto version = u32();
  ACCENTFUSE_REQUIRE(version == kCheckpointVersion, FormatError,
                     path + ": unsupported checkpoint version " + std::to_string(version));
  std::string cfg(u32(), '\0');
  in.read(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  CheckpointData data;
  try {
    data.config = nlohmann::json::parse(cfg);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": bad config echo: " + e.what());
  }
  const auto count = u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(u32(), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const bool is_buffer = u32() != 0;
    const auto rows = u32();
    const auto cols = u32();
    auto& p = data.params.Add(name, static_cast<int>(rows), static_cast<int>(cols), is_buffer);
    in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * 4));
    ACCENTFUSE_REQUIRE(in.good() || (in.eof() && in.gcount() == p.value.size() * 4), FormatError,
                       path + ": truncated tensor " + name);
  }
  return data;
}

/// Copies every tensor of `data` under `src_prefix` into `store` under
/// `dst_prefix`; every destination tensor with that prefix must be covered.
/// Tensors whose name (after the prefix) starts with `skip` are left alone
/// on both sides.
template <typename S>
void RestoreParameters(const CheckpointData& data, ParameterStore<S>& store, const std::string& src_prefix,
                       const std::string& dst_prefix, const std::string& skip = "") {
  auto skipped = [&skip](const std::string& rest) { return !skip.empty() && rest.rfind(skip, 0) == 0; };
  int expected = 0;
  for (const auto* p : store.All())
    expected += p->name.rfind(dst_prefix, 0) == 0 && !skipped(p->name.substr(dst_prefix.size()));
  int copied = 0;
  for (const auto* p : data.params.All()) {
    if (p->name.rfind(src_prefix, 0) != 0 || skipped(p->name.substr(src_prefix.size()))) continue;
    const std::string name = dst_prefix + p->name.substr(src_prefix.size());
    ACCENTFUSE_REQUIRE(store.Has(name), ConfigError, "checkpoint tensor has no destination: " + name);
    auto& q = store.Get(name);
    ACCENTFUSE_REQUIRE(q.value.rows() == p->value.rows() && q.value.cols() == p->value.cols(), ConfigError,
                       "checkpoint shape mismatch for " + name);
    q.value = p->value.template cast<S>();
    ++copied;
  }
  ACCENTFUSE_REQUIRE(copied == expected, ConfigError,
                     "checkpoint covers " + std::to_string(copied) + " of " + std::to_string(expected) +
                         " tensors under '" + dst_prefix + "'");
}

}  // namespace accentfuse
