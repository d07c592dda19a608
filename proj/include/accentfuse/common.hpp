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

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace accentfuse {

/// Row-major dense matrix. Rows index time frames (or batch items), columns
/// index channels.
template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic, Eigen::RowMajor>;

using MatF = Mat<float>;
using MatD = Mat<double>;

inline constexpr int kFbankDim = 40;
inline constexpr int kBlank = 0;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map user-facing failures to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ConsistencyError : Error {
  using Error::Error;
};
struct LookupError : Error {
  using Error::Error;
};
struct ContractError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct TooShortError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct InfeasibleAlignmentError : Error {
  using Error::Error;
};
struct SplitError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

#define ACCENTFUSE_REQUIRE(cond, ErrType, msg) \
  do {                                         \
    if (!(cond)) throw ErrType(msg);           \
  } while (0)

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t HashString(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Derives an independent child seed, so that one global seed can drive every
/// module deterministically.
inline std::uint64_t DeriveSeed(std::uint64_t parent, std::string_view tag) {
  return SplitMix64(parent ^ SplitMix64(HashString(tag)));
}

using Rng = std::mt19937_64;

// Distribution helpers with a fixed, portable algorithm. The std
// distributions are implementation-defined, which would break bitwise
// reproducibility across standard libraries.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline int UniformInt(Rng& rng, int lo, int hi) {  // inclusive bounds
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

inline double Normal(Rng& rng) {
  double u1 = Uniform01(rng);
  const double u2 = Uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename S>
bool AllFinite(const Mat<S>& m) {
  return m.allFinite();
}

template <typename Dst, typename Src>
Mat<Dst> CastMat(const Mat<Src>& m) {
  return m.template cast<Dst>();
}

}  // namespace accentfuse
