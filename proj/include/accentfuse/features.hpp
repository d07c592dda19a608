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

// Log-mel filterbank front end, SpecAugment masking, and the on-disk
// feature container.

#pragma once

#include <unsupported/Eigen/FFT>

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "accentfuse/common.hpp"

namespace accentfuse {

static_assert(std::endian::native == std::endian::little, "feature container assumes a little-endian host");

struct FeatureSequence {
  MatF values;  // T_in x 40
  int valid_length = 0;
  std::string utt_id;

  int frames() const { return static_cast<int>(values.rows()); }
};

struct FbankOptions {
  int sample_rate = 16000;
  int frame_length = 400;  // 25 ms
  int frame_shift = 160;   // 10 ms
  int fft_size = 512;
  int num_bins = kFbankDim;
  double low_freq = 20.0;
  double high_freq = 7600.0;
  double preemph = 0.97;
  double log_floor = 1e-10;
  bool remove_dc = true;
  bool normalize = false;  // per-utterance mean/variance normalization
};

inline double MelScale(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double InverseMelScale(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline int NumFrames(int num_samples, const FbankOptions& opts = {}) {
  if (num_samples < opts.frame_length) return 0;
  return 1 + (num_samples - opts.frame_length) / opts.frame_shift;
}

/// Triangular filters, equally spaced on the mel scale between low_freq and
/// high_freq, sampled at the FFT bin frequencies. Rows are filters.
inline MatD MelFilterbank(const FbankOptions& opts) {
  const int nbins = opts.fft_size / 2 + 1;
  const double mel_low = MelScale(opts.low_freq);
  const double mel_high = MelScale(opts.high_freq);
  const double delta = (mel_high - mel_low) / (opts.num_bins + 1);
  MatD banks = MatD::Zero(opts.num_bins, nbins);
  for (int b = 0; b < opts.num_bins; ++b) {
    const double left = mel_low + b * delta;
    const double center = left + delta;
    const double right = center + delta;
    for (int k = 0; k < nbins; ++k) {
      const double mel = MelScale(static_cast<double>(k) * opts.sample_rate / opts.fft_size);
      if (mel <= left || mel >= right) continue;
      banks(b, k) = mel <= center ? (mel - left) / (center - left) : (right - mel) / (right - center);
    }
  }
  return banks;
}

/// 40-dim log-mel energies of 16 kHz mono PCM.
inline FeatureSequence ExtractFbank(const std::vector<std::int16_t>& pcm, int sample_rate = 16000,
                                    const FbankOptions& opts = {}) {
  ACCENTFUSE_REQUIRE(sample_rate == opts.sample_rate, FormatError,
                     "expected " + std::to_string(opts.sample_rate) + " Hz audio, got " + std::to_string(sample_rate));
  ACCENTFUSE_REQUIRE(static_cast<int>(pcm.size()) >= opts.frame_length, TooShortError,
                     "audio shorter than one analysis window (" + std::to_string(pcm.size()) + " samples)");
  const int T = NumFrames(static_cast<int>(pcm.size()), opts);
  const MatD banks = MelFilterbank(opts);
  std::vector<double> window(opts.frame_length);
  for (int i = 0; i < opts.frame_length; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (opts.frame_length - 1));

  Eigen::FFT<double> fft;
  std::vector<double> frame(opts.fft_size);
  std::vector<std::complex<double>> spec;
  Eigen::VectorXd power(opts.fft_size / 2 + 1);
  FeatureSequence out;
  out.values.resize(T, opts.num_bins);
  out.valid_length = T;
  for (int t = 0; t < T; ++t) {
    std::fill(frame.begin(), frame.end(), 0.0);
    const int start = t * opts.frame_shift;
    double mean = 0;
    for (int i = 0; i < opts.frame_length; ++i) {
      frame[i] = pcm[start + i];
      mean += frame[i];
    }
    mean /= opts.frame_length;
    if (opts.remove_dc)
      for (int i = 0; i < opts.frame_length; ++i) frame[i] -= mean;
    for (int i = opts.frame_length - 1; i > 0; --i) frame[i] -= opts.preemph * frame[i - 1];
    frame[0] -= opts.preemph * frame[0];
    for (int i = 0; i < opts.frame_length; ++i) frame[i] *= window[i];
    fft.fwd(spec, frame);
    for (int k = 0; k <= opts.fft_size / 2; ++k) power[k] = std::norm(spec[k]);
    Eigen::VectorXd mel = banks * power;
    for (int b = 0; b < opts.num_bins; ++b)
      out.values(t, b) = static_cast<float>(std::log(std::max(mel[b], opts.log_floor)));
  }
  if (opts.normalize && T > 0) {
    Eigen::RowVectorXf mean = out.values.colwise().mean();
    out.values.rowwise() -= mean;
    Eigen::RowVectorXf sd = (out.values.array().square().colwise().mean() + 1e-10f).sqrt();
    out.values.array().rowwise() /= sd.array();
  }
  return out;
}

struct WavData {
  int sample_rate = 0;
  std::vector<std::int16_t> samples;
};

/// Reads a RIFF/WAVE file holding mono 16-bit PCM.
inline WavData ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ACCENTFUSE_REQUIRE(in.good(), IoError, "cannot open wav file: " + path);
  auto read_u32 = [&in]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto read_u16 = [&in]() {
    std::uint16_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 2);
    return v;
  };
  char tag[4];
  in.read(tag, 4);
  ACCENTFUSE_REQUIRE(in && std::memcmp(tag, "RIFF", 4) == 0, FormatError, path + ": not a RIFF file");
  read_u32();
  in.read(tag, 4);
  ACCENTFUSE_REQUIRE(in && std::memcmp(tag, "WAVE", 4) == 0, FormatError, path + ": not a WAVE file");
  WavData wav;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    const std::uint32_t size = read_u32();
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const std::uint16_t format = read_u16();
      const std::uint16_t channels = read_u16();
      wav.sample_rate = static_cast<int>(read_u32());
      read_u32();
      read_u16();
      const std::uint16_t bits = read_u16();
      ACCENTFUSE_REQUIRE(format == 1 && channels == 1 && bits == 16, FormatError,
                         path + ": only mono 16-bit PCM is supported");
      in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      ACCENTFUSE_REQUIRE(have_fmt, FormatError, path + ": data chunk before fmt chunk");
      wav.samples.resize(size / 2);
      in.read(reinterpret_cast<char*>(wav.samples.data()), static_cast<std::streamsize>(wav.samples.size() * 2));
      return wav;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  throw FormatError(path + ": no data chunk");
}

inline void WriteWav(const std::string& path, const std::vector<std::int16_t>& samples, int sample_rate = 16000) {
  std::ofstream out(path, std::ios::binary);
  ACCENTFUSE_REQUIRE(out.good(), IoError, "cannot write wav file: " + path);
  auto u32 = [&out](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&out](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  const auto bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  u32(36 + bytes);
  out.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(1);
  u32(static_cast<std::uint32_t>(sample_rate));
  u32(static_cast<std::uint32_t>(sample_rate * 2));
  u16(2);
  u16(16);
  out.write("data", 4);
  u32(bytes);
  out.write(reinterpret_cast<const char*>(samples.data()), bytes);
}

struct SpecAugPolicy {
  int n_freq_masks = 2;
  int max_freq_width = 8;
  int n_time_masks = 2;
  int max_time_width = 20;
  std::uint64_t seed = 0;
};

/// Replaces random frequency bands and time spans of the valid region by
/// the utterance mean. Shape and valid_length are never changed.
inline FeatureSequence SpecAugment(const FeatureSequence& x, const SpecAugPolicy& policy) {
  FeatureSequence y = x;
  const int T = x.valid_length;
  const int F = static_cast<int>(x.values.cols());
  if (T <= 0 || F <= 0) return y;
  const float mean = x.values.topRows(T).mean();
  Rng rng(policy.seed);
  for (int m = 0; m < policy.n_freq_masks; ++m) {
    const int w = UniformInt(rng, 0, std::clamp(policy.max_freq_width, 0, F));
    const int f0 = UniformInt(rng, 0, F - w);
    if (w > 0) y.values.block(0, f0, T, w).setConstant(mean);
  }
  for (int m = 0; m < policy.n_time_masks; ++m) {
    const int w = UniformInt(rng, 0, std::clamp(policy.max_time_width, 0, T));
    const int t0 = UniformInt(rng, 0, T - w);
    if (w > 0) y.values.block(t0, 0, w, F).setConstant(mean);
  }
  return y;
}

// Feature container: "AFB1", u32 id length, id bytes, u32 T_in, u32 d_fbank,
// then T_in * d_fbank little-endian float32 values, row-major.
inline void WriteFeatures(const std::string& path, const FeatureSequence& x) {
  std::ofstream out(path, std::ios::binary);
  ACCENTFUSE_REQUIRE(out.good(), IoError, "cannot write feature file: " + path);
  auto u32 = [&out](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  out.write("AFB1", 4);
  u32(static_cast<std::uint32_t>(x.utt_id.size()));
  out.write(x.utt_id.data(), static_cast<std::streamsize>(x.utt_id.size()));
  u32(static_cast<std::uint32_t>(x.values.rows()));
  u32(static_cast<std::uint32_t>(x.values.cols()));
  out.write(reinterpret_cast<const char*>(x.values.data()), static_cast<std::streamsize>(x.values.size() * 4));
  ACCENTFUSE_REQUIRE(out.good(), IoError, "short write: " + path);
}

inline FeatureSequence ReadFeatures(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ACCENTFUSE_REQUIRE(in.good(), IoError, "cannot open feature file: " + path);
  auto u32 = [&in]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  char magic[4];
  in.read(magic, 4);
  ACCENTFUSE_REQUIRE(in && std::memcmp(magic, "AFB1", 4) == 0, FormatError, path + ": bad feature magic");
  FeatureSequence x;
  x.utt_id.resize(u32());
  in.read(x.utt_id.data(), static_cast<std::streamsize>(x.utt_id.size()));
  const auto rows = u32();
  const auto cols = u32();
  ACCENTFUSE_REQUIRE(in && cols == kFbankDim, FormatError, path + ": expected 40 feature dims");
  x.values.resize(rows, cols);
  in.read(reinterpret_cast<char*>(x.values.data()), static_cast<std::streamsize>(x.values.size() * 4));
  ACCENTFUSE_REQUIRE(in.good() || in.eof(), FormatError, path + ": truncated feature file");
  ACCENTFUSE_REQUIRE(in.gcount() == static_cast<std::streamsize>(x.values.size() * 4), FormatError,
                     path + ": truncated feature file");
  x.valid_length = static_cast<int>(rows);
  return x;
}

}  // namespace accentfuse
