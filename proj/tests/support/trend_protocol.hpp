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

// Desk-scale trend protocol on the synthetic corpus. One call runs every
// model needed by the three trend checks for one seed.

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "accentfuse/accentfuse.hpp"

namespace trend {

using namespace accentfuse;

struct Protocol {
  int width = 64;
  int n_accents = 4;
  int speakers_per_accent = 8;
  int utts_per_speaker = 50;
  int val_speakers_per_accent = 2;
  int native_speakers = 16;
  int substitutions_per_accent = 6;
  double lr = 1e-3;
  int epochs = 15;
  int pretrain_epochs = 10;
  double lambda = 0.1;
  ProbeConfig probe;  // lr 1e-4, batch 8, 20 epochs
};

struct SeedResult {
  std::uint64_t seed = 0;
  double pretrain_per_reference = 0;
  double pretrain_per_trainable = 0;
  double acc_ar_only = 0;
  double acc_mtl = 0;
  double probe_ar_only = 0;
  double probe_mtl = 0;
  double acc_mtl_random = 0;
  double acc_hybrid = 0;
  double acc_hybrid_random = 0;
  double rho_normal = 0;
  double rho_random = 0;
  double seconds = 0;
};

inline double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline SeedResult RunSeed(std::uint64_t seed, const Protocol& p, const std::filesystem::path& work,
                          std::ostream& log = std::cout) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(work);
  SeedResult out;
  out.seed = seed;
  const ModelConfig base = CompactModelConfig(p.n_accents, p.width);

  SyntheticCorpusSpec spec;
  spec.n_accents = p.n_accents;
  spec.n_speakers_per_accent = p.speakers_per_accent;
  spec.n_utts_per_speaker = p.utts_per_speaker;
  spec.seed = DeriveSeed(seed, "accented");
  spec.accent_shift_table = RandomAccentTable(p.n_accents, p.substitutions_per_accent, 1.0, DeriveSeed(seed, "table"));
  const Dataset accented = GenerateSyntheticCorpus(spec).dataset;
  const auto split = SpeakerDisjointSplit(accented.corpus, p.val_speakers_per_accent, DeriveSeed(seed, "split"));
  const Dataset train = accented.Subset(split.train), valid = accented.Subset(split.valid);

  // Accent-free corpus for the reference model.
  SyntheticCorpusSpec nspec = spec;
  nspec.accent_shift_table.clear();
  nspec.n_accents = 1;
  nspec.n_speakers_per_accent = p.native_speakers;
  nspec.seed = DeriveSeed(seed, "native");
  nspec.name = "native";
  const Dataset native = GenerateSyntheticCorpus(nspec).dataset;
  const auto nsplit = SpeakerDisjointSplit(native.corpus, p.val_speakers_per_accent, DeriveSeed(seed, "native-split"));

  auto pretrain = [&](const Dataset& tr, const Dataset& va, const std::string& tag) {
    AcousticModel<float> am(base.acoustic, kTrainablePrefix);
    ParameterStore<float> store;
    Rng rng(DeriveSeed(seed, tag));
    am.Init(store, rng);
    PretrainConfig pc;
    pc.lr = p.lr;
    pc.max_epochs = p.pretrain_epochs;
    pc.seed = DeriveSeed(seed, tag);
    const auto r = PretrainAsr(am, store, tr, va, pc);
    const std::string path = (work / (tag + ".ckpt")).string();
    SaveAcousticCheckpoint(path, am, store);
    return std::make_pair(path, r.best_per);
  };
  const auto [reference_ckpt, ref_per] = pretrain(native.Subset(nsplit.train), native.Subset(nsplit.valid), "reference");
  const auto [trainable_ckpt, tr_per] = pretrain(train, valid, "trainable");
  out.pretrain_per_reference = ref_per;
  out.pretrain_per_trainable = tr_per;

  const auto& h = PhonemeHierarchy::Default();
  const DegradationConfig random_cfg{0.0, DegradationMode::kRandom, seed};
  const Dataset rtrain = DegradeDataset(train, h, random_cfg), rvalid = DegradeDataset(valid, h, random_cfg);

  // AM_t starts from the accented-corpus checkpoint except in AR_ONLY and in
  // the random-transcript runs.
  auto fit = [&](Regime regime, bool pretrained, const Dataset& tr, const Dataset& va, const char* name) {
    ModelConfig c = base;
    c.hybrid = regime == Regime::kHybrid;
    auto model = std::make_unique<AccentModel<float>>(c);
    model->Init(DeriveSeed(seed, "model"));
    if (pretrained) model->LoadAcoustic(trainable_ckpt, kTrainablePrefix);
    if (c.hybrid) model->LoadAcoustic(reference_ckpt, kReferencePrefix);
    TrainConfig tc;
    tc.regime = regime;
    tc.lr = p.lr;
    tc.max_epochs = p.epochs;
    tc.seed = seed;
    tc.lambda = p.lambda;
    const auto r = TrainAccentModel(*model, tr, va, tc);
    log << "  seed " << seed << " " << name << ": best validation accuracy " << r.best_accuracy << " (epoch "
        << r.best_epoch << ")\n";
    return std::make_pair(std::move(model), r.best_accuracy);
  };

  auto [ar_only, acc_ar] = fit(Regime::kArOnly, false, train, valid, "ar_only");
  auto [mtl, acc_mtl] = fit(Regime::kMtl, true, train, valid, "mtl");
  out.acc_ar_only = acc_ar;
  out.acc_mtl = acc_mtl;
  ProbeConfig pc = p.probe;
  pc.seed = seed;
  out.probe_ar_only = SpeakerProbe(*ar_only, train, pc).final_accuracy;
  out.probe_mtl = SpeakerProbe(*mtl, train, pc).final_accuracy;
  log << "  seed " << seed << " speaker probe: ar_only " << out.probe_ar_only << ", mtl " << out.probe_mtl << "\n";

  out.acc_mtl_random = fit(Regime::kMtl, false, rtrain, rvalid, "mtl, random transcripts").second;
  auto [hybrid, acc_h] = fit(Regime::kHybrid, true, train, valid, "hybrid");
  auto [hybrid_r, acc_hr] = fit(Regime::kHybrid, false, rtrain, rvalid, "hybrid, random transcripts");
  out.acc_hybrid = acc_h;
  out.acc_hybrid_random = acc_hr;
  out.rho_normal = AttentionRatio(*hybrid, valid, AllIndices(valid)).rho;
  out.rho_random = AttentionRatio(*hybrid_r, rvalid, AllIndices(rvalid)).rho;
  log << "  seed " << seed << " rho: normal " << out.rho_normal << ", random " << out.rho_random << "\n";
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace trend
