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

// Training regimes:
//   AR_ONLY   accent CE only, everything from scratch
//   ASR_INIT  AM_t starts from a CTC-pretrained checkpoint, then accent CE only
//   MTL       l = l_c + lambda * l_asr, AM_t optionally from a checkpoint
//   HYBRID    MTL plus a frozen reference AM fused into the aggregation input

#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "accentfuse/data.hpp"
#include "accentfuse/features.hpp"
#include "accentfuse/losses.hpp"
#include "accentfuse/model.hpp"
#include "accentfuse/optim.hpp"

namespace accentfuse {

enum class Regime { kArOnly, kAsrInit, kMtl, kHybrid };

inline std::string ToString(Regime r) {
  switch (r) {
    case Regime::kArOnly: return "ar_only";
    case Regime::kAsrInit: return "asr_init";
    case Regime::kMtl: return "mtl";
    case Regime::kHybrid: return "hybrid";
  }
  return "?";
}

inline Regime ParseRegime(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "ar_only" || s == "ar-only") return Regime::kArOnly;
  if (s == "asr_init" || s == "asr-init") return Regime::kAsrInit;
  if (s == "mtl") return Regime::kMtl;
  if (s == "hybrid") return Regime::kHybrid;
  throw ConfigError("unknown regime: " + s + " (expected ar_only, asr_init, mtl or hybrid)");
}

struct TrainConfig {
  Regime regime = Regime::kMtl;
  double lambda = 0.1;
  FusionMode fusion = FusionMode::kConcatCa;
  double lr = 1e-4;
  int batch_size = 16;
  int max_epochs = 10;
  std::uint64_t seed = 1;
  bool spec_augment = false;
  SpecAugPolicy spec_aug;
  double clip_norm = 0.0;
  bool normalize_ctc_by_target_length = true;

  void Validate() const {
    ACCENTFUSE_REQUIRE(lambda >= 0 && std::isfinite(lambda), ConfigError, "lambda must be finite and >= 0");
    ACCENTFUSE_REQUIRE(lr > 0 && std::isfinite(lr), ConfigError, "learning rate must be positive");
    ACCENTFUSE_REQUIRE(batch_size >= 1, ConfigError, "batch size must be >= 1");
    ACCENTFUSE_REQUIRE(max_epochs >= 0, ConfigError, "max_epochs must be >= 0");
    ACCENTFUSE_REQUIRE(clip_norm >= 0, ConfigError, "clip_norm must be >= 0");
  }

  bool uses_ctc() const { return regime == Regime::kMtl || regime == Regime::kHybrid; }
  /// The weight actually applied to l_asr.
  double effective_lambda() const { return uses_ctc() ? lambda : 0.0; }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"regime", ToString(c.regime)},
                     {"lambda", c.lambda},
                     {"fusion", ToString(c.fusion)},
                     {"lr", c.lr},
                     {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs},
                     {"seed", c.seed},
                     {"spec_augment", c.spec_augment},
                     {"clip_norm", c.clip_norm},
                     {"normalize_ctc_by_target_length", c.normalize_ctc_by_target_length}};
}
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const std::vector<std::string> known = {"regime",     "lambda",     "fusion",       "lr",
                                                 "batch_size", "max_epochs", "seed",         "spec_augment",
                                                 "clip_norm",  "normalize_ctc_by_target_length"};
  for (const auto& [key, _] : j.items())
    ACCENTFUSE_REQUIRE(std::count(known.begin(), known.end(), key), ConfigError, "unknown train key: " + key);
  TrainConfig d;
  c.regime = ParseRegime(j.value("regime", ToString(d.regime)));
  c.lambda = j.value("lambda", d.lambda);
  c.fusion = ParseFusionMode(j.value("fusion", ToString(d.fusion)));
  c.lr = j.value("lr", d.lr);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.seed = j.value("seed", d.seed);
  c.spec_augment = j.value("spec_augment", d.spec_augment);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.normalize_ctc_by_target_length = j.value("normalize_ctc_by_target_length", d.normalize_ctc_by_target_length);
}

// ---------------------------------------------------------------------------
// Batches

struct Batch {
  MatF x;
  Segments segs;
  std::vector<int> accents;
  std::vector<std::vector<int>> targets;
  std::vector<size_t> indices;
};

/// Packs the valid frames of the selected utterances. With `aug`, each
/// utterance gets its own SpecAugment draw seeded from `aug_seed` and its index.
inline Batch MakeBatch(const Dataset& ds, const std::vector<size_t>& indices, const SpecAugPolicy* aug = nullptr,
                       std::uint64_t aug_seed = 0) {
  ACCENTFUSE_REQUIRE(!indices.empty(), ContractError, "empty batch");
  ACCENTFUSE_REQUIRE(ds.features.size() == ds.corpus.records.size(), ContractError, "dataset without features");
  Batch b;
  b.indices = indices;
  int total = 0;
  for (size_t i : indices) {
    ACCENTFUSE_REQUIRE(ds.features[i].valid_length >= 1, ContractError, "utterance with no frames: " + ds.corpus.records[i].utt_id);
    total += ds.features[i].valid_length;
  }
  b.x.resize(total, kFbankDim);
  int row = 0;
  for (size_t i : indices) {
    const FeatureSequence* f = &ds.features[i];
    FeatureSequence augmented;
    if (aug != nullptr) {
      SpecAugPolicy p = *aug;
      p.seed = DeriveSeed(aug_seed, "specaug:" + std::to_string(i));
      augmented = SpecAugment(*f, p);
      f = &augmented;
    }
    b.x.middleRows(row, f->valid_length) = f->values.topRows(f->valid_length);
    row += f->valid_length;
    b.segs.lengths.push_back(f->valid_length);
    b.accents.push_back(ds.corpus.records[i].accent);
    b.targets.push_back(ds.corpus.records[i].transcript_phonemes);
  }
  return b;
}

/// Consecutive chunks of `order`.
inline std::vector<std::vector<size_t>> Chunk(const std::vector<size_t>& order, int batch_size) {
  std::vector<std::vector<size_t>> out;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(batch_size))
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  return out;
}

inline std::vector<size_t> ShuffledOrder(size_t n, std::uint64_t seed) {
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (int i = static_cast<int>(n) - 1; i > 0; --i) std::swap(order[i], order[UniformInt(rng, 0, i)]);
  return order;
}

// ---------------------------------------------------------------------------
// Single-utterance losses

/// CTC loss of one utterance; raises InfeasibleAlignmentError when the target
/// cannot be aligned to the valid frames.
template <typename S>
double ctc_loss(const Mat<S>& logits, const std::vector<int>& target, int valid_length) {
  return CtcLoss(logits, target, valid_length);
}

template <typename S>
double ce_loss(const RowVec<S>& logits, int label) {
  return CrossEntropy(logits, label);
}

// ---------------------------------------------------------------------------
// One optimization step

struct StepMetrics {
  long step = 0;
  double l_c = 0;
  double l_asr = 0;
  double l = 0;
  double lr = 0;
  int ctc_skipped = 0;  // utterances whose target cannot be aligned
};

/// Tolerance on the additivity l = l_c + lambda * l_asr for float graphs.
inline bool LossesAdditive(const StepMetrics& m, double lambda) {
  return std::abs(m.l - (m.l_c + lambda * m.l_asr)) <= 1e-6 * std::max(1.0, std::abs(m.l));
}

template <typename S>
StepMetrics TrainStep(AccentModel<S>& model, Adam<S>& opt, const Batch& batch, const TrainConfig& cfg, long step) {
  Graph<S> g;
  Rng rng(DeriveSeed(cfg.seed, "dropout:" + std::to_string(step)));
  const RunContext ctx{true, &rng};
  auto fw = model.Forward(g, g.Constant(batch.x.template cast<S>()), batch.segs, ctx);
  Var lc = CrossEntropyLoss(g, fw.aggregation.logits, batch.accents);

  StepMetrics m;
  m.step = step;
  m.lr = opt.options().lr;
  m.l_c = static_cast<double>(g.value(lc)(0, 0));
  ACCENTFUSE_REQUIRE(std::isfinite(m.l_c), NumericError, "accent loss l_c diverged at step " + std::to_string(step));
  Var loss = lc;
  if (cfg.uses_ctc()) {
    std::vector<std::uint8_t> include(batch.targets.size(), 1);
    for (size_t s = 0; s < include.size(); ++s)
      if (fw.trainable.segs.lengths[s] < CtcMinFrames(batch.targets[s]) || batch.targets[s].empty()) {
        include[s] = 0;
        ++m.ctc_skipped;
      }
    Var la = CtcBatchLoss(g, fw.trainable.logits, fw.trainable.segs, batch.targets,
                          cfg.normalize_ctc_by_target_length, &include);
    m.l_asr = static_cast<double>(g.value(la)(0, 0));
    ACCENTFUSE_REQUIRE(std::isfinite(m.l_asr), NumericError,
                       "ASR loss l_asr diverged at step " + std::to_string(step));
    loss = AddScaled(g, lc, la, S(cfg.lambda));
  }
  m.l = static_cast<double>(g.value(loss)(0, 0));
  ACCENTFUSE_REQUIRE(std::isfinite(m.l), NumericError, "total loss diverged at step " + std::to_string(step));
  ACCENTFUSE_REQUIRE(LossesAdditive(m, cfg.effective_lambda()), NumericError, "loss terms are not additive");
  model.params().ZeroGrad();
  g.Backprop(loss);
  opt.Step(model.TrainableParameters());
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalResult {
  int n = 0;
  int correct = 0;
  std::vector<int> per_accent_total;
  std::vector<int> per_accent_correct;
  std::vector<int> predictions;
  double per = std::nan("");  // phone error rate of AM_t greedy decoding
  double mean_ce = 0;

  double accuracy() const { return n > 0 ? static_cast<double>(correct) / n : std::nan(""); }
  double accent_accuracy(int a) const {
    return per_accent_total[a] > 0 ? static_cast<double>(per_accent_correct[a]) / per_accent_total[a] : std::nan("");
  }
};

/// Eval-mode accent accuracy and PER over `indices` of `ds`.
template <typename S>
EvalResult Evaluate(AccentModel<S>& model, const Dataset& ds, const std::vector<size_t>& indices, int batch_size = 32) {
  const int n_accents = model.config().aggregation.d_accent;
  EvalResult r;
  r.per_accent_total.assign(n_accents, 0);
  r.per_accent_correct.assign(n_accents, 0);
  long edits = 0, ref_len = 0;
  double ce = 0;
  for (const auto& chunk : Chunk(indices, batch_size)) {
    Batch b = MakeBatch(ds, chunk);
    Graph<S> g;
    auto fw = model.Forward(g, g.Constant(b.x.template cast<S>()), b.segs, RunContext{});
    const auto& Z = g.value(fw.aggregation.logits);
    const auto& P = g.value(fw.trainable.logits);
    const auto off = fw.trainable.segs.offsets();
    for (size_t s = 0; s < chunk.size(); ++s) {
      const int pred = ArgMax(Z.row(static_cast<Eigen::Index>(s)));
      const int label = b.accents[s];
      ACCENTFUSE_REQUIRE(label >= 0 && label < n_accents, ContractError, "accent label outside the model's range");
      r.predictions.push_back(pred);
      ++r.n;
      ++r.per_accent_total[label];
      if (pred == label) {
        ++r.correct;
        ++r.per_accent_correct[label];
      }
      ce += CrossEntropy(RowVec<S>(Z.row(static_cast<Eigen::Index>(s))), label);
      if (!b.targets[s].empty()) {
        const auto hyp = GreedyCtcDecode(P.middleRows(off[s], fw.trainable.segs.lengths[s]));
        edits += EditDistance(b.targets[s], hyp);
        ref_len += static_cast<long>(b.targets[s].size());
      }
    }
  }
  if (ref_len > 0) r.per = static_cast<double>(edits) / static_cast<double>(ref_len);
  if (r.n > 0) r.mean_ce = ce / r.n;
  return r;
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  EvalResult valid;
};

struct TrainResult {
  std::vector<StepMetrics> steps;
  std::vector<EpochMetrics> epochs;
  int best_epoch = -1;
  double best_accuracy = std::nan("");
};

/// Streams metrics as they are produced. Any member may be empty.
struct TrainObserver {
  std::function<void(const StepMetrics&)> on_step;
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// Trains on `train`, validates on `valid` once per epoch and restores the
/// parameters of the epoch with the best overall validation accuracy.
template <typename S>
TrainResult TrainAccentModel(AccentModel<S>& model, const Dataset& train, const Dataset& valid, const TrainConfig& cfg,
                             const TrainObserver& observer = {}) {
  cfg.Validate();
  ACCENTFUSE_REQUIRE(train.size() > 0, ContractError, "empty training set");
  ACCENTFUSE_REQUIRE((cfg.regime == Regime::kHybrid) == model.config().hybrid, ConfigError,
                     "the hybrid regime needs a hybrid model and vice versa");
  Adam<S> opt(AdamOptions{cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  TrainResult result;
  std::optional<ParameterStore<S>> best;
  std::vector<size_t> valid_idx(valid.size());
  for (size_t i = 0; i < valid_idx.size(); ++i) valid_idx[i] = i;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto order = ShuffledOrder(train.size(), DeriveSeed(cfg.seed, "epoch:" + std::to_string(epoch)));
    double sum = 0;
    int count = 0;
    for (const auto& chunk : Chunk(order, cfg.batch_size)) {
      const Batch b = MakeBatch(train, chunk, cfg.spec_augment ? &cfg.spec_aug : nullptr,
                                DeriveSeed(cfg.seed, "aug:" + std::to_string(step)));
      auto m = TrainStep(model, opt, b, cfg, ++step);
      sum += m.l;
      ++count;
      if (observer.on_step) observer.on_step(m);
      result.steps.push_back(m);
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = sum / std::max(1, count);
    if (valid.size() > 0) em.valid = Evaluate(model, valid, valid_idx);
    if (observer.on_epoch) observer.on_epoch(em);
    const double acc = em.valid.accuracy();
    if (valid.size() == 0 || result.best_epoch < 0 || acc > result.best_accuracy) {
      result.best_epoch = epoch;
      result.best_accuracy = acc;
      best = model.params().template Cast<S>();
    }
    result.epochs.push_back(std::move(em));
  }
  if (best) {
    for (auto* p : model.params().All()) p->value = best->Get(p->name).value;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Acoustic-model pretraining

struct PretrainConfig {
  double lr = 1e-4;
  int batch_size = 16;
  int max_epochs = 20;
  int patience = 5;
  std::uint64_t seed = 1;
  bool spec_augment = false;
  SpecAugPolicy spec_aug;
  bool normalize_ctc_by_target_length = true;

  void Validate() const {
    ACCENTFUSE_REQUIRE(lr > 0 && batch_size >= 1 && max_epochs >= 1 && patience >= 1, ConfigError,
                       "bad pretraining configuration");
  }
};

inline void to_json(nlohmann::json& j, const PretrainConfig& c) {
  j = nlohmann::json{{"lr", c.lr},         {"batch_size", c.batch_size},     {"max_epochs", c.max_epochs},
                     {"patience", c.patience}, {"seed", c.seed},             {"spec_augment", c.spec_augment},
                     {"normalize_ctc_by_target_length", c.normalize_ctc_by_target_length}};
}
inline void from_json(const nlohmann::json& j, PretrainConfig& c) {
  static const std::vector<std::string> known = {"lr",   "batch_size",   "max_epochs",
                                                 "patience", "seed", "spec_augment",
                                                 "normalize_ctc_by_target_length"};
  for (const auto& [key, _] : j.items())
    ACCENTFUSE_REQUIRE(std::count(known.begin(), known.end(), key), ConfigError, "unknown pretrain key: " + key);
  PretrainConfig d;
  c.lr = j.value("lr", d.lr);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.patience = j.value("patience", d.patience);
  c.seed = j.value("seed", d.seed);
  c.spec_augment = j.value("spec_augment", d.spec_augment);
  c.normalize_ctc_by_target_length = j.value("normalize_ctc_by_target_length", d.normalize_ctc_by_target_length);
}

struct PretrainEpoch {
  int epoch = 0;
  double train_ctc = 0;
  double valid_per = 0;
};

struct PretrainResult {
  std::vector<PretrainEpoch> epochs;
  int best_epoch = 0;
  double best_per = std::nan("");
  bool early_stopped = false;
};

/// Phone error rate of an acoustic model over a dataset (eval mode).
template <typename S>
double AcousticPer(const AcousticModel<S>& am, ParameterStore<S>& store, const Dataset& ds, int batch_size = 32) {
  std::vector<size_t> idx(ds.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  long edits = 0, ref = 0;
  for (const auto& chunk : Chunk(idx, batch_size)) {
    Batch b = MakeBatch(ds, chunk);
    Graph<S> g;
    auto fw = am.Forward(g, store, g.Constant(b.x.template cast<S>()), b.segs, RunContext{});
    const auto off = fw.segs.offsets();
    for (size_t s = 0; s < chunk.size(); ++s) {
      const auto hyp = GreedyCtcDecode(g.value(fw.logits).middleRows(off[s], fw.segs.lengths[s]));
      edits += EditDistance(b.targets[s], hyp);
      ref += static_cast<long>(b.targets[s].size());
    }
  }
  ACCENTFUSE_REQUIRE(ref > 0, ContractError, "PER needs at least one non-empty transcript");
  return static_cast<double>(edits) / static_cast<double>(ref);
}

/// CTC pretraining of a standalone acoustic model stored under `am.prefix()`.
/// Keeps the parameters of the epoch with the lowest validation PER and stops
/// after `patience` epochs without improvement.
template <typename S>
PretrainResult PretrainAsr(const AcousticModel<S>& am, ParameterStore<S>& store, const Dataset& train,
                           const Dataset& valid, const PretrainConfig& cfg, std::ostream* log = nullptr) {
  cfg.Validate();
  ACCENTFUSE_REQUIRE(train.size() > 0 && valid.size() > 0, ContractError, "pretraining needs train and valid data");
  for (const auto& r : train.corpus.records)
    ACCENTFUSE_REQUIRE(!r.transcript_phonemes.empty(), ContractError, "utterance without transcript: " + r.utt_id);
  std::vector<Parameter<S>*> params;
  for (auto* p : store.All())
    if (p->trainable && !p->is_buffer) params.push_back(p);
  Adam<S> opt(AdamOptions{cfg.lr});
  PretrainResult result;
  ParameterStore<S> best = store.template Cast<S>();
  long step = 0;
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto order = ShuffledOrder(train.size(), DeriveSeed(cfg.seed, "pretrain-epoch:" + std::to_string(epoch)));
    double sum = 0;
    int count = 0;
    for (const auto& chunk : Chunk(order, cfg.batch_size)) {
      ++step;
      const Batch b = MakeBatch(train, chunk, cfg.spec_augment ? &cfg.spec_aug : nullptr,
                                DeriveSeed(cfg.seed, "pretrain-aug:" + std::to_string(step)));
      Graph<S> g;
      Rng rng(DeriveSeed(cfg.seed, "pretrain-dropout:" + std::to_string(step)));
      auto fw = am.Forward(g, store, g.Constant(b.x.template cast<S>()), b.segs, RunContext{true, &rng});
      std::vector<std::uint8_t> include(b.targets.size(), 1);
      for (size_t s = 0; s < include.size(); ++s) include[s] = fw.segs.lengths[s] >= CtcMinFrames(b.targets[s]);
      Var loss = CtcBatchLoss(g, fw.logits, fw.segs, b.targets, cfg.normalize_ctc_by_target_length, &include);
      const double l = static_cast<double>(g.value(loss)(0, 0));
      ACCENTFUSE_REQUIRE(std::isfinite(l), NumericError, "CTC loss diverged at pretraining step " + std::to_string(step));
      store.ZeroGrad();
      g.Backprop(loss);
      opt.Step(params);
      sum += l;
      ++count;
    }
    PretrainEpoch pe{epoch, sum / std::max(1, count), AcousticPer(am, store, valid)};
    result.epochs.push_back(pe);
    if (log != nullptr)
      *log << "pretrain epoch " << epoch << " ctc " << pe.train_ctc << " valid PER " << pe.valid_per << "\n";
    if (result.best_epoch == 0 || pe.valid_per < result.best_per) {
      result.best_epoch = epoch;
      result.best_per = pe.valid_per;
      best = store.template Cast<S>();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.early_stopped = true;
      if (log != nullptr)
        *log << "warning: no validation PER improvement for " << cfg.patience << " epochs, keeping epoch "
             << result.best_epoch << "\n";
      break;
    }
  }
  for (auto* p : store.All()) p->value = best.Get(p->name).value;
  return result;
}

/// Writes an acoustic-only checkpoint readable by AccentModel::LoadAcoustic.
template <typename S>
void SaveAcousticCheckpoint(const std::string& path, const AcousticModel<S>& am, const ParameterStore<S>& store) {
  ACCENTFUSE_REQUIRE(am.prefix() == kTrainablePrefix, ContractError, "acoustic checkpoints use the am_t/ prefix");
  SaveCheckpoint(path, store, nlohmann::json{{"acoustic", am.config()}});
}

// ---------------------------------------------------------------------------
// Reports

inline void WriteStepCsvHeader(std::ostream& out) { out << "step,l_c,l_asr,l,lr\n"; }

inline void WriteStepCsvRow(std::ostream& out, const StepMetrics& m) {
  std::ostringstream line;
  line << std::setprecision(9) << m.step << ',' << m.l_c << ',' << m.l_asr << ',' << m.l << ',' << m.lr << '\n';
  out << line.str();
}

/// Column names of the per-accent report: the AESRC layout when the labels
/// are exactly the eight AESRC accents, accent-i otherwise.
inline std::vector<std::string> AccentColumns(const LabelVocab& accents) {
  std::vector<std::string> cols;
  for (int a = 0; a < accents.size(); ++a) cols.push_back(accents.Label(a));
  if (cols == AesrcAccentOrder()) return cols;
  for (int a = 0; a < accents.size(); ++a) cols[a] = "accent-" + std::to_string(a);
  return cols;
}

inline void WriteAccuracyCsvHeader(std::ostream& out, const std::vector<std::string>& columns,
                                   const std::string& first = "epoch") {
  out << first;
  for (const auto& c : columns) out << ',' << c;
  out << ",Total,PER\n";
}

/// One row of percentages (one decimal), blank for accents with no utterances.
inline void WriteAccuracyCsvRow(std::ostream& out, const std::string& first, const EvalResult& r) {
  std::ostringstream line;
  line << first << std::fixed << std::setprecision(1);
  for (size_t a = 0; a < r.per_accent_total.size(); ++a) {
    line << ',';
    if (r.per_accent_total[a] > 0) line << 100.0 * r.accent_accuracy(static_cast<int>(a));
  }
  line << ',' << 100.0 * r.accuracy() << ',';
  if (!std::isnan(r.per)) line << std::setprecision(4) << r.per;
  line << '\n';
  out << line.str();
}

}  // namespace accentfuse
