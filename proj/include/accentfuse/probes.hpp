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

// Analysis tools on a trained model: a linear speaker probe on the frozen
// utterance embedding A_c, the reference/trainable channel-attention ratio,
// and embedding export.

#pragma once

#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "accentfuse/training.hpp"

namespace accentfuse {

/// A_c of every listed utterance (eval mode), one row per utterance.
template <typename S>
MatF UtteranceEmbeddings(AccentModel<S>& model, const Dataset& ds, const std::vector<size_t>& indices,
                         int batch_size = 32) {
  MatF out(static_cast<Eigen::Index>(indices.size()), model.config().aggregation.d_attn);
  Eigen::Index row = 0;
  for (const auto& chunk : Chunk(indices, batch_size)) {
    Batch b = MakeBatch(ds, chunk);
    Graph<S> g;
    auto fw = model.Forward(g, g.Constant(b.x.template cast<S>()), b.segs, RunContext{});
    const auto& pooled = g.value(fw.aggregation.pooled);
    out.middleRows(row, pooled.rows()) = pooled.template cast<float>();
    row += pooled.rows();
  }
  ACCENTFUSE_REQUIRE(out.allFinite(), NumericError, "non-finite utterance embedding");
  return out;
}

inline std::vector<size_t> AllIndices(const Dataset& ds) {
  std::vector<size_t> idx(ds.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// ---------------------------------------------------------------------------
// Linear probe

struct ProbeConfig {
  double lr = 1e-4;
  int epochs = 20;
  int batch_size = 8;
  double valid_fraction = 0.2;
  std::uint64_t seed = 1;
};

struct ProbeResult {
  std::vector<std::pair<long, double>> loss_curve;      // (step, CE)
  std::vector<std::pair<int, double>> accuracy_curve;   // (epoch, validation accuracy)
  double final_accuracy = 0;
  int n_classes = 0;
};

/// Trains a fresh linear classifier on fixed feature rows. Only the probe's
/// own weights are updated.
inline ProbeResult TrainLinearProbe(const MatF& train_x, const std::vector<int>& train_y, const MatF& valid_x,
                                    const std::vector<int>& valid_y, int n_classes, const ProbeConfig& cfg) {
  ACCENTFUSE_REQUIRE(train_x.rows() == static_cast<Eigen::Index>(train_y.size()) &&
                         valid_x.rows() == static_cast<Eigen::Index>(valid_y.size()),
                     ContractError, "probe: features and labels differ in count");
  ACCENTFUSE_REQUIRE(train_x.rows() > 0 && valid_x.rows() > 0, ContractError, "probe needs train and valid rows");
  ParameterStore<float> store;
  Rng rng(DeriveSeed(cfg.seed, "probe-init"));
  AddLinear(store, "probe", static_cast<int>(train_x.cols()), n_classes, true, rng);
  Adam<float> opt(AdamOptions{cfg.lr});
  ProbeResult result;
  result.n_classes = n_classes;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order =
        ShuffledOrder(static_cast<size_t>(train_x.rows()), DeriveSeed(cfg.seed, "probe-epoch:" + std::to_string(epoch)));
    for (const auto& chunk : Chunk(order, cfg.batch_size)) {
      MatF x(static_cast<Eigen::Index>(chunk.size()), train_x.cols());
      std::vector<int> y;
      for (size_t i = 0; i < chunk.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = train_x.row(static_cast<Eigen::Index>(chunk[i]));
        y.push_back(train_y[chunk[i]]);
      }
      Graph<float> g;
      Var loss = CrossEntropyLoss(g, ApplyLinear(g, store, "probe", g.Constant(x)), y);
      store.ZeroGrad();
      g.Backprop(loss);
      opt.Step(store.All());
      result.loss_curve.emplace_back(++step, static_cast<double>(g.value(loss)(0, 0)));
    }
    Graph<float> g;
    const MatF z = g.value(ApplyLinear(g, store, "probe", g.Constant(valid_x)));
    int correct = 0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) correct += ArgMax(z.row(i)) == valid_y[static_cast<size_t>(i)];
    result.final_accuracy = static_cast<double>(correct) / static_cast<double>(z.rows());
    result.accuracy_curve.emplace_back(epoch, result.final_accuracy);
  }
  return result;
}

/// Speaker probe: the model is frozen, its A_c embeddings are computed once
/// and a fresh linear head A_c -> speaker is trained on an utterance-level
/// split in which every speaker appears on both sides.
template <typename S>
ProbeResult SpeakerProbe(AccentModel<S>& model, const Dataset& ds, const ProbeConfig& cfg) {
  const SplitIndices split = UtteranceSplit(ds.corpus, cfg.valid_fraction, DeriveSeed(cfg.seed, "probe-split"));
  CheckSpeakersInBoth(ds.corpus, split);
  const MatF train_x = UtteranceEmbeddings(model, ds, split.train);
  const MatF valid_x = UtteranceEmbeddings(model, ds, split.valid);
  // Speakers are renumbered over the ones actually present (m classes).
  std::map<int, int> dense;
  for (const auto& r : ds.corpus.records) dense.emplace(r.speaker, 0);
  int next = 0;
  for (auto& [_, id] : dense) id = next++;
  std::vector<int> train_y, valid_y;
  for (size_t i : split.train) train_y.push_back(dense.at(ds.corpus.records[i].speaker));
  for (size_t i : split.valid) valid_y.push_back(dense.at(ds.corpus.records[i].speaker));
  return TrainLinearProbe(train_x, train_y, valid_x, valid_y, next, cfg);
}

inline void WriteProbeCurves(std::ostream& loss_csv, std::ostream& acc_csv, const ProbeResult& r) {
  loss_csv << "step,ce\n" << std::setprecision(9);
  for (const auto& [s, l] : r.loss_curve) loss_csv << s << ',' << l << '\n';
  acc_csv << "epoch,accuracy\n" << std::setprecision(9);
  for (const auto& [e, a] : r.accuracy_curve) acc_csv << e << ',' << a << '\n';
}

// ---------------------------------------------------------------------------
// Channel-attention ratio

struct AttentionReport {
  RowVec<double> ca;  // mean CA over utterances, 2 d_emb entries
  double rho = 0;
  int n_utterances = 0;
};

/// Averages the CA vectors of all listed utterances, then takes the ratio of
/// the reference-half sum to the trainable-half sum.
template <typename S>
AttentionReport AttentionRatio(AccentModel<S>& model, const Dataset& ds, const std::vector<size_t>& indices,
                               int batch_size = 32) {
  ACCENTFUSE_REQUIRE(model.config().hybrid && model.config().fusion.mode == FusionMode::kConcatCa, ContractError,
                     "attention ratio needs a hybrid model with concat_ca fusion");
  ACCENTFUSE_REQUIRE(!indices.empty(), ContractError, "attention ratio over an empty set");
  AttentionReport rep;
  rep.ca = RowVec<double>::Zero(2 * model.config().acoustic.d_emb);
  for (const auto& chunk : Chunk(indices, batch_size)) {
    Batch b = MakeBatch(ds, chunk);
    Graph<S> g;
    auto fw = model.Forward(g, g.Constant(b.x.template cast<S>()), b.segs, RunContext{});
    const auto& ca = g.value(*fw.fusion->ca);
    for (Eigen::Index r = 0; r < ca.rows(); ++r) rep.ca += ca.row(r).template cast<double>();
  }
  rep.n_utterances = static_cast<int>(indices.size());
  rep.ca /= static_cast<double>(rep.n_utterances);
  rep.rho = ReferenceAttentionRatio(rep.ca);
  return rep;
}

/// One header line c0..c{2d-1},rho and one value line.
inline void WriteAttentionReport(std::ostream& out, const AttentionReport& r) {
  std::ostringstream line;
  for (Eigen::Index c = 0; c < r.ca.size(); ++c) line << 'c' << c << ',';
  line << "rho\n" << std::setprecision(9);
  for (Eigen::Index c = 0; c < r.ca.size(); ++c) line << r.ca[c] << ',';
  line << r.rho << '\n';
  out << line.str();
}

// ---------------------------------------------------------------------------
// Embedding export

/// CSV utt_id,accent,speaker,e0..e{d_attn-1}, one row per utterance.
template <typename S>
void ExportEmbeddings(AccentModel<S>& model, const Dataset& ds, std::ostream& out) {
  const auto idx = AllIndices(ds);
  const MatF emb = idx.empty() ? MatF(0, model.config().aggregation.d_attn) : UtteranceEmbeddings(model, ds, idx);
  std::ostringstream text;
  text << "utt_id,accent,speaker";
  for (Eigen::Index c = 0; c < emb.cols(); ++c) text << ",e" << c;
  text << '\n' << std::setprecision(9);
  for (size_t i = 0; i < idx.size(); ++i) {
    const auto& r = ds.corpus.records[i];
    text << r.utt_id << ',' << ds.corpus.accents.Label(r.accent) << ',' << ds.corpus.speakers.Label(r.speaker);
    for (Eigen::Index c = 0; c < emb.cols(); ++c) text << ',' << emb(static_cast<Eigen::Index>(i), c);
    text << '\n';
  }
  out << text.str();
}

}  // namespace accentfuse
