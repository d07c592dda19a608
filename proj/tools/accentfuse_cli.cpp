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

// Command-line front end. Every invocation writes into its own run directory
// and starts with a config.json echo holding the command, its explicit
// options and the resolved run configuration. Passing that echo back through
// --config repeats the run.
//
// Exit codes: 0 success, 1 user error (bad flags, bad input, bad config),
// 2 internal error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "accentfuse/accentfuse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace accentfuse;

namespace {

// ---------------------------------------------------------------------------
// Flags

/// Records flags of one subcommand. A flag either overrides a config value
/// (addressed by a JSON pointer into the run config) or is a plain command
/// option kept in the echo's "options" object.
class FlagSet {
 public:
  explicit FlagSet(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* Add(const std::string& flag, T& var, const std::string& pointer, const std::string& help) {
    CLI::Option* opt = app_->add_option(flag, var, help);
    Register(opt, flag, var, pointer);
    return opt;
  }

  CLI::Option* AddFlag(const std::string& flag, bool& var, const std::string& pointer, const std::string& help) {
    CLI::Option* opt = app_->add_flag(flag, var, help);
    Register(opt, flag, var, pointer);
    return opt;
  }

  /// Fills plain options not given on the command line from an echo.
  void Restore(const json& echo_options) {
    for (auto& f : restore_) f(echo_options);
  }

  /// Writes explicit flags into the config document and the options object.
  void Apply(json& doc, json& options) {
    for (auto& f : apply_) f(doc, options);
  }

  CLI::App* app() const { return app_; }

 private:
  template <typename T>
  void Register(CLI::Option* opt, const std::string& flag, T& var, const std::string& pointer) {
    const std::string key = flag.substr(flag.find_first_not_of('-'));
    apply_.push_back([opt, &var, key, pointer](json& doc, json& options) {
      if (opt->count() == 0) return;
      if (pointer.empty())
        options[key] = var;
      else
        doc[json::json_pointer(pointer)] = var;
    });
    if (pointer.empty())
      restore_.push_back([opt, &var, key](const json& echo) {
        if (opt->count() == 0 && echo.contains(key)) var = echo.at(key).get<T>();
      });
  }

  CLI::App* app_;
  std::vector<std::function<void(json&, json&)>> apply_;
  std::vector<std::function<void(const json&)>> restore_;
};

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string run_dir;
};

struct Options {
  // paths
  std::string manifest, valid_manifest, lexicon, hierarchy, checkpoint, init_checkpoint, reference_checkpoint;
  // synth
  int accents = 0, speakers = 0, utts = 0, substitutions = 0;
  double substitution_prob = 0, timbre = 0, noise = 0;
  std::string name;
  // training
  std::string regime, fusion;
  double lambda = 0, lr = 0;
  int epochs = 0, batch_size = 0, patience = 0;
  bool spec_augment = false;
  // degradation
  double theta = 0;
  std::string mode;
  // plain options
  std::vector<std::string> wav;
  bool normalize = false;
  std::string thetas = "0,0.5,1";
  bool random = false;
  std::string regimes = "mtl,hybrid";
  std::vector<std::string> from;
};

// ---------------------------------------------------------------------------
// Configuration and run directory

/// Drops module seeds that an echo recorded as derived from its global seed,
/// so a new --seed derives them afresh.
void StripDerivedSeeds(json& doc) {
  if (!doc.contains("seed")) return;
  const auto seed = doc.at("seed").get<std::uint64_t>();
  for (const char* section : {"train", "pretrain", "degradation", "probe", "synth"})
    if (doc.contains(section) && doc[section].contains("seed") &&
        doc[section]["seed"].get<std::uint64_t>() == DeriveSeed(seed, section))
      doc[section].erase("seed");
  if (doc.contains("synth") && doc["synth"].contains("table_seed") &&
      doc["synth"]["table_seed"].get<std::uint64_t>() == DeriveSeed(seed, "synth-table"))
    doc["synth"].erase("table_seed");
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  ACCENTFUSE_REQUIRE(in.good(), IoError, "cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string Timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return s.str();
}

struct Run {
  std::string command;
  RunConfig config;
  json options = json::object();
  fs::path dir;

  fs::path Out(const std::string& name) const { return dir / name; }
};

/// Defaults, then the config file, then explicit flags.
Run Resolve(const std::string& command, const Common& common, FlagSet& flags) {
  Run run;
  run.command = command;
  json doc = json::object();
  if (!common.config.empty()) {
    json file = ReadJsonFile(common.config);
    if (file.contains("config") && file.contains("command")) {
      flags.Restore(file.value("options", json::object()));
      doc = file.at("config");
      StripDerivedSeeds(doc);
    } else {
      doc = std::move(file);
    }
  }
  if (flags.app()->get_option("--seed")->count() > 0) {
    StripDerivedSeeds(doc);
    doc["seed"] = common.seed;
  }
  flags.Apply(doc, run.options);
  run.config = ParseRunConfig(doc);

  if (!common.run_dir.empty()) {
    run.dir = common.run_dir;
  } else {
    const char* root = std::getenv("ACCENTFUSE_RUN_ROOT");
    const fs::path base = root != nullptr && *root != '\0' ? fs::path(root) : fs::path("runs");
    const std::string stem = command + "-" + Timestamp() + "-seed" + std::to_string(run.config.seed);
    run.dir = base / stem;
    for (int k = 2; fs::exists(run.dir); ++k) run.dir = base / (stem + "-" + std::to_string(k));
  }
  fs::create_directories(run.dir);
  std::ofstream echo(run.Out("config.json"));
  echo << json{{"command", command}, {"options", run.options}, {"config", run.config}}.dump(2) << "\n";
  ACCENTFUSE_REQUIRE(echo.good(), IoError, "cannot write " + run.Out("config.json").string());
  std::cout << "run directory: " << run.dir.string() << "\n";
  return run;
}

// ---------------------------------------------------------------------------
// Shared steps

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path);
  ACCENTFUSE_REQUIRE(out.good(), IoError, "cannot write " + path.string());
  return out;
}

std::string Require(const std::string& value, const std::string& what) {
  ACCENTFUSE_REQUIRE(!value.empty(), ConfigError, what + " is required");
  return value;
}

struct Resources {
  std::optional<Lexicon> lexicon;
  PhonemeHierarchy hierarchy = PhonemeHierarchy::Default();
};

Resources LoadResources(const RunConfig& c) {
  Resources r;
  if (!c.paths.lexicon.empty()) r.lexicon = LoadLexicon(c.paths.lexicon);
  if (!c.paths.hierarchy.empty()) r.hierarchy = PhonemeHierarchy::Load(c.paths.hierarchy);
  return r;
}

Dataset LoadCorpus(const std::string& manifest, const Resources& res, const LabelVocab* accents = nullptr) {
  ManifestOptions opts;
  opts.lexicon = res.lexicon ? &*res.lexicon : nullptr;
  opts.hierarchy = &res.hierarchy;
  opts.accent_vocab = accents;
  Dataset ds = LoadDataset(manifest, opts);
  ACCENTFUSE_REQUIRE(ds.size() > 0, ConfigError, "manifest has no utterances: " + manifest);
  return ds;
}

/// Training and validation sets: an explicit validation manifest, or whole
/// speakers held out of the training manifest.
std::pair<Dataset, Dataset> TrainValid(const RunConfig& c, const Resources& res) {
  Dataset all = LoadCorpus(Require(c.paths.manifest, "--manifest"), res);
  if (!c.paths.valid_manifest.empty()) {
    LabelVocab accents = all.corpus.accents;
    accents.Freeze();
    return {std::move(all), LoadCorpus(c.paths.valid_manifest, res, &accents)};
  }
  const auto split = SpeakerDisjointSplit(all.corpus, c.val_speakers_per_accent, DeriveSeed(c.seed, "split"));
  return {all.Subset(split.train), all.Subset(split.valid)};
}

int LabelCountFor(const Dataset& ds, const PhonemeHierarchy& h) {
  for (const auto& r : ds.corpus.records)
    for (int p : r.transcript_phonemes)
      if (p >= kPhonemeClasses) return h.label_count();
  return kPhonemeClasses;
}

ModelConfig ModelFor(const RunConfig& c, const Dataset& train, Regime regime, int n_labels) {
  ModelConfig m = c.model;
  m.hybrid = regime == Regime::kHybrid;
  m.fusion.mode = c.train.fusion;
  m.acoustic.n_labels = n_labels;
  m.aggregation.d_accent = train.corpus.accents.size();
  m.accent_labels = train.corpus.accents.labels();
  m.SyncWidths();
  m.Validate();
  return m;
}

void LoadPretrained(AccentModel<float>& model, const RunConfig& c, Regime regime, bool pretrained_am_t) {
  if (regime == Regime::kAsrInit)
    Require(c.paths.init_checkpoint, "--init-checkpoint (the asr_init regime starts from a pretrained model)");
  if (pretrained_am_t && regime != Regime::kArOnly && !c.paths.init_checkpoint.empty())
    model.LoadAcoustic(c.paths.init_checkpoint, kTrainablePrefix);
  if (regime == Regime::kHybrid)
    model.LoadAcoustic(Require(c.paths.reference_checkpoint, "--reference-checkpoint (hybrid needs a frozen AM_f)"),
                       kReferencePrefix);
}

AccentModel<float> LoadModel(const RunConfig& c) {
  return AccentModel<float>::FromCheckpoint(Require(c.paths.checkpoint, "--checkpoint"));
}

Dataset CorpusForModel(const RunConfig& c, const AccentModel<float>& model, const Resources& res) {
  const LabelVocab accents = LabelVocab::FromLabels(model.config().accent_labels);
  return LoadCorpus(Require(c.paths.manifest, "--manifest"), res, accents.size() > 0 ? &accents : nullptr);
}

std::vector<double> ParseList(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      ACCENTFUSE_REQUIRE(used == item.size(), ConfigError, "not a number: " + item);
    } catch (const std::logic_error&) {
      throw ConfigError("not a number: " + item);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

void CmdSynth(const Run& run) {
  const auto sc = GenerateSyntheticCorpus(run.config.synth.ToSpec());
  const std::string manifest = WriteSyntheticCorpus(sc, run.Out("corpus").string());
  std::cout << "wrote " << sc.dataset.size() << " utterances\nmanifest: " << manifest << "\n";
}

void CmdFeatures(const Run& run, const Options& o) {
  ACCENTFUSE_REQUIRE(!o.wav.empty(), ConfigError, "--wav is required");
  fs::create_directories(run.Out("features"));
  FbankOptions opts;
  opts.normalize = o.normalize;
  for (const auto& path : o.wav) {
    const WavData wav = ReadWav(path);
    const FeatureSequence f = ExtractFbank(wav.samples, wav.sample_rate, opts);
    const fs::path out = run.Out("features") / (fs::path(path).stem().string() + ".fbk");
    WriteFeatures(out.string(), f);
    std::cout << path << ": " << f.valid_length << " frames -> " << out.string() << "\n";
  }
}

void CmdPretrain(const Run& run) {
  const RunConfig& c = run.config;
  const Resources res = LoadResources(c);
  auto [train, valid] = TrainValid(c, res);
  AcousticConfig ac = c.model.acoustic;
  ac.n_labels = LabelCountFor(train, res.hierarchy);
  AcousticModel<float> am(ac, kTrainablePrefix);
  ParameterStore<float> store;
  Rng rng(DeriveSeed(c.seed, "acoustic-init"));
  am.Init(store, rng);
  const auto result = PretrainAsr(am, store, train, valid, c.pretrain, &std::cout);
  auto csv = OpenOut(run.Out("pretrain.csv"));
  csv << "epoch,train_ctc,valid_per\n" << std::setprecision(9);
  for (const auto& e : result.epochs) csv << e.epoch << ',' << e.train_ctc << ',' << e.valid_per << '\n';
  SaveAcousticCheckpoint(run.Out("acoustic.ckpt").string(), am, store);
  std::cout << "best validation PER " << result.best_per << " at epoch " << result.best_epoch
            << "\ncheckpoint: " << run.Out("acoustic.ckpt").string() << "\n";
}

void CmdTrain(const Run& run) {
  const RunConfig& c = run.config;
  const Resources res = LoadResources(c);
  auto [train, valid] = TrainValid(c, res);
  AccentModel<float> model(ModelFor(c, train, c.train.regime, LabelCountFor(train, res.hierarchy)));
  model.Init(DeriveSeed(c.seed, "model"));
  LoadPretrained(model, c, c.train.regime, true);

  auto steps = OpenOut(run.Out("steps.csv"));
  auto acc = OpenOut(run.Out("accuracy.csv"));
  WriteStepCsvHeader(steps);
  WriteAccuracyCsvHeader(acc, AccentColumns(train.corpus.accents));
  TrainObserver obs;
  obs.on_step = [&](const StepMetrics& m) { WriteStepCsvRow(steps, m); };
  obs.on_epoch = [&](const EpochMetrics& e) {
    WriteAccuracyCsvRow(acc, std::to_string(e.epoch), e.valid);
    acc.flush();
    std::cout << "epoch " << e.epoch << " loss " << e.train_loss << " valid accuracy " << e.valid.accuracy() << "\n";
  };
  const auto result = TrainAccentModel(model, train, valid, c.train, obs);
  model.Save(run.Out("model.ckpt").string());
  std::cout << "best validation accuracy " << result.best_accuracy << " at epoch " << result.best_epoch
            << "\ncheckpoint: " << run.Out("model.ckpt").string() << "\n";
}

void CmdEvaluate(const Run& run) {
  const Resources res = LoadResources(run.config);
  AccentModel<float> model = LoadModel(run.config);
  const Dataset ds = CorpusForModel(run.config, model, res);
  const EvalResult r = Evaluate(model, ds, AllIndices(ds));
  std::ostringstream table;
  WriteAccuracyCsvHeader(table, AccentColumns(LabelVocab::FromLabels(model.config().accent_labels)), "model");
  WriteAccuracyCsvRow(table, fs::path(run.config.paths.checkpoint).filename().string(), r);
  OpenOut(run.Out("evaluation.csv")) << table.str();
  std::cout << table.str();
}

void CmdDegrade(const Run& run) {
  const RunConfig& c = run.config;
  const Resources res = LoadResources(c);
  const std::string manifest = Require(c.paths.manifest, "--manifest");
  ManifestOptions opts;
  opts.lexicon = res.lexicon ? &*res.lexicon : nullptr;
  opts.hierarchy = &res.hierarchy;
  Corpus corpus = LoadManifest(manifest, opts);
  const fs::path base = fs::absolute(manifest).parent_path();
  for (auto& r : corpus.records)
    if (fs::path(r.features_path).is_relative()) r.features_path = (base / r.features_path).string();
  const Corpus degraded = DegradeCorpus(corpus, res.hierarchy, c.degradation);
  WriteDegradedManifest(run.Out("degraded.jsonl").string(), degraded, res.hierarchy);
  std::cout << "degraded " << degraded.records.size() << " transcripts ("
            << ToString(c.degradation.mode) << ", theta " << c.degradation.theta << ")\nmanifest: "
            << run.Out("degraded.jsonl").string() << "\n";
}

void CmdRobustness(const Run& run, const Options& o) {
  const RunConfig& c = run.config;
  const Resources res = LoadResources(c);
  auto [train, valid] = TrainValid(c, res);
  std::vector<Regime> regimes;
  std::stringstream in(o.regimes);
  for (std::string item; std::getline(in, item, ',');) regimes.push_back(ParseRegime(item));
  const auto conditions = RobustnessConditions(ParseList(o.thetas), o.random, c.degradation.seed);
  CellTrainer trainer = [&](const Dataset& tr, const Dataset& va, Regime regime, int labels,
                            const TranscriptCondition& cond) {
    AccentModel<float> model(ModelFor(c, tr, regime, labels));
    model.Init(DeriveSeed(c.seed, "model"));
    // AM_t is not pretrained for the random-transcript rows.
    LoadPretrained(model, c, regime, !cond.random());
    TrainConfig tc = c.train;
    tc.regime = regime;
    TrainAccentModel(model, tr, va, tc);
    std::cout << ToString(regime) << " " << cond.name << " done\n";
    return Evaluate(model, va, AllIndices(va));
  };
  const auto cells = RunRobustnessSuite(train, valid, res.hierarchy, conditions, regimes, trainer);
  std::ostringstream table;
  WriteRobustnessTable(table, cells, AccentColumns(train.corpus.accents));
  OpenOut(run.Out("robustness.csv")) << table.str();
  std::cout << table.str();
}

void CmdProbe(const Run& run) {
  const Resources res = LoadResources(run.config);
  AccentModel<float> model = LoadModel(run.config);
  const Dataset ds = CorpusForModel(run.config, model, res);
  const auto r = SpeakerProbe(model, ds, run.config.probe);
  auto loss = OpenOut(run.Out("probe_loss.csv"));
  auto acc = OpenOut(run.Out("probe_accuracy.csv"));
  WriteProbeCurves(loss, acc, r);
  std::cout << "speaker probe accuracy " << r.final_accuracy << " over " << r.n_classes << " speakers\n";
}

void CmdAttention(const Run& run) {
  const Resources res = LoadResources(run.config);
  AccentModel<float> model = LoadModel(run.config);
  const Dataset ds = CorpusForModel(run.config, model, res);
  const auto r = AttentionRatio(model, ds, AllIndices(ds));
  auto out = OpenOut(run.Out("attention.csv"));
  WriteAttentionReport(out, r);
  std::cout << "rho " << std::setprecision(6) << r.rho << " over " << r.n_utterances << " utterances\n";
}

void CmdExport(const Run& run) {
  const Resources res = LoadResources(run.config);
  AccentModel<float> model = LoadModel(run.config);
  const Dataset ds = CorpusForModel(run.config, model, res);
  auto out = OpenOut(run.Out("embeddings.csv"));
  ExportEmbeddings(model, ds, out);
  std::cout << "exported " << ds.size() << " embeddings to " << run.Out("embeddings.csv").string() << "\n";
}

/// Markdown summary of earlier run directories.
void CmdReport(const Run& run, const Options& o) {
  ACCENTFUSE_REQUIRE(!o.from.empty(), ConfigError, "--from is required");
  std::ostringstream md;
  for (const auto& dir : o.from) {
    const json echo = ReadJsonFile((fs::path(dir) / "config.json").string());
    md << "## " << echo.value("command", std::string("?")) << " (" << dir << ")\n\n";
    for (const char* name : {"evaluation.csv", "accuracy.csv", "robustness.csv", "pretrain.csv", "probe_accuracy.csv",
                             "attention.csv"}) {
      std::ifstream in(fs::path(dir) / name);
      if (!in) continue;
      std::vector<std::string> lines;
      for (std::string line; std::getline(in, line);) lines.push_back(line);
      if (lines.empty()) continue;
      // Long curves are summarized by their last row.
      const bool last_only = lines.size() > 12 || std::string(name) == "attention.csv";
      md << "`" << name << "`\n\n";
      auto row = [&md](const std::string& line) {
        std::string cells = line;
        for (auto& ch : cells)
          if (ch == ',') ch = '|';
        md << '|' << cells << "|\n";
      };
      if (std::string(name) == "attention.csv") {
        const std::string rho = lines.back().substr(lines.back().rfind(',') + 1);
        md << "rho = " << rho << "\n\n";
        continue;
      }
      row(lines[0]);
      md << '|';
      for (auto n = std::count(lines[0].begin(), lines[0].end(), ',') + 1; n > 0; --n) md << "---|";
      md << '\n';
      if (last_only)
        row(lines.back());
      else
        for (size_t i = 1; i < lines.size(); ++i) row(lines[i]);
      md << '\n';
    }
  }
  OpenOut(run.Out("report.md")) << md.str();
  std::cout << md.str();
}

// ---------------------------------------------------------------------------

void AddCommon(CLI::App* sub, Common& common) {
  sub->add_option("--config", common.config, "JSON run config or a config.json echo");
  sub->add_option("--seed", common.seed, "global seed");
  sub->add_option("--run-dir", common.run_dir, "output directory (default: $ACCENTFUSE_RUN_ROOT or runs/)");
}

void AddData(FlagSet& f, Options& o) {
  f.Add("--manifest", o.manifest, "/paths/manifest", "corpus manifest (JSONL)");
  f.Add("--lexicon", o.lexicon, "/paths/lexicon", "pronunciation lexicon");
  f.Add("--hierarchy", o.hierarchy, "/paths/hierarchy", "phoneme hierarchy table");
}

void AddTraining(FlagSet& f, Options& o) {
  f.Add("--valid-manifest", o.valid_manifest, "/paths/valid_manifest", "validation manifest");
  f.Add("--fusion", o.fusion, "/train/fusion", "add, concat or concat_ca");
  f.Add("--lambda", o.lambda, "/train/lambda", "weight of the CTC term");
  f.Add("--lr", o.lr, "/train/lr", "learning rate");
  f.Add("--epochs", o.epochs, "/train/max_epochs", "training epochs");
  f.Add("--batch-size", o.batch_size, "/train/batch_size", "utterances per batch");
  f.AddFlag("--spec-augment", o.spec_augment, "/train/spec_augment", "apply SpecAugment to training batches");
  f.Add("--init-checkpoint", o.init_checkpoint, "/paths/init_checkpoint", "pretrained acoustic checkpoint for AM_t");
  f.Add("--reference-checkpoint", o.reference_checkpoint, "/paths/reference_checkpoint",
        "pretrained acoustic checkpoint for the frozen AM_f");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"accentfuse: accent recognition with phonetic multi-task learning and embedding fusion"};
  app.require_subcommand(1);
  Common common;
  Options o;
  std::map<std::string, std::unique_ptr<FlagSet>> flags;
  auto sub = [&](const std::string& name, const std::string& help) -> FlagSet& {
    CLI::App* s = app.add_subcommand(name, help);
    AddCommon(s, common);
    return *(flags[name] = std::make_unique<FlagSet>(s));
  };

  {
    auto& f = sub("synth", "generate a synthetic accented corpus");
    f.Add("--accents", o.accents, "/synth/n_accents", "number of accents");
    f.Add("--speakers", o.speakers, "/synth/n_speakers_per_accent", "speakers per accent");
    f.Add("--utts", o.utts, "/synth/n_utts_per_speaker", "utterances per speaker");
    f.Add("--substitutions", o.substitutions, "/synth/substitutions_per_accent", "phoneme substitutions per accent");
    f.Add("--substitution-prob", o.substitution_prob, "/synth/substitution_prob", "probability of each substitution");
    f.Add("--timbre", o.timbre, "/synth/timbre_std", "speaker timbre scale");
    f.Add("--noise", o.noise, "/synth/noise_std", "frame noise scale");
    f.Add("--name", o.name, "/synth/name", "corpus name");
  }
  {
    auto& f = sub("features", "extract log-mel filterbank features from WAV files");
    f.Add("--wav", o.wav, "", "16 kHz mono PCM WAV file (repeatable)");
    f.AddFlag("--normalize", o.normalize, "", "per-utterance mean and variance normalization");
  }
  {
    auto& f = sub("pretrain-asr", "pretrain an acoustic model with CTC");
    AddData(f, o);
    f.Add("--valid-manifest", o.valid_manifest, "/paths/valid_manifest", "validation manifest");
    f.Add("--lr", o.lr, "/pretrain/lr", "learning rate");
    f.Add("--epochs", o.epochs, "/pretrain/max_epochs", "maximum epochs");
    f.Add("--batch-size", o.batch_size, "/pretrain/batch_size", "utterances per batch");
    f.Add("--patience", o.patience, "/pretrain/patience", "epochs without PER improvement before stopping");
    f.AddFlag("--spec-augment", o.spec_augment, "/pretrain/spec_augment", "apply SpecAugment");
  }
  {
    auto& f = sub("train", "train an accent recognizer");
    AddData(f, o);
    AddTraining(f, o);
    f.Add("--regime", o.regime, "/train/regime", "ar_only, asr_init, mtl or hybrid");
  }
  {
    auto& f = sub("evaluate", "per-accent accuracy of a trained model");
    AddData(f, o);
    f.Add("--checkpoint", o.checkpoint, "/paths/checkpoint", "model checkpoint");
  }
  {
    auto& f = sub("degrade", "write a manifest with corrupted transcripts");
    AddData(f, o);
    f.Add("--theta", o.theta, "/degradation/theta", "probability of mapping a phoneme to its group");
    f.Add("--mode", o.mode, "/degradation/mode", "hierarchy or random");
  }
  {
    auto& f = sub("robustness", "train and evaluate under corrupted transcripts");
    AddData(f, o);
    AddTraining(f, o);
    f.Add("--theta", o.thetas, "", "comma-separated theta values");
    f.AddFlag("--random", o.random, "", "add the random-transcript condition");
    f.Add("--regimes", o.regimes, "", "comma-separated regimes (mtl, hybrid)");
  }
  {
    auto& f = sub("probe-speaker", "linear speaker probe on the frozen utterance embedding");
    AddData(f, o);
    f.Add("--checkpoint", o.checkpoint, "/paths/checkpoint", "model checkpoint");
    f.Add("--lr", o.lr, "/probe/lr", "probe learning rate");
    f.Add("--epochs", o.epochs, "/probe/epochs", "probe epochs");
    f.Add("--batch-size", o.batch_size, "/probe/batch_size", "probe batch size");
  }
  {
    auto& f = sub("attention-report", "mean channel attention and reference ratio of a hybrid model");
    AddData(f, o);
    f.Add("--checkpoint", o.checkpoint, "/paths/checkpoint", "model checkpoint");
  }
  {
    auto& f = sub("export-embeddings", "write utterance embeddings as CSV");
    AddData(f, o);
    f.Add("--checkpoint", o.checkpoint, "/paths/checkpoint", "model checkpoint");
  }
  {
    auto& f = sub("report", "summarize earlier run directories");
    f.Add("--from", o.from, "", "run directory (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    const Run run = Resolve(command, common, *flags.at(command));
    if (command == "synth") CmdSynth(run);
    if (command == "features") CmdFeatures(run, o);
    if (command == "pretrain-asr") CmdPretrain(run);
    if (command == "train") CmdTrain(run);
    if (command == "evaluate") CmdEvaluate(run);
    if (command == "degrade") CmdDegrade(run);
    if (command == "robustness") CmdRobustness(run, o);
    if (command == "probe-speaker") CmdProbe(run);
    if (command == "attention-report") CmdAttention(run);
    if (command == "export-embeddings") CmdExport(run);
    if (command == "report") CmdReport(run, o);
    return 0;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
