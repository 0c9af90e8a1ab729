// Copyright 2026 The speechverifier Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "speechverifier/audio.h"
#include "speechverifier/config.h"
#include "speechverifier/corpus.h"
#include "speechverifier/error.h"
#include "speechverifier/eval.h"

namespace speechverifier::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path Resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::vector<Utterance> LoadManifestCorpus(const fs::path& manifest, const ToolkitConfig& config,
                                          const char* role) {
  if (manifest.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config has no ") + role + " manifest");
  }
  return LoadCorpus(ReadManifest(manifest), config.features.sample_rate);
}

// Decisions at the full-size threshold are meaningless for a narrower model.
void CheckTheta(const ModelCheckpoint& checkpoint, int theta, bool allow_default_theta) {
  if (theta == kFullModelTheta && IsDeskCheckpoint(checkpoint) && !allow_default_theta) {
    throw Error(ErrorCode::kConfigMismatch,
                "theta 42 is calibrated for the full-size model; run 'calibrate' for this "
                "checkpoint or pass --allow-default-theta");
  }
}

ModelCheckpoint LoadCheckedCheckpoint(const ToolkitConfig& config, bool force) {
  ModelCheckpoint ckpt = LoadCheckpoint(config.CheckpointPath());
  if (!force && !ckpt.config_hash.empty() && ckpt.config_hash != config.TrainingHash()) {
    throw Error(ErrorCode::kConfigMismatch,
                "checkpoint was trained under config " + ckpt.config_hash + " but the config hashes to " +
                    config.TrainingHash() + "; pass --force to use it anyway");
  }
  return ckpt;
}

json IntervalsJson(const std::vector<Interval>& intervals, int rate) {
  json out = json::array();
  for (const Interval& i : intervals) {
    out.push_back({{"start", i.start},
                   {"end", i.end},
                   {"start_s", static_cast<double>(i.start) / rate},
                   {"end_s", static_cast<double>(i.end) / rate}});
  }
  return out;
}

json CalibrationJson(const Calibration& c) {
  return {{"theta", c.theta}, {"eer", c.eer}, {"fpr", c.fpr}, {"fnr", c.fnr}};
}

// Shared command state filled in by CLI11.
struct Options {
  std::string config_path;
  bool force = false;
  bool allow_default_theta = false;
  int jobs = 1;
  std::optional<int> theta;

  // corpus
  std::string corpus_dir;
  std::string scan_dir;
  std::string manifest_out;
  int utterances = 100;
  int speakers = 10;
  double min_seconds = 4.0;
  double max_seconds = 6.0;
  std::uint64_t seed = 7;

  // init-config
  std::string config_out;

  // train
  std::optional<int> epochs;
  std::string resume;

  // sign / verify / simulate
  std::string input;
  std::string output;
  std::string op;
  std::string donor;
  std::optional<std::uint64_t> op_seed;

  // evaluate / study
  std::vector<double> tts_ratios;
  bool samples = false;
  std::string study;
  std::string manifest;
  int bins = 32;
};

std::string ConfigPath(const Options& o) {
  std::string path = o.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("SPEECHVERIFIER_CONFIG")) path = env;
  }
  if (path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no config: pass --config or set SPEECHVERIFIER_CONFIG");
  }
  return path;
}

ToolkitConfig ConfigFor(const Options& o) {
  ToolkitConfig c = LoadConfig(ConfigPath(o));
  if (o.theta) c.theta = *o.theta;
  return c;
}

int CmdCorpus(const Options& o, std::ostream& out) {
  std::vector<ManifestEntry> entries;
  fs::path manifest;
  if (!o.scan_dir.empty()) {
    entries = ScanWavDirectory(o.scan_dir);
    manifest = o.manifest_out.empty() ? fs::path(o.scan_dir) / "manifest.jsonl" : fs::path(o.manifest_out);
    WriteManifest(entries, manifest);
  } else {
    if (o.corpus_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "corpus needs --synthetic or --scan");
    entries = WriteSyntheticCorpus(o.corpus_dir, o.utterances, o.speakers, o.min_seconds,
                                   o.max_seconds, o.seed);
    manifest = fs::path(o.corpus_dir) / "manifest.jsonl";
  }
  out << json{{"manifest", manifest.string()}, {"utterances", entries.size()}}.dump() << "\n";
  return kExitOk;
}

int CmdInitConfig(const Options& o, std::ostream& out) {
  const fs::path path = o.config_out;
  if (fs::exists(path) && !o.force) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + " exists; pass --force to overwrite");
  }
  SaveConfig(ToolkitConfig{}, path);
  out << path.string() << "\n";
  return kExitOk;
}

int CmdTrain(const Options& o, std::ostream& out) {
  ToolkitConfig config = ConfigFor(o);
  if (o.epochs) config.training.epochs = *o.epochs;
  const auto train = LoadManifestCorpus(config.train_manifest, config, "train");
  std::vector<Utterance> dev;
  if (!config.dev_manifest.empty()) dev = LoadManifestCorpus(config.dev_manifest, config, "dev");

  fs::create_directories(config.output_dir);
  if (config.CheckpointPath().has_parent_path()) {
    fs::create_directories(config.CheckpointPath().parent_path());
  }
  TrainOptions options;
  options.checkpoint_dir = config.output_dir / "checkpoints";
  options.log_path = config.output_dir / "train_log.csv";
  if (!o.resume.empty()) options.resume = LoadCheckpoint(o.resume);
  options.on_epoch = [&](const EpochStats& s) {
    json line = {{"epoch", s.epoch}, {"step", s.step}, {"lr", s.lr}, {"loss", s.loss}};
    if (s.dev_gap_bits) line["dev_gap_bits"] = *s.dev_gap_bits;
    out << line.dump() << "\n" << std::flush;
  };
  ModelCheckpoint ckpt = Train(train, dev, config.model, config.features, config.training, options);
  ckpt.config_hash = config.TrainingHash();
  SaveCheckpoint(ckpt, config.CheckpointPath());
  out << json{{"checkpoint", config.CheckpointPath().string()},
              {"checkpoint_id", CheckpointId(ckpt)},
              {"log", options.log_path.string()}}
             .dump()
      << "\n";
  return kExitOk;
}

int CmdSign(const Options& o, std::ostream& out) {
  const ToolkitConfig config = ConfigFor(o);
  const ModelCheckpoint ckpt = LoadCheckedCheckpoint(config, o.force);
  const Waveform input = Resample(ReadWav(o.input), config.watermark.sample_rate);
  const SignedAudio signed_audio = Sign(input, ckpt, config.watermark);
  WriteWav(signed_audio.audio, o.output);
  const json sidecar = {{"fingerprint", signed_audio.fingerprint.ToHex()},
                        {"checkpoint_id", CheckpointId(ckpt)},
                        {"config_hash", VerifierConfigHash(ckpt, config.Verifier())}};
  WriteText(o.output + ".json", sidecar.dump(2) + "\n");
  out << signed_audio.fingerprint.ToHex() << "\n";
  return kExitOk;
}

int CmdVerify(const Options& o, std::ostream& out) {
  const ToolkitConfig config = ConfigFor(o);
  const ModelCheckpoint ckpt = LoadCheckedCheckpoint(config, o.force);
  CheckTheta(ckpt, config.theta, o.allow_default_theta);
  const Waveform input = Resample(ReadWav(o.input), config.watermark.sample_rate);
  const VerificationResult r = Verify(input, ckpt, config.Verifier());
  out << VerificationReport(o.input, r, config.Verifier(), ckpt).dump(2) << "\n";
  return r.decision == Decision::kAccept ? kExitOk : kExitReject;
}

int CmdSimulate(const Options& o, std::ostream& out) {
  OpSpec spec = ParseOpSpec(o.op);
  const Waveform input = ReadWav(o.input);
  json record = {{"op", o.op}, {"input", o.input}, {"output", o.output}};
  Waveform result;
  if (spec.benign) {
    result = ApplyBenign(input, spec.benign_op);
    record["edited_intervals"] = json::array();
  } else {
    MaliciousOp& op = spec.malicious_op;
    op.seed = o.op_seed.value_or(o.seed);
    if (RequiresDonor(op.kind)) {
      if (o.donor.empty()) {
        throw Error(ErrorCode::kInvalidArgument, MaliciousKindName(op.kind) + " needs --donor");
      }
      op.donor = std::make_shared<const Waveform>(Resample(ReadWav(o.donor), input.sample_rate));
    }
    TamperRecord t = ApplyMalicious(input, op);
    record["seed"] = op.seed;
    record["edited_intervals"] = IntervalsJson(t.edited_intervals, input.sample_rate);
    record["interval_coordinates"] = op.kind == MaliciousKind::kDeletion ? "input" : "output";
    result = std::move(t.output);
  }
  WriteWav(result, o.output);
  record["duration_s"] = static_cast<double>(result.samples.size()) / result.sample_rate;
  WriteText(o.output + ".json", record.dump(2) + "\n");
  out << record.dump() << "\n";
  return kExitOk;
}

std::vector<OpCase> EvalOps(const Options& o) {
  std::vector<OpCase> ops = DefaultOpMatrix();
  if (!o.tts_ratios.empty()) {
    for (OpCase& c : TtsSweepMatrix(o.tts_ratios)) ops.push_back(std::move(c));
  }
  return ops;
}

int CmdCalibrate(const Options& o, std::ostream& out) {
  ToolkitConfig config = ConfigFor(o);
  const ModelCheckpoint ckpt = LoadCheckedCheckpoint(config, o.force);
  const auto dev = LoadManifestCorpus(config.dev_manifest, config, "dev");
  const EvalReport report = RunProtocol(dev, ckpt, config.Verifier(), DefaultOpMatrix(),
                                        config.seed, o.jobs);
  std::vector<int> distances;
  std::vector<Label> labels;
  for (const SampleScore& s : report.samples) {
    distances.push_back(s.distance);
    labels.push_back(s.label);
  }
  const Calibration c = CalibrateThreshold(distances, labels, ckpt.model.fingerprint_bits);
  config.theta = c.theta;
  const std::string path = ConfigPath(o);
  SaveConfig(config, path);
  json j = CalibrationJson(c);
  j["config"] = path;
  j["samples"] = distances.size();
  out << j.dump() << "\n";
  return kExitOk;
}

int CmdEvaluate(const Options& o, std::ostream& out) {
  const ToolkitConfig config = ConfigFor(o);
  const ModelCheckpoint ckpt = LoadCheckedCheckpoint(config, o.force);
  CheckTheta(ckpt, config.theta, o.allow_default_theta);
  const auto test = LoadManifestCorpus(config.test_manifest, config, "test");
  const EvalReport report = RunProtocol(test, ckpt, config.Verifier(), EvalOps(o), config.seed, o.jobs);
  json j = ReportToJson(report);
  if (!o.samples) j.erase("samples");
  WriteText(config.output_dir / "eval_report.json", j.dump(2) + "\n");
  WriteText(config.output_dir / "eval_report.csv", ReportToCsv(report));
  out << ReportToCsv(report);
  return kExitOk;
}

int CmdStudy(const Options& o, std::ostream& out) {
  const ToolkitConfig config = ConfigFor(o);
  const fs::path manifest = o.manifest.empty() ? config.test_manifest : fs::path(o.manifest);
  const auto corpus = LoadManifestCorpus(manifest, config, "test");
  DistributionReport r;
  double lo = 0.0;
  double hi = 0.0;
  if (o.study == "similarity") {
    r = SimilarityStudy(corpus, config.seed);
    lo = -1.0;
    hi = 1.0;
  } else {
    r = Sha256Study(corpus, config.seed);
    hi = 256.0;
  }
  WriteText(config.output_dir / (o.study + "_histogram.csv"), r.HistogramCsv(lo, hi, o.bins));
  WriteText(config.output_dir / (o.study + "_summary.json"), r.Summary().dump(2) + "\n");
  out << r.Summary().dump() << "\n";
  return kExitOk;
}

}  // namespace

fs::path ToolkitConfig::CheckpointPath() const {
  return checkpoint.empty() ? output_dir / "model.svck" : checkpoint;
}

std::string ToolkitConfig::TrainingHash() const {
  return CanonicalHash(json{{"model", model}, {"features", features}, {"training", training}});
}

VerifierConfig ToolkitConfig::Verifier() const {
  VerifierConfig v;
  v.theta = theta;
  v.watermark = watermark;
  return v;
}

json ConfigToJson(const ToolkitConfig& c) {
  return {{"schema_version", kConfigSchemaVersion},
          {"seed", c.seed},
          {"output_dir", c.output_dir.string()},
          {"checkpoint", c.checkpoint.string()},
          {"corpus",
           {{"train", c.train_manifest.string()},
            {"dev", c.dev_manifest.string()},
            {"test", c.test_manifest.string()}}},
          {"model", c.model},
          {"features", c.features},
          {"training", c.training},
          {"watermark", c.watermark},
          {"verifier",
           {{"theta", c.theta},
            {"_comment", "42 is the full-size model's threshold; desk checkpoints must be calibrated"}}}};
}

ToolkitConfig ConfigFromJson(const json& j, const fs::path& base) {
  const int version = j.value("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "config schema_version " + std::to_string(version) + " is not supported");
  }
  ToolkitConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.output_dir = Resolve(base, j.value("output_dir", c.output_dir.string()));
    c.checkpoint = Resolve(base, j.value("checkpoint", std::string()));
    if (j.contains("corpus")) {
      const json& corpus = j.at("corpus");
      c.train_manifest = Resolve(base, corpus.value("train", std::string()));
      c.dev_manifest = Resolve(base, corpus.value("dev", std::string()));
      c.test_manifest = Resolve(base, corpus.value("test", std::string()));
    }
    if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
    if (j.contains("features")) c.features = j.at("features").get<MfccConfig>();
    if (j.contains("training")) c.training = j.at("training").get<TrainingConfig>();
    if (j.contains("watermark")) c.watermark = j.at("watermark").get<WatermarkConfig>();
    if (j.contains("verifier")) c.theta = j.at("verifier").value("theta", c.theta);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.what());
  }
  c.model.Validate();
  c.training.Validate();
  return c;
}

ToolkitConfig LoadConfig(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return ConfigFromJson(j, path.parent_path());
}

void SaveConfig(const ToolkitConfig& config, const fs::path& path) {
  WriteText(path, ConfigToJson(config).dump(2) + "\n");
}

OpSpec ParseOpSpec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  const auto bad = [&](const std::string& why) {
    return Error(ErrorCode::kInvalidArgument, "op spec '" + text + "': " + why);
  };
  if (parts.size() < 2 || parts.size() > 3) throw bad("expected class:kind[:level]");
  OpSpec spec;
  try {
    if (parts[0] == "benign") {
      spec.benign_op.kind = ParseBenignKind(parts[1]);
      if (parts.size() == 3) {
        if (spec.benign_op.kind != BenignKind::kResampling) throw bad("only resampling takes a rate");
        spec.benign_op.resample_rate = std::stoi(parts[2]);
      }
    } else if (parts[0] == "malicious") {
      spec.benign = false;
      MaliciousOp& op = spec.malicious_op;
      op.kind = ParseMaliciousKind(parts[1]);
      if (parts.size() == 3) {
        if (op.kind == MaliciousKind::kTtsProxy) {
          op.ratio = std::stod(parts[2]);
        } else {
          op.level = ParseSeverity(parts[2]);
        }
      }
    } else {
      throw bad("class must be benign or malicious");
    }
  } catch (const std::logic_error&) {
    throw bad("malformed number");
  }
  return spec;
}

bool IsDeskCheckpoint(const ModelCheckpoint& checkpoint) {
  return checkpoint.model.lstm_hidden < FullModelConfig().lstm_hidden;
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Sign speech audio with a content fingerprint and verify its integrity",
               "speechverifier");
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Options o;
  app.add_option("-c,--config", o.config_path, "Config file (default: $SPEECHVERIFIER_CONFIG)");
  app.add_flag("--force", o.force, "Use a checkpoint trained under a different config");
  app.add_option("-j,--jobs", o.jobs, "Worker threads")->check(CLI::Range(1, 256));

  CLI::App* corpus = app.add_subcommand("corpus", "Write a synthetic corpus or index a WAV directory");
  corpus->add_option("--synthetic", o.corpus_dir, "Output directory for synthetic speech");
  corpus->add_option("--scan", o.scan_dir, "Directory of WAV files to index");
  corpus->add_option("--manifest", o.manifest_out, "Manifest path for --scan");
  corpus->add_option("-n,--utterances", o.utterances)->check(CLI::PositiveNumber);
  corpus->add_option("--speakers", o.speakers)->check(CLI::PositiveNumber);
  corpus->add_option("--min-seconds", o.min_seconds);
  corpus->add_option("--max-seconds", o.max_seconds);
  corpus->add_option("--seed", o.seed);

  CLI::App* init = app.add_subcommand("init-config", "Write a default config file");
  init->add_option("output", o.config_out)->required();

  CLI::App* train = app.add_subcommand("train", "Train the fingerprint encoder");
  train->add_option("--epochs", o.epochs);
  train->add_option("--resume", o.resume, "Checkpoint to continue from");

  CLI::App* sign = app.add_subcommand("sign", "Fingerprint and watermark a file");
  sign->add_option("input", o.input)->required();
  sign->add_option("output", o.output)->required();

  CLI::App* verify = app.add_subcommand("verify", "Verify a file; exit 0 accept, 1 reject");
  verify->add_option("input", o.input)->required();
  verify->add_option("--theta", o.theta);
  verify->add_flag("--allow-default-theta", o.allow_default_theta,
                   "Report decisions at theta 42 under a desk checkpoint");

  CLI::App* simulate = app.add_subcommand("simulate", "Apply a benign or malicious operation");
  simulate->add_option("input", o.input)->required();
  simulate->add_option("op", o.op, "e.g. benign:reencoding, malicious:silencing:moderate")->required();
  simulate->add_option("output", o.output)->required();
  simulate->add_option("--seed", o.op_seed);
  simulate->add_option("--donor", o.donor, "Donor audio for splicing, substitution, tts_proxy");

  CLI::App* calibrate = app.add_subcommand("calibrate", "Set theta at the dev-set EER point");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Run the operation matrix on the test split");
  evaluate->add_option("--theta", o.theta);
  evaluate->add_flag("--allow-default-theta", o.allow_default_theta);
  evaluate->add_option("--tts-ratios", o.tts_ratios, "Add TTS substitution rows at these ratios");
  evaluate->add_flag("--samples", o.samples, "Include per-sample scores in the JSON report");

  CLI::App* study = app.add_subcommand("study", "Similarity or SHA-256 distance study");
  study->add_option("kind", o.study)->required()->check(CLI::IsMember({"similarity", "sha256"}));
  study->add_option("--manifest", o.manifest, "Corpus (default: test manifest)");
  study->add_option("--bins", o.bins)->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*corpus) return CmdCorpus(o, out);
    if (*init) return CmdInitConfig(o, out);
    if (*train) return CmdTrain(o, out);
    if (*sign) return CmdSign(o, out);
    if (*verify) return CmdVerify(o, out);
    if (*simulate) return CmdSimulate(o, out);
    if (*calibrate) return CmdCalibrate(o, out);
    if (*evaluate) return CmdEvaluate(o, out);
    if (*study) return CmdStudy(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kTooShort ? kExitTooShort : kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace speechverifier::cli
