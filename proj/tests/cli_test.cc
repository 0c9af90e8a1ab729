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

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gtest/gtest.h"
#include "speechverifier/audio.h"
#include "speechverifier/corpus.h"
#include "speechverifier/error.h"
#include "test_util.h"

namespace speechverifier::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string ReadFile(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("sv_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::Run(args, out_, err_);
  }

  // Config pointing at an untrained desk checkpoint and a small test corpus.
  fs::path UntrainedSetup() {
    WriteSyntheticCorpus(dir_ / "test", 4, 2, 2.5, 3.0, 3);
    ToolkitConfig config;
    config.output_dir = dir_ / "out";
    config.checkpoint = dir_ / "model.svck";
    config.test_manifest = dir_ / "test" / "manifest.jsonl";
    config.dev_manifest = config.test_manifest;
    SaveCheckpoint(NewCheckpoint(config.model, config.features, 5), config.checkpoint);
    const fs::path path = dir_ / "config.json";
    SaveConfig(config, path);
    return path;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST(OpSpecTest, Parses) {
  OpSpec s = ParseOpSpec("benign:reencoding");
  EXPECT_TRUE(s.benign);
  EXPECT_EQ(s.benign_op.kind, BenignKind::kReencoding);
  s = ParseOpSpec("benign:resampling:22050");
  EXPECT_EQ(s.benign_op.resample_rate, 22050);
  s = ParseOpSpec("malicious:silencing:moderate");
  EXPECT_FALSE(s.benign);
  EXPECT_EQ(s.malicious_op.kind, MaliciousKind::kSilencing);
  EXPECT_EQ(s.malicious_op.level, Severity::kModerate);
  s = ParseOpSpec("malicious:tts_proxy:0.25");
  EXPECT_EQ(*s.malicious_op.ratio, 0.25);
  for (const char* bad : {"bogus", "benign:x", "malicious:deletion:huge", "benign:reencoding:1",
                          "malicious:tts_proxy:abc", "x:deletion"}) {
    EXPECT_THROW(ParseOpSpec(bad), Error) << bad;
  }
}

TEST(ConfigTest, RoundTripAndRelativePaths) {
  ToolkitConfig c;
  c.train_manifest = "data/train.jsonl";
  c.theta = 17;
  c.training.epochs = 3;
  const json j = ConfigToJson(c);
  EXPECT_EQ(j["schema_version"], kConfigSchemaVersion);
  const ToolkitConfig back = ConfigFromJson(j, "/base");
  EXPECT_EQ(back.train_manifest, fs::path("/base/data/train.jsonl"));
  EXPECT_EQ(back.output_dir, fs::path("/base/out"));
  EXPECT_EQ(back.CheckpointPath(), fs::path("/base/out/model.svck"));
  EXPECT_EQ(back.theta, 17);
  EXPECT_EQ(back.training.epochs, 3);
  EXPECT_EQ(back.TrainingHash(), c.TrainingHash());
  c.training.epochs = 4;
  EXPECT_NE(back.TrainingHash(), c.TrainingHash());

  json future = j;
  future["schema_version"] = kConfigSchemaVersion + 1;
  EXPECT_THROW(ConfigFromJson(future, "/"), Error);
  EXPECT_EQ(ConfigFromJson(json::object(), "/").theta, kFullModelTheta);
}

TEST_F(CliTest, TrainWritesCheckpointAndLogDeterministically) {
  WriteSyntheticCorpus(dir_ / "train", 16, 4, 2.5, 3.0, 1);
  ToolkitConfig config;
  config.train_manifest = dir_ / "train" / "manifest.jsonl";
  config.output_dir = dir_ / "out";
  config.training.epochs = 2;
  SaveConfig(config, dir_ / "config.json");
  const std::string cfg = (dir_ / "config.json").string();

  ASSERT_EQ(Cli({"--config", cfg, "train"}), kExitOk) << err_.str();
  ASSERT_TRUE(fs::exists(dir_ / "out" / "model.svck"));
  std::istringstream log(ReadFile(dir_ / "out" / "train_log.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 2);
  EXPECT_EQ(LoadCheckpoint(dir_ / "out" / "model.svck").config_hash, config.TrainingHash());

  const std::string first = ReadFile(dir_ / "out" / "model.svck");
  ASSERT_EQ(Cli({"--config", cfg, "train"}), kExitOk) << err_.str();
  EXPECT_EQ(ReadFile(dir_ / "out" / "model.svck"), first);

  // A checkpoint trained under other settings is refused unless forced.
  config.training.epochs = 3;
  SaveConfig(config, dir_ / "config.json");
  const Waveform w = testing::Speech(0, 3.0, 2);
  WriteWav(w, dir_ / "in.wav");
  EXPECT_EQ(Cli({"-c", cfg, "sign", (dir_ / "in.wav").string(), (dir_ / "s.wav").string()}),
            kExitError);
  EXPECT_NE(err_.str().find("--force"), std::string::npos);
  EXPECT_EQ(Cli({"-c", cfg, "--force", "sign", (dir_ / "in.wav").string(),
                 (dir_ / "s.wav").string()}),
            kExitOk);
}

TEST_F(CliTest, MissingManifestNamesPath) {
  ToolkitConfig config;
  config.train_manifest = dir_ / "nowhere.jsonl";
  SaveConfig(config, dir_ / "config.json");
  EXPECT_EQ(Cli({"-c", (dir_ / "config.json").string(), "train"}), kExitError);
  EXPECT_NE(err_.str().find("nowhere.jsonl"), std::string::npos);
  EXPECT_EQ(Cli({"-c", (dir_ / "absent.json").string(), "train"}), kExitError);
  EXPECT_EQ(Cli({"train"}), kExitError);
  EXPECT_EQ(Cli({"no-such-command"}), kExitError);
}

TEST_F(CliTest, SignVerifyExitCodes) {
  const std::string cfg = UntrainedSetup().string();
  const Waveform w = testing::Speech(1, 3.0, 4);
  const std::string in = (dir_ / "in.wav").string();
  const std::string signed_path = (dir_ / "signed.wav").string();
  WriteWav(w, in);

  ASSERT_EQ(Cli({"-c", cfg, "sign", in, signed_path}), kExitOk) << err_.str();
  std::string hex = out_.str();
  hex.erase(hex.find_last_not_of('\n') + 1);
  EXPECT_EQ(hex.size(), 64u);
  EXPECT_EQ(ReadWav(signed_path).samples.size(), w.samples.size());
  const json sidecar = json::parse(ReadFile(signed_path + ".json"));
  EXPECT_EQ(sidecar["fingerprint"], hex);
  EXPECT_EQ(sidecar["config_hash"].get<std::string>().size(), 16u);

  // Theta 42 belongs to the full-size model.
  EXPECT_EQ(Cli({"-c", cfg, "verify", signed_path}), kExitError);
  EXPECT_NE(err_.str().find("calibrate"), std::string::npos);

  ASSERT_EQ(Cli({"-c", cfg, "verify", "--allow-default-theta", signed_path}), kExitOk) << err_.str();
  json report = json::parse(out_.str());
  EXPECT_EQ(report["decision"], "accept");
  EXPECT_EQ(report["theta"], kFullModelTheta);
  for (const char* key : {"path", "distance", "per_segment_errors", "checkpoint_id", "config_hash"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }

  ASSERT_EQ(Cli({"-c", cfg, "verify", "--theta", "40", in}), kExitReject);
  report = json::parse(out_.str());
  EXPECT_GE(report["distance"].get<int>(), 96);
  EXPECT_LE(report["distance"].get<int>(), 160);

  WriteWav(testing::Speech(1, 1.0, 4), dir_ / "short.wav");
  EXPECT_EQ(Cli({"-c", cfg, "sign", (dir_ / "short.wav").string(), (dir_ / "x.wav").string()}),
            kExitTooShort);
}

TEST_F(CliTest, SimulateWritesOutputAndRecord) {
  const Waveform w = testing::Speech(2, 10.0, 6);
  const std::string in = (dir_ / "in.wav").string();
  WriteWav(w, in);
  const Waveform stored = ReadWav(in);

  const std::string re = (dir_ / "re.wav").string();
  ASSERT_EQ(Cli({"simulate", in, "benign:reencoding", re}), kExitOk) << err_.str();
  const Waveform r = ReadWav(re);
  ASSERT_EQ(r.samples.size(), stored.samples.size());
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    ASSERT_LE(std::abs(r.samples[i] - stored.samples[i]), std::ldexp(1.0, -15));
  }

  const std::string del = (dir_ / "del.wav").string();
  ASSERT_EQ(Cli({"simulate", in, "malicious:deletion:severe", del, "--seed", "9"}), kExitOk)
      << err_.str();
  EXPECT_NEAR(ReadWav(del).samples.size() / 16000.0, 5.0, 0.05);
  const json record = json::parse(ReadFile(del + ".json"));
  EXPECT_EQ(record["op"], "malicious:deletion:severe");
  EXPECT_FALSE(record["edited_intervals"].empty());

  const std::string again = (dir_ / "again.wav").string();
  ASSERT_EQ(Cli({"simulate", in, "malicious:deletion:severe", again, "--seed", "9"}), kExitOk);
  EXPECT_EQ(ReadFile(again), ReadFile(del));

  EXPECT_EQ(Cli({"simulate", in, "malicious:teleport", again}), kExitError);
  EXPECT_EQ(Cli({"simulate", in, "malicious:splicing:minor", again}), kExitError);
  EXPECT_NE(err_.str().find("--donor"), std::string::npos);
}

TEST_F(CliTest, CalibrateEvaluateStudy) {
  const fs::path cfg = UntrainedSetup();
  ASSERT_EQ(Cli({"-c", cfg.string(), "calibrate"}), kExitOk) << err_.str();
  const json cal = json::parse(out_.str());
  EXPECT_EQ(LoadConfig(cfg).theta, cal["theta"].get<int>());

  setenv("SPEECHVERIFIER_CONFIG", cfg.c_str(), 1);
  const int rc = Cli({"evaluate", "--theta", "50", "--jobs", "2"});
  unsetenv("SPEECHVERIFIER_CONFIG");
  ASSERT_EQ(rc, kExitOk) << err_.str();
  const json report = json::parse(ReadFile(dir_ / "out" / "eval_report.json"));
  EXPECT_EQ(report["rows"].size(), 18u);
  EXPECT_EQ(report["theta"], 50);
  EXPECT_FALSE(report.contains("samples"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "eval_report.csv"));

  ASSERT_EQ(Cli({"-c", cfg.string(), "study", "sha256", "--bins", "8"}), kExitOk) << err_.str();
  EXPECT_EQ(json::parse(out_.str()).size(), 3u);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "sha256_histogram.csv"));
  EXPECT_EQ(Cli({"-c", cfg.string(), "study", "entropy"}), kExitError);
}

}  // namespace
}  // namespace speechverifier::cli
