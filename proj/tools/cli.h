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

#ifndef SPEECHVERIFIER_TOOLS_CLI_H_
#define SPEECHVERIFIER_TOOLS_CLI_H_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "speechverifier/checkpoint.h"
#include "speechverifier/ops.h"
#include "speechverifier/training.h"
#include "speechverifier/verify.h"

namespace speechverifier::cli {

inline constexpr int kConfigSchemaVersion = 1;

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitReject = 1;
inline constexpr int kExitError = 2;
inline constexpr int kExitTooShort = 3;

// The single configuration file. Relative paths are resolved against the
// directory holding the file.
struct ToolkitConfig {
  ModelConfig model = DeskModelConfig();
  MfccConfig features;
  TrainingConfig training;
  WatermarkConfig watermark;
  // 42 is the threshold of the full-size model; desk checkpoints need
  // "calibrate" before their decisions mean anything.
  int theta = kFullModelTheta;
  std::filesystem::path train_manifest;
  std::filesystem::path dev_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path output_dir = "out";
  std::filesystem::path checkpoint;  // defaults to output_dir/model.svck
  std::uint64_t seed = 42;

  std::filesystem::path CheckpointPath() const;
  // Hash of everything that determines training; checkpoints record it.
  std::string TrainingHash() const;
  VerifierConfig Verifier() const;
};

nlohmann::json ConfigToJson(const ToolkitConfig& config);
ToolkitConfig ConfigFromJson(const nlohmann::json& j, const std::filesystem::path& base_dir);
ToolkitConfig LoadConfig(const std::filesystem::path& path);
void SaveConfig(const ToolkitConfig& config, const std::filesystem::path& path);

// "benign:<kind>[:<rate>]", "malicious:<kind>[:<level>]" or
// "malicious:tts_proxy[:<ratio>]".
struct OpSpec {
  bool benign = true;
  BenignOp benign_op;
  MaliciousOp malicious_op;
};
OpSpec ParseOpSpec(const std::string& text);

// Full-size checkpoints have 256 LSTM units per direction.
bool IsDeskCheckpoint(const ModelCheckpoint& checkpoint);

// Runs one command line. Reports go to out, diagnostics to err.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace speechverifier::cli

#endif  // SPEECHVERIFIER_TOOLS_CLI_H_
