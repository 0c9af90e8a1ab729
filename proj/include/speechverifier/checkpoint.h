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

#ifndef SPEECHVERIFIER_CHECKPOINT_H_
#define SPEECHVERIFIER_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "speechverifier/audio.h"
#include "speechverifier/features.h"
#include "speechverifier/fingerprint.h"
#include "speechverifier/model.h"

namespace speechverifier {

struct ModelCheckpoint {
  ModelConfig model;
  MfccConfig features;
  ModelParams params;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  int epoch = 0;
  std::string loss = "infonce";
  // Hash of the toolkit configuration the checkpoint was trained under, if any.
  std::string config_hash;
  // Optimizer buffers and other training state, saved alongside the weights.
  std::map<std::string, Eigen::MatrixXd> extra;

  // Hash of the configuration that determines the fingerprint pipeline.
  std::string PipelineHash() const;
};

ModelCheckpoint NewCheckpoint(const ModelConfig& model, const MfccConfig& features,
                              std::uint64_t seed);

// "SVCK", u32 version, u32 header length, JSON header, u32 tensor count, then
// per tensor: u32 name length, name, u32 rows, u32 cols, rows*cols float64
// little-endian in column-major order.
std::vector<std::uint8_t> SerializeCheckpoint(const ModelCheckpoint& checkpoint);
ModelCheckpoint ParseCheckpoint(const std::vector<std::uint8_t>& bytes);
void SaveCheckpoint(const ModelCheckpoint& checkpoint, const std::filesystem::path& path);
ModelCheckpoint LoadCheckpoint(const std::filesystem::path& path);
// First 16 hex digits of SHA-256 over the serialized checkpoint.
std::string CheckpointId(const ModelCheckpoint& checkpoint);

// Shortest audio the fingerprint pipeline accepts.
inline constexpr double kMinFingerprintSeconds = 2.0;

FrameFeatures ExtractFeatures(const Waveform& waveform, const ModelCheckpoint& checkpoint);
Embedding EmbedFeatures(const Eigen::MatrixXd& features, const ModelCheckpoint& checkpoint);
BinaryFingerprint FingerprintFeatures(const FrameFeatures& features,
                                      const ModelCheckpoint& checkpoint);
// Eval-mode pipeline: MFCC -> BiLSTM -> pooling -> projection -> sign.
BinaryFingerprint Fingerprint(const Waveform& waveform, const ModelCheckpoint& checkpoint);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_CHECKPOINT_H_
