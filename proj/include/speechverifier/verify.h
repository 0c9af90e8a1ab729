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

#ifndef SPEECHVERIFIER_VERIFY_H_
#define SPEECHVERIFIER_VERIFY_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "speechverifier/checkpoint.h"
#include "speechverifier/metrics.h"
#include "speechverifier/watermark.h"

namespace speechverifier {

// Threshold calibrated for the full-size encoder and neural watermark. Desk
// checkpoints need their own calibration.
inline constexpr int kFullModelTheta = 42;

struct VerifierConfig {
  int theta = kFullModelTheta;
  WatermarkConfig watermark;

  // Throws ConfigMismatch when the checkpoint's code length does not split
  // into the configured segments or the sample rates disagree, and
  // InvalidArgument when theta is outside [0, d].
  void Validate(const ModelCheckpoint& checkpoint) const;
};

enum class Decision { kAccept, kReject };
std::string DecisionName(Decision d);

struct VerificationResult {
  BinaryFingerprint regenerated;  // Path A
  BinaryFingerprint extracted;    // Path B
  int distance = 0;
  Decision decision = Decision::kReject;
  std::vector<int> per_segment_errors;
};

// Fingerprints the clean audio and embeds the code as a watermark.
struct SignedAudio {
  Waveform audio;
  BinaryFingerprint fingerprint;
};
SignedAudio Sign(const Waveform& waveform, const ModelCheckpoint& checkpoint,
                 const WatermarkConfig& watermark = {});

// Path A regenerates the fingerprint from the received audio, Path B extracts
// the embedded one; Accept iff their Hamming distance is at most theta.
VerificationResult Verify(const Waveform& waveform, const ModelCheckpoint& checkpoint,
                          const VerifierConfig& config);

// Decision for a known distance.
inline Decision Decide(int distance, int theta) {
  return distance <= theta ? Decision::kAccept : Decision::kReject;
}

struct Calibration {
  int theta = 0;
  double eer = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
};

// Integer theta at the equal-error point of the development distances; ties
// go to the smaller theta. Clamped to [0, d] when bits is given.
Calibration CalibrateThreshold(std::span<const int> distances, std::span<const Label> labels,
                               int bits = 256);

// Hash of everything that affects a decision: pipeline, watermark and theta.
std::string VerifierConfigHash(const ModelCheckpoint& checkpoint, const VerifierConfig& config);

// {path, distance, theta, decision, per_segment_errors, checkpoint_id, config_hash}
nlohmann::json VerificationReport(const std::filesystem::path& path,
                                  const VerificationResult& result, const VerifierConfig& config,
                                  const ModelCheckpoint& checkpoint);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_VERIFY_H_
