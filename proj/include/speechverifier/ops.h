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

#ifndef SPEECHVERIFIER_OPS_H_
#define SPEECHVERIFIER_OPS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "speechverifier/audio.h"

namespace speechverifier {

// Half-open sample range [start, end).
struct Interval {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

// Shortest input accepted by the benign operations.
inline constexpr double kMinOpSeconds = 2.0;

enum class BenignKind { kCompression, kReencoding, kResampling, kNoiseSuppression };

struct BenignOp {
  BenignKind kind = BenignKind::kReencoding;
  // Resampling: intermediate rate, one of 8000, 22050, 44100.
  int resample_rate = 8000;
  // NoiseSuppression: frames whose RMS falls below this quantile are muted.
  double mute_quantile = 0.1;
  // Compression proxy parameters.
  int compression_bits = 6;
  double compression_range_db = 96.0;
  double compression_cutoff_hz = 7000.0;
  // When non-empty, Compression runs this shell command instead of the proxy.
  // "{input}" and "{output}" are replaced with temporary WAV paths.
  std::string external_command;
};

enum class MaliciousKind {
  kDeletion,
  kSplicing,
  kSubstitution,
  kSilencing,
  kReordering,
  kVoiceConversion,
  kTtsProxy,
};

enum class Severity { kMinor, kModerate, kSevere };

struct MaliciousOp {
  MaliciousKind kind = MaliciousKind::kDeletion;
  Severity level = Severity::kMinor;
  std::uint64_t seed = 0;
  std::shared_ptr<const Waveform> donor;
  // Replaces SeverityRatio(level) when set; TtsProxy defaults to 1.0.
  std::optional<double> ratio;
  double semitones = 4.0;
};

struct TamperRecord {
  Waveform output;
  // Input coordinates for Deletion, output coordinates otherwise.
  std::vector<Interval> edited_intervals;
  MaliciousOp op;
};

double SeverityRatio(Severity level);
bool RequiresDonor(MaliciousKind kind);

std::string BenignKindName(BenignKind kind);
std::string MaliciousKindName(MaliciousKind kind);
std::string SeverityName(Severity level);
BenignKind ParseBenignKind(const std::string& name);
MaliciousKind ParseMaliciousKind(const std::string& name);
Severity ParseSeverity(const std::string& name);

// Runs of frames whose RMS is at least the energy_quantile of all frame RMS
// values (and non-zero), merged across gaps shorter than 3 frames.
std::vector<Interval> VoicedRegions(const Waveform& waveform, double frame_ms = 25.0,
                                    double hop_ms = 10.0, double energy_quantile = 0.3);

Waveform ApplyBenign(const Waveform& waveform, const BenignOp& op);
TamperRecord ApplyMalicious(const Waveform& waveform, const MaliciousOp& op);

// Linear-interpolated quantile of values, q in [0, 1].
double Quantile(std::vector<double> values, double q);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_OPS_H_
