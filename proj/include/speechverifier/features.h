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

#ifndef SPEECHVERIFIER_FEATURES_H_
#define SPEECHVERIFIER_FEATURES_H_

#include <filesystem>
#include <optional>

#include <Eigen/Dense>

#include "speechverifier/audio.h"

namespace speechverifier {

enum class FeatureSource { kMfcc, kExternal };

// One row per frame.
struct FrameFeatures {
  Eigen::MatrixXd matrix;
  double frame_hop_seconds = 0.01;
  FeatureSource source = FeatureSource::kMfcc;
  Eigen::Index frames() const { return matrix.rows(); }
  Eigen::Index dim() const { return matrix.cols(); }
};

struct MfccConfig {
  int sample_rate = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int fft_size = 512;
  int mel_filters = 40;
  int cepstra = 13;
  bool deltas = true;
  double low_hz = 0.0;
  double high_hz = 8000.0;
  double pre_emphasis = 0.97;
  double log_floor = 1e-10;
  // Subtract the per-utterance mean of every feature column.
  bool cepstral_mean_norm = true;

  int dim() const { return deltas ? 3 * cepstra : cepstra; }
  std::size_t window_samples() const;
  std::size_t hop_samples() const;
};

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular HTK-mel filters, mel_filters x (fft_size / 2 + 1).
Eigen::MatrixXd MelFilterbank(const MfccConfig& config);

// Regression deltas over +-2 frames with edge replication.
Eigen::MatrixXd Deltas(const Eigen::MatrixXd& features);

// Log mel energies (T x mel_filters) before the DCT.
Eigen::MatrixXd LogMelEnergies(const Waveform& waveform, const MfccConfig& config);

// Frame count follows FrameCount(len, window, hop). The DCT is scaled so that
// coefficient 0 is the mean log mel energy of the frame.
FrameFeatures Mfcc(const Waveform& waveform, const MfccConfig& config = {});

// "SVFT", u32 T, u32 d, f32 hop seconds, then T*d little-endian float32.
FrameFeatures LoadExternalFeatures(const std::filesystem::path& path,
                                   std::optional<int> expected_dim = std::nullopt);
void SaveExternalFeatures(const FrameFeatures& features, const std::filesystem::path& path);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_FEATURES_H_
