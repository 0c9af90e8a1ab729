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

#ifndef SPEECHVERIFIER_AUDIO_H_
#define SPEECHVERIFIER_AUDIO_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace speechverifier {

// Mono PCM audio. Samples are nominally in [-1, 1]; values outside that range
// are kept during processing and only clipped when written to disk.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double DurationSeconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
  friend bool operator==(const Waveform&, const Waveform&) = default;
};

// A window into a parent sample buffer. The view does not own its samples.
struct FrameView {
  std::size_t start_sample = 0;
  std::size_t length = 0;
  std::span<const double> values;
};

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a RIFF/WAVE file with 8/16/24/32-bit integer PCM or 32-bit IEEE float
// samples. Multichannel input is averaged to mono.
Waveform ReadWav(const std::filesystem::path& path);
Waveform ParseWav(std::span<const unsigned char> bytes);

void WriteWav(const Waveform& waveform, const std::filesystem::path& path,
              WavEncoding encoding = WavEncoding::kPcm16);
std::vector<unsigned char> SerializeWav(
    const Waveform& waveform, WavEncoding encoding = WavEncoding::kPcm16);

// Band-limited sample-rate conversion (Kaiser-windowed sinc, polyphase).
// Output length is round(len * target_rate / sample_rate).
Waveform Resample(const Waveform& waveform, int target_rate);

// Resamples a raw buffer by the rational factor up/down, i.e. the output has
// round(len * up / down) samples.
std::vector<double> ResampleRational(std::span<const double> input, int up,
                                     int down);

// Frame count is floor((len - window) / hop) + 1 when len >= window, else 0.
std::size_t FrameCount(std::size_t length, std::size_t window,
                       std::size_t hop);
std::vector<FrameView> FrameSignal(const Waveform& waveform,
                                   std::size_t window_samples,
                                   std::size_t hop_samples);

double RmsEnergy(std::span<const double> frame);
inline double RmsEnergy(const FrameView& frame) {
  return RmsEnergy(frame.values);
}

// Shifts pitch by resampling and restoring the duration with waveform-
// similarity overlap-add. Length and sample rate are preserved.
Waveform PitchShift(const Waveform& waveform, double semitones);

// Time-scale modification: output has round(len * factor) samples at the same
// pitch.
std::vector<double> TimeStretch(std::span<const double> input, double factor);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_AUDIO_H_
