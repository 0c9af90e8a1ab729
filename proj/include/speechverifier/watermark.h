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

#ifndef SPEECHVERIFIER_WATERMARK_H_
#define SPEECHVERIFIER_WATERMARK_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "speechverifier/audio.h"
#include "speechverifier/fingerprint.h"

namespace speechverifier {

enum class QimDomain {
  // Lattice over ln(max(magnitude, magnitude_floor)) with step log_step.
  kLog,
  // Lattice over the magnitude with step linear_step_ratio x median carrier
  // magnitude of the segment.
  kLinear,
};

struct WatermarkConfig {
  int segments = 16;
  int sample_rate = 16000;
  int fft_size = 2048;
  double band_low_hz = 500.0;
  double band_high_hz = 3400.0;
  // Carrier bins are this many bins apart so that Hann leakage (+-2 bins)
  // from one carrier never reaches another.
  int bin_spacing = 3;
  int repetition = 8;
  std::uint64_t carrier_seed = 0x5EC0DE;
  QimDomain domain = QimDomain::kLog;
  double log_step = 0.4;
  double magnitude_floor = 0.03;
  double linear_step_ratio = 0.15;
  double linear_step_floor = 1e-4;
  std::size_t min_segment = 2048;

  void Validate() const;
};

struct SegmentationPlan {
  std::vector<std::size_t> boundaries;  // segments + 1 entries
  int bits_per_segment = 0;
  std::size_t segments() const { return boundaries.size() - 1; }
};

// First n - 1 segments hold floor(len / n) samples; the last takes the rest.
SegmentationPlan PlanSegments(std::size_t length, int segments, std::size_t min_segment = 2048,
                              int total_bits = 256);

// Nearest point of the lattice step * (Z + offset), offset 0 for bit -1 and
// 1/2 for bit +1.
double QuantizeToLattice(double value, double step, int bit);
// Positive when value is closer to the +1 lattice; magnitude up to step / 4.
double LatticeSoftBit(double value, double step);

// One carrier cell: a frequency bin of one analysis frame.
struct CarrierCell {
  std::size_t frame_start = 0;
  int bin = 0;
};

// Cells assigned to each bit of one segment: cells[j] lists bit j's cells.
std::vector<std::vector<CarrierCell>> CarrierLayout(std::size_t segment_start,
                                                    std::size_t segment_length,
                                                    int bits_per_segment, int segment_index,
                                                    const WatermarkConfig& config);

Waveform Embed(const Waveform& waveform, const BinaryFingerprint& payload,
               const WatermarkConfig& config = {});

struct ExtractionResult {
  BinaryFingerprint bits;
  std::vector<double> soft;  // summed soft decisions per bit
};

ExtractionResult ExtractDetailed(const Waveform& waveform, int total_bits,
                                 const WatermarkConfig& config = {});
BinaryFingerprint Extract(const Waveform& waveform, int total_bits = 256,
                          const WatermarkConfig& config = {});

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_WATERMARK_H_
