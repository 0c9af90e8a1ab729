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

#include "speechverifier/watermark.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "speechverifier/dsp.h"
#include "speechverifier/error.h"

namespace speechverifier {
namespace {

struct FrameSpectrum {
  std::vector<Complex> bins;
};

std::vector<int> CarrierBins(const WatermarkConfig& c) {
  const double bin_hz = static_cast<double>(c.sample_rate) / c.fft_size;
  const int lo = std::max(3, static_cast<int>(std::ceil(c.band_low_hz / bin_hz)));
  const int hi = std::min(c.fft_size / 2 - 3, static_cast<int>(std::floor(c.band_high_hz / bin_hz)));
  std::vector<int> bins;
  for (int k = lo; k <= hi; k += c.bin_spacing) bins.push_back(k);
  return bins;
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

class SegmentCodec {
 public:
  explicit SegmentCodec(const WatermarkConfig& c)
      : c_(c), window_(HannWindow(static_cast<std::size_t>(c.fft_size))), fft_(c.fft_size) {
    for (double w : window_) window_energy_ += w * w;
  }

  std::vector<Complex> Analyze(const std::vector<double>& x, std::size_t start) {
    std::vector<double> frame(static_cast<std::size_t>(c_.fft_size));
    for (std::size_t n = 0; n < frame.size(); ++n) frame[n] = x[start + n] * window_[n];
    std::vector<Complex> bins;
    fft_.Forward(frame, bins);
    return bins;
  }

  // Adds a windowed cosine at bin k that moves |X[k]| from current to target
  // while keeping its phase.
  void SetMagnitude(std::vector<double>& out, std::size_t start, int k, Complex current,
                    double target) const {
    const double amplitude = 2.0 * (target - std::abs(current)) / window_energy_;
    const double phase = std::abs(current) > 0.0 ? std::arg(current) : 0.0;
    const double w0 = 2.0 * std::numbers::pi * k / c_.fft_size;
    for (std::size_t n = 0; n < window_.size(); ++n) {
      out[start + n] += amplitude * window_[n] * std::cos(w0 * static_cast<double>(n) + phase);
    }
  }

  // Log or linear value on which the lattice lives, and the lattice step.
  double Coordinate(double magnitude) const {
    return c_.domain == QimDomain::kLog ? std::log(std::max(magnitude, c_.magnitude_floor))
                                        : magnitude;
  }
  double Magnitude(double coordinate) const {
    return c_.domain == QimDomain::kLog ? std::exp(coordinate) : coordinate;
  }
  double Step(const std::vector<std::vector<Complex>>& spectra,
              const std::vector<std::vector<CarrierCell>>& layout,
              const std::vector<std::size_t>& frame_starts) const {
    if (c_.domain == QimDomain::kLog) return c_.log_step;
    std::vector<double> mags;
    for (const auto& cells : layout) {
      for (const CarrierCell& cell : cells) {
        const auto f = static_cast<std::size_t>(
            std::find(frame_starts.begin(), frame_starts.end(), cell.frame_start) -
            frame_starts.begin());
        mags.push_back(std::abs(spectra[f][static_cast<std::size_t>(cell.bin)]));
      }
    }
    return std::max(c_.linear_step_ratio * Median(mags), c_.linear_step_floor);
  }
  // Embedded cells never sit below the floor, so such a cell was wiped by
  // later processing and carries no vote.
  bool Erased(double magnitude) const {
    return c_.domain == QimDomain::kLog ? magnitude < c_.magnitude_floor : magnitude == 0.0;
  }
  // Lowest coordinate a target may take so that it decodes above the floor.
  double MinCoordinate(double step) const {
    return c_.domain == QimDomain::kLog ? std::log(c_.magnitude_floor) + step / 4.0 : step / 4.0;
  }

 private:
  const WatermarkConfig& c_;
  std::vector<double> window_;
  double window_energy_ = 0.0;
  RealFft fft_;
};

std::vector<std::size_t> FrameStarts(std::size_t seg_start, std::size_t seg_len,
                                     const WatermarkConfig& c) {
  std::vector<std::size_t> starts;
  const auto n = static_cast<std::size_t>(c.fft_size);
  for (std::size_t off = 0; off + n <= seg_len; off += n) starts.push_back(seg_start + off);
  return starts;
}

std::size_t FrameIndex(const std::vector<std::size_t>& starts, std::size_t start) {
  return static_cast<std::size_t>(std::find(starts.begin(), starts.end(), start) - starts.begin());
}

}  // namespace

void WatermarkConfig::Validate() const {
  if (segments < 1 || repetition < 1 || bin_spacing < 3 || fft_size < 16 ||
      sample_rate < 1 || !(band_low_hz < band_high_hz) || !(log_step > 0.0) ||
      !(magnitude_floor > 0.0) || !(linear_step_ratio > 0.0) || !(linear_step_floor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid watermark configuration");
  }
}

SegmentationPlan PlanSegments(std::size_t length, int segments, std::size_t min_segment,
                              int total_bits) {
  if (segments < 1 || total_bits % segments != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "fingerprint length must be divisible by the segment count");
  }
  const auto n = static_cast<std::size_t>(segments);
  if (length < n * min_segment) {
    throw Error(ErrorCode::kTooShort, "audio of " + std::to_string(length) +
                                          " samples cannot hold " + std::to_string(segments) +
                                          " segments of " + std::to_string(min_segment));
  }
  SegmentationPlan plan;
  plan.bits_per_segment = total_bits / segments;
  const std::size_t base = length / n;
  for (std::size_t i = 0; i < n; ++i) plan.boundaries.push_back(i * base);
  plan.boundaries.push_back(length);
  return plan;
}

double QuantizeToLattice(double value, double step, int bit) {
  const double offset = bit > 0 ? 0.5 : 0.0;
  return step * (std::round(value / step - offset) + offset);
}

double LatticeSoftBit(double value, double step) {
  const double frac = value / step - std::floor(value / step);
  const double to_minus = std::min(frac, 1.0 - frac);
  const double to_plus = std::abs(frac - 0.5);
  return (to_minus - to_plus) * step / 2.0;
}

std::vector<std::vector<CarrierCell>> CarrierLayout(std::size_t segment_start,
                                                    std::size_t segment_length,
                                                    int bits_per_segment, int segment_index,
                                                    const WatermarkConfig& c) {
  std::vector<CarrierCell> cells;
  for (std::size_t start : FrameStarts(segment_start, segment_length, c)) {
    for (int bin : CarrierBins(c)) cells.push_back({start, bin});
  }
  const int reps = std::min<int>(c.repetition, static_cast<int>(cells.size()) / bits_per_segment);
  if (reps < 1) {
    throw Error(ErrorCode::kTooShort, "segment too short for " +
                                          std::to_string(bits_per_segment) + " watermark bits");
  }
  std::mt19937_64 rng(c.carrier_seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(segment_index));
  std::shuffle(cells.begin(), cells.end(), rng);
  std::vector<std::vector<CarrierCell>> layout(static_cast<std::size_t>(bits_per_segment));
  for (int j = 0; j < bits_per_segment; ++j) {
    layout[static_cast<std::size_t>(j)].assign(
        cells.begin() + static_cast<std::ptrdiff_t>(j) * reps,
        cells.begin() + static_cast<std::ptrdiff_t>(j + 1) * reps);
  }
  return layout;
}

Waveform Embed(const Waveform& w, const BinaryFingerprint& payload, const WatermarkConfig& c) {
  c.Validate();
  if (w.sample_rate != c.sample_rate) {
    throw Error(ErrorCode::kInvalidArgument, "watermark expects " + std::to_string(c.sample_rate) +
                                                 " Hz audio");
  }
  const SegmentationPlan plan =
      PlanSegments(w.size(), c.segments, c.min_segment, static_cast<int>(payload.size()));
  SegmentCodec codec(c);
  Waveform out = w;
  for (std::size_t s = 0; s < plan.segments(); ++s) {
    const std::size_t start = plan.boundaries[s];
    const std::size_t len = plan.boundaries[s + 1] - start;
    const auto layout = CarrierLayout(start, len, plan.bits_per_segment, static_cast<int>(s), c);
    const auto frames = FrameStarts(start, len, c);
    std::vector<std::vector<Complex>> spectra;
    for (std::size_t f : frames) spectra.push_back(codec.Analyze(w.samples, f));
    const double step = codec.Step(spectra, layout, frames);
    for (int j = 0; j < plan.bits_per_segment; ++j) {
      const int bit = payload.bits[s * static_cast<std::size_t>(plan.bits_per_segment) + j];
      for (const CarrierCell& cell : layout[static_cast<std::size_t>(j)]) {
        const Complex x = spectra[FrameIndex(frames, cell.frame_start)][static_cast<std::size_t>(cell.bin)];
        double q = QuantizeToLattice(codec.Coordinate(std::abs(x)), step, bit);
        while (q < codec.MinCoordinate(step)) q += step;
        codec.SetMagnitude(out.samples, cell.frame_start, cell.bin, x, codec.Magnitude(q));
      }
    }
  }
  return out;
}

ExtractionResult ExtractDetailed(const Waveform& w, int total_bits, const WatermarkConfig& c) {
  c.Validate();
  const SegmentationPlan plan = PlanSegments(w.size(), c.segments, c.min_segment, total_bits);
  SegmentCodec codec(c);
  ExtractionResult r;
  r.bits.bits.assign(static_cast<std::size_t>(total_bits), 1);
  r.soft.assign(static_cast<std::size_t>(total_bits), 0.0);
  for (std::size_t s = 0; s < plan.segments(); ++s) {
    const std::size_t start = plan.boundaries[s];
    const std::size_t len = plan.boundaries[s + 1] - start;
    const auto layout = CarrierLayout(start, len, plan.bits_per_segment, static_cast<int>(s), c);
    const auto frames = FrameStarts(start, len, c);
    std::vector<std::vector<Complex>> spectra;
    for (std::size_t f : frames) spectra.push_back(codec.Analyze(w.samples, f));
    const double step = codec.Step(spectra, layout, frames);
    for (int j = 0; j < plan.bits_per_segment; ++j) {
      int votes = 0;
      double soft = 0.0;
      for (const CarrierCell& cell : layout[static_cast<std::size_t>(j)]) {
        const Complex x = spectra[FrameIndex(frames, cell.frame_start)][static_cast<std::size_t>(cell.bin)];
        if (codec.Erased(std::abs(x))) continue;
        const double v = LatticeSoftBit(codec.Coordinate(std::abs(x)), step);
        votes += v >= 0.0 ? 1 : -1;
        soft += v;
      }
      const std::size_t idx = s * static_cast<std::size_t>(plan.bits_per_segment) + j;
      r.soft[idx] = soft;
      r.bits.bits[idx] = votes > 0 || (votes == 0 && soft >= 0.0) ? 1 : -1;
    }
  }
  return r;
}

BinaryFingerprint Extract(const Waveform& w, int total_bits, const WatermarkConfig& c) {
  return ExtractDetailed(w, total_bits, c).bits;
}

}  // namespace speechverifier
