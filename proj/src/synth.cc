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

#include "speechverifier/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace speechverifier {
namespace {

struct Vowel {
  double f1, f2, f3;
};

constexpr std::array<Vowel, 8> kVowels = {{
    {730, 1090, 2440},  // a
    {270, 2290, 3010},  // i
    {300, 870, 2240},   // u
    {530, 1840, 2480},  // e
    {570, 840, 2410},   // o
    {660, 1720, 2410},  // ae
    {440, 1020, 2240},  // uh
    {390, 1990, 2550},  // I
}};

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double FormantGain(double f, const Vowel& v, double scale) {
  const std::array<double, 3> centers = {v.f1 * scale, v.f2 * scale, v.f3 * scale};
  const std::array<double, 3> widths = {90.0, 120.0, 170.0};
  const std::array<double, 3> gains = {1.0, 0.6, 0.35};
  double g = 0.01;
  for (int i = 0; i < 3; ++i) {
    const double d = (f - centers[i]) / widths[i];
    g += gains[i] / (1.0 + d * d);
  }
  return g;
}

// RBJ peaking equalizer, Q = 1, applied in place.
void PeakingFilter(std::vector<double>& x, double center_hz, double gain_db, int rate) {
  if (gain_db == 0.0) return;
  const double a = std::pow(10.0, gain_db / 40.0);
  const double w0 = 2.0 * std::numbers::pi * center_hz / rate;
  const double alpha = std::sin(w0) / 2.0;
  const double a0 = 1.0 + alpha / a;
  const double b0 = (1.0 + alpha * a) / a0, b1 = -2.0 * std::cos(w0) / a0,
               b2 = (1.0 - alpha * a) / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha / a) / a0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (double& v : x) {
    const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

// Second-order resonator used to colour fricative noise.
class Resonator {
 public:
  Resonator(double center_hz, double bandwidth_hz, int rate) {
    const double r = std::exp(-std::numbers::pi * bandwidth_hz / rate);
    a1_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * center_hz / rate);
    a2_ = -r * r;
    gain_ = 1.0 - r;
  }
  double Step(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0.0, a2_ = 0.0, gain_ = 1.0, y1_ = 0.0, y2_ = 0.0;
};

double Envelope(std::size_t i, std::size_t n, std::size_t ramp) {
  ramp = std::min(ramp, n / 2);
  if (ramp == 0) return 1.0;
  if (i < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / ramp);
  if (i >= n - ramp) {
    return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n - i) / ramp);
  }
  return 1.0;
}

void AddVowel(std::vector<double>& out, std::size_t start, std::size_t length,
              const SpeakerProfile& sp, const Vowel& vowel, double f0_start, double f0_end,
              double level, std::mt19937_64& rng, int rate) {
  constexpr std::size_t kBlock = 64;
  const double nyquist_guard = std::min(7000.0, 0.45 * rate);
  const int max_harmonics = static_cast<int>(nyquist_guard / std::min(f0_start, f0_end));
  std::vector<double> phase(static_cast<std::size_t>(max_harmonics) + 1);
  for (double& p : phase) p = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
  std::vector<double> amp(phase.size(), 0.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double vibrato_phase = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
  double f0 = f0_start;
  for (std::size_t i = 0; i < length && start + i < out.size(); ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(length);
    if (i % kBlock == 0) {
      f0 = (f0_start + (f0_end - f0_start) * t) *
           (1.0 + 0.01 * std::sin(2.0 * std::numbers::pi * sp.vibrato_hz * i / rate + vibrato_phase));
      for (int k = 1; k <= max_harmonics; ++k) {
        const double f = k * f0;
        if (f >= nyquist_guard) {
          amp[k] = 0.0;
          continue;
        }
        const double tilt = std::pow(10.0, sp.tilt_db_per_octave * std::log2(k) / 20.0);
        amp[k] = tilt * FormantGain(f, vowel, sp.formant_scale);
      }
    }
    double s = 0.0;
    for (int k = 1; k <= max_harmonics; ++k) {
      phase[k] += 2.0 * std::numbers::pi * k * f0 / rate;
      if (phase[k] > 2.0 * std::numbers::pi) phase[k] -= 2.0 * std::numbers::pi;
      s += amp[k] * std::sin(phase[k]);
    }
    s += sp.breathiness * noise(rng);
    out[start + i] += level * Envelope(i, length, static_cast<std::size_t>(0.015 * rate)) * s;
  }
}

void AddFricative(std::vector<double>& out, std::size_t start, std::size_t length,
                  double center_hz, double level, std::mt19937_64& rng, int rate) {
  Resonator res(std::min(center_hz, 0.42 * rate), 1500.0, rate);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < length && start + i < out.size(); ++i) {
    out[start + i] +=
        level * Envelope(i, length, static_cast<std::size_t>(0.01 * rate)) * res.Step(noise(rng));
  }
}

}  // namespace

SpeakerProfile MakeSpeaker(int id, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(id) * 7919 + 1);
  SpeakerProfile sp;
  sp.id = id;
  const bool high = id % 2 == 1;
  sp.f0_hz = high ? Uniform(rng, 170.0, 240.0) : Uniform(rng, 90.0, 140.0);
  sp.formant_scale = high ? Uniform(rng, 1.05, 1.25) : Uniform(rng, 0.8, 1.0);
  sp.tilt_db_per_octave = Uniform(rng, -16.0, -7.0);
  sp.breathiness = Uniform(rng, 0.005, 0.04);
  sp.fricative_center_hz = Uniform(rng, 3500.0, 6000.0);
  sp.vibrato_hz = Uniform(rng, 4.0, 6.5);
  sp.peak_level = std::exp(Uniform(rng, std::log(0.2), std::log(0.8)));
  sp.noise_floor = std::exp(Uniform(rng, std::log(1.5e-4), std::log(8e-4)));
  sp.eq_hz = {Uniform(rng, 250.0, 1200.0), Uniform(rng, 1500.0, 3800.0)};
  sp.eq_gain_db = {Uniform(rng, -9.0, 9.0), Uniform(rng, -9.0, 9.0)};
  return sp;
}

Waveform SynthesizeUtterance(const SpeakerProfile& sp, double seconds, std::uint64_t seed,
                             int rate) {
  std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(sp.id) << 40) ^ 0x5EEDULL);
  const auto total = static_cast<std::size_t>(seconds * rate);
  std::vector<double> out(total, 0.0);
  auto ms = [rate](double v) { return static_cast<std::size_t>(v * 1e-3 * rate); };

  std::size_t pos = ms(Uniform(rng, 80.0, 250.0));
  const std::size_t stop = total > ms(120.0) ? total - ms(120.0) : 0;
  double declination = 1.08;
  while (pos < stop) {
    const int syllables = 1 + static_cast<int>(rng() % 3);
    const double word_level = Uniform(rng, 0.7, 1.0);
    for (int s = 0; s < syllables && pos < stop; ++s) {
      if (rng() % 3 != 0) {
        const std::size_t len = ms(Uniform(rng, 30.0, 90.0));
        AddFricative(out, pos, std::min(len, stop - pos),
                     sp.fricative_center_hz * Uniform(rng, 0.8, 1.2), 0.25 * word_level, rng, rate);
        pos += len;
      }
      if (pos >= stop) break;
      const std::size_t len = ms(Uniform(rng, 90.0, 230.0));
      const Vowel& v = kVowels[rng() % kVowels.size()];
      const double f0a = sp.f0_hz * declination * Uniform(rng, 0.9, 1.12);
      const double f0b = f0a * Uniform(rng, 0.88, 1.08);
      AddVowel(out, pos, std::min(len, stop - pos), sp, v, f0a, f0b, word_level, rng, rate);
      pos += len;
    }
    declination = std::max(0.9, declination - 0.02);
    pos += ms(Uniform(rng, 70.0, 260.0));
  }

  for (int i = 0; i < 2; ++i) PeakingFilter(out, sp.eq_hz[i], sp.eq_gain_db[i], rate);

  double peak = 0.0;
  for (double x : out) peak = std::max(peak, std::abs(x));
  const double gain = peak > 0.0 ? sp.peak_level * Uniform(rng, 0.85, 1.15) / peak : 0.0;
  std::normal_distribution<double> floor_noise(0.0, sp.noise_floor);
  for (double& x : out) x = x * gain + floor_noise(rng);
  return {std::move(out), rate};
}

std::vector<SyntheticUtterance> SynthesizeCorpus(int num_utterances, int num_speakers,
                                                 double min_seconds, double max_seconds,
                                                 std::uint64_t seed) {
  std::vector<SpeakerProfile> speakers;
  for (int s = 0; s < num_speakers; ++s) speakers.push_back(MakeSpeaker(s, seed));
  std::mt19937_64 rng(seed + 17);
  std::vector<SyntheticUtterance> corpus;
  for (int u = 0; u < num_utterances; ++u) {
    const SpeakerProfile& sp = speakers[static_cast<std::size_t>(u % num_speakers)];
    const double seconds = Uniform(rng, min_seconds, max_seconds);
    const std::uint64_t utt_seed = rng();
    corpus.push_back({"spk" + std::to_string(sp.id) + "_utt" + std::to_string(u), sp.id,
                      SynthesizeUtterance(sp, seconds, utt_seed)});
  }
  return corpus;
}

}  // namespace speechverifier
