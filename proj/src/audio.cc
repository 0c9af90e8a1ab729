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

#include "speechverifier/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "speechverifier/dsp.h"
#include "speechverifier/error.h"

namespace speechverifier {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t ReadU32(std::span<const unsigned char> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t ReadU16(std::span<const unsigned char> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void PutU32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void PutU16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void PutTag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool TagIs(std::span<const unsigned char> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

double DecodeSample(std::span<const unsigned char> b, std::size_t at,
                    std::uint16_t format, int bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      std::uint32_t raw = ReadU32(b, at);
      float f;
      std::memcpy(&f, &raw, sizeof(f));
      return static_cast<double>(f);
    }
    std::uint64_t raw = static_cast<std::uint64_t>(ReadU32(b, at)) |
                        (static_cast<std::uint64_t>(ReadU32(b, at + 4)) << 32);
    double d;
    std::memcpy(&d, &raw, sizeof(d));
    return d;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(b[at]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(ReadU16(b, at)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(b[at]) |
                       (static_cast<std::int32_t>(b[at + 1]) << 8) |
                       (static_cast<std::int32_t>(b[at + 2]) << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32:
      return static_cast<std::int32_t>(ReadU32(b, at)) / 2147483648.0;
  }
  return 0.0;
}

// Kaiser-windowed sinc kernel; tau in input samples, cutoff in cycles/sample.
double KaiserSinc(double tau, double cutoff, double half_width, double beta,
                  double i0_beta) {
  if (std::abs(tau) >= half_width) return 0.0;
  const double x = 2.0 * cutoff * tau;
  const double sinc =
      std::abs(x) < 1e-12 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
  const double r = tau / half_width;
  const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0_beta;
  return 2.0 * cutoff * sinc * window;
}

constexpr double kKaiserBeta = 8.0;
constexpr double kZeroCrossings = 32.0;
constexpr double kRolloff = 0.95;

}  // namespace

Waveform ParseWav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || !TagIs(bytes, 0, "RIFF") || !TagIs(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::kParse, "missing RIFF/WAVE header");
  }
  std::uint16_t format = 0;
  int channels = 0;
  int bits = 0;
  int sample_rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = ReadU32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (TagIs(bytes, pos, "fmt ")) {
      if (chunk_size < 16 || body + chunk_size > bytes.size()) {
        throw Error(ErrorCode::kParse, "truncated fmt chunk");
      }
      format = ReadU16(bytes, body);
      channels = ReadU16(bytes, body + 2);
      sample_rate = static_cast<int>(ReadU32(bytes, body + 4));
      bits = ReadU16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (chunk_size < 40) throw Error(ErrorCode::kParse, "truncated extensible fmt");
        // The sub-format GUID starts with the plain format tag.
        format = ReadU16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (TagIs(bytes, pos, "data")) {
      if (!have_fmt) throw Error(ErrorCode::kParse, "data chunk before fmt chunk");
      if (channels <= 0 || sample_rate <= 0) {
        throw Error(ErrorCode::kParse, "invalid channel count or sample rate");
      }
      const bool int_ok = format == kFormatPcm &&
                          (bits == 8 || bits == 16 || bits == 24 || bits == 32);
      const bool float_ok = format == kFormatFloat && (bits == 32 || bits == 64);
      if (!int_ok && !float_ok) {
        throw Error(ErrorCode::kUnsupportedFormat,
                    "format " + std::to_string(format) + " with " +
                        std::to_string(bits) + " bits");
      }
      const std::size_t available = std::min<std::size_t>(chunk_size, bytes.size() - body);
      const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
      const std::size_t frames = available / frame_bytes;
      Waveform w;
      w.sample_rate = sample_rate;
      w.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double sum = 0.0;
        for (int c = 0; c < channels; ++c) {
          sum += DecodeSample(bytes, body + i * frame_bytes + c * (bits / 8), format, bits);
        }
        w.samples[i] = sum / channels;
      }
      return w;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  throw Error(ErrorCode::kParse, "no data chunk");
}

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return ParseWav(bytes);
}

std::vector<unsigned char> SerializeWav(const Waveform& waveform, WavEncoding encoding) {
  const bool is_float = encoding == WavEncoding::kFloat32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint16_t block_align = bits / 8;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(waveform.samples.size() * block_align);
  std::vector<unsigned char> out;
  out.reserve(58 + data_bytes);
  PutTag(out, "RIFF");
  // PCM: 4 + (8 + 16) + (8 + data). Float adds cbSize and a fact chunk.
  const std::uint32_t riff_size = is_float ? 4 + 26 + 12 + 8 + data_bytes : 4 + 24 + 8 + data_bytes;
  PutU32(out, riff_size);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, is_float ? 18 : 16);
  PutU16(out, is_float ? kFormatFloat : kFormatPcm);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(waveform.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(waveform.sample_rate) * block_align);
  PutU16(out, block_align);
  PutU16(out, bits);
  if (is_float) {
    PutU16(out, 0);
    PutTag(out, "fact");
    PutU32(out, 4);
    PutU32(out, static_cast<std::uint32_t>(waveform.samples.size()));
  }
  PutTag(out, "data");
  PutU32(out, data_bytes);
  for (double s : waveform.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    if (is_float) {
      const float f = static_cast<float>(clipped);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof(raw));
      PutU32(out, raw);
    } else {
      const long q = std::clamp(std::lround(clipped * 32768.0), -32768L, 32767L);
      PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  }
  return out;
}

void WriteWav(const Waveform& waveform, const std::filesystem::path& path,
              WavEncoding encoding) {
  const std::vector<unsigned char> bytes = SerializeWav(waveform, encoding);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<double> ResampleRational(std::span<const double> input, int up, int down) {
  if (up <= 0 || down <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "resampling factors must be positive");
  }
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == down) return {input.begin(), input.end()};

  const long long len = static_cast<long long>(input.size());
  const std::size_t out_len =
      static_cast<std::size_t>((len * up * 2 + down) / (2LL * down));
  std::vector<double> out(out_len, 0.0);
  if (input.empty()) return out;

  const double cutoff = 0.5 * std::min(1.0, static_cast<double>(up) / down) * kRolloff;
  const double half_width = kZeroCrossings / (2.0 * cutoff);
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  const int reach = static_cast<int>(std::ceil(half_width)) + 1;
  const int taps = 2 * reach + 1;

  // One filter per output phase; phase p covers fractional offsets p / up.
  std::vector<double> table(static_cast<std::size_t>(up) * taps);
  for (int p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    for (int t = 0; t < taps; ++t) {
      const int offset = t - reach;
      table[static_cast<std::size_t>(p) * taps + t] =
          KaiserSinc(frac - offset, cutoff, half_width, kKaiserBeta, i0_beta);
    }
  }
  for (std::size_t n = 0; n < out_len; ++n) {
    const long long num = static_cast<long long>(n) * down;
    const long long base = num / up;
    const int phase = static_cast<int>(num % up);
    const double* h = &table[static_cast<std::size_t>(phase) * taps];
    double acc = 0.0;
    const long long lo = std::max<long long>(0, base - reach);
    const long long hi = std::min<long long>(len - 1, base + reach);
    for (long long j = lo; j <= hi; ++j) {
      acc += input[static_cast<std::size_t>(j)] * h[j - base + reach];
    }
    out[n] = acc;
  }
  return out;
}

Waveform Resample(const Waveform& waveform, int target_rate) {
  if (target_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "target rate must be positive");
  }
  Waveform out;
  out.sample_rate = target_rate;
  out.samples = ResampleRational(waveform.samples, target_rate, waveform.sample_rate);
  return out;
}

std::size_t FrameCount(std::size_t length, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0) {
    throw Error(ErrorCode::kInvalidArgument, "window and hop must be >= 1");
  }
  if (length < window) return 0;
  return (length - window) / hop + 1;
}

std::vector<FrameView> FrameSignal(const Waveform& waveform, std::size_t window_samples,
                                   std::size_t hop_samples) {
  const std::size_t count = FrameCount(waveform.size(), window_samples, hop_samples);
  std::vector<FrameView> frames;
  frames.reserve(count);
  const std::span<const double> all(waveform.samples);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = i * hop_samples;
    frames.push_back({start, window_samples, all.subspan(start, window_samples)});
  }
  return frames;
}

double RmsEnergy(std::span<const double> frame) {
  if (frame.empty()) throw Error(ErrorCode::kInvalidArgument, "empty frame");
  double sum = 0.0;
  for (double x : frame) sum += x * x;
  return std::sqrt(sum / static_cast<double>(frame.size()));
}

std::vector<double> TimeStretch(std::span<const double> input, double factor) {
  constexpr std::size_t kFrame = 1024;
  constexpr std::size_t kHop = 256;
  constexpr long kTolerance = 256;
  constexpr std::size_t kCorrelation = 512;

  const std::size_t out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(input.size()) * factor));
  std::vector<double> out(out_len + kFrame, 0.0);
  std::vector<double> norm(out_len + kFrame, 0.0);
  if (input.empty() || out_len == 0) return std::vector<double>(out_len, 0.0);

  const std::vector<double> window = HannWindow(kFrame);
  const long in_len = static_cast<long>(input.size());
  auto at = [&](long i) { return (i >= 0 && i < in_len) ? input[static_cast<std::size_t>(i)] : 0.0; };

  const std::size_t frames = out_len / kHop + 1;
  long previous = 0;
  for (std::size_t m = 0; m < frames; ++m) {
    const long nominal = std::lround(static_cast<double>(m * kHop) / factor);
    long chosen = nominal;
    if (m > 0) {
      // Align with the natural continuation of the previously copied frame.
      const long target = previous + static_cast<long>(kHop);
      double best = -std::numeric_limits<double>::infinity();
      for (long delta = -kTolerance; delta <= kTolerance; ++delta) {
        const long candidate = nominal + delta;
        double corr = 0.0;
        for (std::size_t i = 0; i < kCorrelation; ++i) {
          corr += at(candidate + static_cast<long>(i)) * at(target + static_cast<long>(i));
        }
        if (corr > best) {
          best = corr;
          chosen = candidate;
        }
      }
    }
    previous = chosen;
    const std::size_t start = m * kHop;
    for (std::size_t i = 0; i < kFrame && start + i < out.size(); ++i) {
      out[start + i] += window[i] * at(chosen + static_cast<long>(i));
      norm[start + i] += window[i];
    }
  }
  std::vector<double> result(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    result[i] = norm[i] > 1e-3 ? out[i] / norm[i] : 0.0;
  }
  return result;
}

Waveform PitchShift(const Waveform& waveform, double semitones) {
  if (std::abs(semitones) > 12.0) {
    throw Error(ErrorCode::kInvalidArgument, "pitch shift limited to +/-12 semitones");
  }
  if (semitones == 0.0) return waveform;
  const double ratio = std::pow(2.0, semitones / 12.0);
  // Playing back 1/ratio as many samples at the original rate raises pitch.
  constexpr int kDenominator = 1024;
  const int up = static_cast<int>(std::lround(kDenominator / ratio));
  std::vector<double> faster = ResampleRational(waveform.samples, up, kDenominator);
  const double stretch = static_cast<double>(waveform.size()) /
                         std::max<std::size_t>(1, faster.size());
  std::vector<double> restored = TimeStretch(faster, stretch);
  restored.resize(waveform.size(), 0.0);
  return {std::move(restored), waveform.sample_rate};
}

}  // namespace speechverifier
