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

#include "speechverifier/ops.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <random>

#include <unistd.h>

#include "speechverifier/dsp.h"
#include "speechverifier/error.h"

namespace speechverifier {
namespace {

void RequireDuration(const Waveform& w) {
  if (w.DurationSeconds() < kMinOpSeconds) {
    throw Error(ErrorCode::kTooShort, "operation requires at least 2 s of audio, got " +
                                          std::to_string(w.DurationSeconds()) + " s");
  }
}

std::size_t UniformIndex(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Waveform Reencode(const Waveform& w) {
  Waveform out = w;
  for (double& x : out.samples) {
    const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    x = q / 32768.0;
  }
  return out;
}

Waveform CompressionProxy(const Waveform& w, const BenignOp& op) {
  if (op.compression_bits < 1 || op.compression_bits > 16 || op.compression_range_db <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "compression proxy parameters out of range");
  }
  Spectrogram spec = Stft(w.samples, 1024, 256, true);
  double peak = 0.0;
  for (const auto& frame : spec.frames) {
    for (const Complex& c : frame) peak = std::max(peak, std::abs(c));
  }
  const double levels = std::ldexp(1.0, op.compression_bits) - 1.0;
  const double step_db = op.compression_range_db / levels;
  const double bin_hz = static_cast<double>(w.sample_rate) / 1024.0;
  for (auto& frame : spec.frames) {
    for (std::size_t k = 0; k < frame.size(); ++k) {
      const double mag = std::abs(frame[k]);
      if (k * bin_hz > op.compression_cutoff_hz || peak == 0.0 || mag == 0.0) {
        frame[k] = 0.0;
        continue;
      }
      const double db = 20.0 * std::log10(mag / peak);
      if (db < -op.compression_range_db) {
        frame[k] = 0.0;
        continue;
      }
      const double qdb = std::round(db / step_db) * step_db;
      frame[k] *= peak * std::pow(10.0, qdb / 20.0) / mag;
    }
  }
  return {InverseStft(spec), w.sample_rate};
}

Waveform ExternalCompression(const Waveform& w, const BenignOp& op) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path();
  const std::string stem = "sv_codec_" + std::to_string(::getpid()) + "_" +
                           std::to_string(counter.fetch_add(1));
  const auto in_path = dir / (stem + "_in.wav");
  const auto out_path = dir / (stem + "_out.wav");
  WriteWav(w, in_path, WavEncoding::kFloat32);
  std::string cmd = op.external_command;
  for (const auto& [key, value] : {std::pair<std::string, std::string>{"{input}", in_path.string()},
                                   {"{output}", out_path.string()}}) {
    for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key)) {
      cmd.replace(pos, key.size(), value);
    }
  }
  const int status = std::system(cmd.c_str());
  std::error_code ec;
  std::filesystem::remove(in_path, ec);
  if (status != 0) {
    std::filesystem::remove(out_path, ec);
    throw Error(ErrorCode::kIo, "external encoder failed: " + cmd);
  }
  Waveform decoded = ReadWav(out_path);
  std::filesystem::remove(out_path, ec);
  decoded = Resample(decoded, w.sample_rate);
  decoded.samples.resize(w.size(), 0.0);
  return decoded;
}

Waveform ResampleRoundTrip(const Waveform& w, int rate) {
  if (rate != 8000 && rate != 22050 && rate != 44100) {
    throw Error(ErrorCode::kInvalidArgument,
                "resample target must be 8000, 22050 or 44100 Hz, got " + std::to_string(rate));
  }
  Waveform out = Resample(Resample(w, rate), w.sample_rate);
  out.samples.resize(w.size(), 0.0);
  return out;
}

// Non-overlapping 20 ms frames (the last one may be partial). A frame is muted
// when its RMS is strictly below the quantile threshold; other frames are left
// untouched, so a second pass finds the same frames and changes nothing.
Waveform MuteQuietFrames(const Waveform& w, double quantile) {
  if (quantile < 0.0 || quantile > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "mute quantile must be in [0, 1]");
  }
  const std::size_t frame = static_cast<std::size_t>(0.02 * w.sample_rate);
  std::vector<double> rms;
  for (std::size_t s = 0; s < w.size(); s += frame) {
    const std::size_t len = std::min(frame, w.size() - s);
    rms.push_back(RmsEnergy(std::span<const double>(w.samples).subspan(s, len)));
  }
  const double threshold = Quantile(rms, quantile);
  Waveform out = w;
  for (std::size_t f = 0; f < rms.size(); ++f) {
    if (rms[f] < threshold) {
      const std::size_t s = f * frame;
      std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(s),
                out.samples.begin() + static_cast<std::ptrdiff_t>(std::min(s + frame, w.size())),
                0.0);
    }
  }
  return out;
}

// Picks disjoint pieces inside voiced regions whose lengths sum to total.
// Regions are visited in seeded random order; each contributes at most its
// own length, placed uniformly within it.
std::vector<Interval> PlacePieces(std::vector<Interval> regions, std::size_t total,
                                  std::mt19937_64& rng) {
  std::size_t available = 0;
  for (const Interval& r : regions) available += r.length();
  if (available < total || regions.empty()) {
    throw Error(ErrorCode::kInfeasibleEdit, "voiced audio (" + std::to_string(available) +
                                                " samples) is shorter than the requested edit (" +
                                                std::to_string(total) + " samples)");
  }
  std::shuffle(regions.begin(), regions.end(), rng);
  std::vector<Interval> pieces;
  std::size_t remaining = total;
  for (const Interval& r : regions) {
    if (remaining == 0) break;
    const std::size_t take = std::min(r.length(), remaining);
    const std::size_t start = r.start + UniformIndex(rng, 0, r.length() - take);
    pieces.push_back({start, start + take});
    remaining -= take;
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  return pieces;
}

// A donor excerpt of exactly length samples at a seeded offset, looping the
// donor when it is shorter than requested.
std::vector<double> DonorSlice(const Waveform& donor, std::size_t length, std::mt19937_64& rng) {
  if (donor.samples.empty()) throw Error(ErrorCode::kInvalidArgument, "donor waveform is empty");
  std::vector<double> out(length);
  const std::size_t n = donor.size();
  const std::size_t offset = n > length ? UniformIndex(rng, 0, n - length) : 0;
  for (std::size_t i = 0; i < length; ++i) out[i] = donor.samples[(offset + i) % n];
  return out;
}

std::size_t EditLength(const Waveform& w, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "alteration ratio must be in (0, 1]");
  }
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(w.size())));
}

TamperRecord Reorder(const Waveform& w, const MaliciousOp& op, std::mt19937_64& rng) {
  const std::vector<Interval> voiced = VoicedRegions(w);
  std::vector<std::size_t> cuts;
  for (std::size_t i = 1; i < voiced.size(); ++i) {
    cuts.push_back((voiced[i - 1].end + voiced[i].start) / 2);
  }
  if (cuts.size() < 3) {
    throw Error(ErrorCode::kInfeasibleEdit,
                "reordering needs at least 4 voiced regions, found " + std::to_string(voiced.size()));
  }
  const std::size_t max_chunks = std::min<std::size_t>(8, cuts.size() + 1);
  const std::size_t chunks = UniformIndex(rng, 4, max_chunks);
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(chunks - 1);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Interval> pieces;
  std::size_t prev = 0;
  for (std::size_t c : cuts) {
    pieces.push_back({prev, c});
    prev = c;
  }
  pieces.push_back({prev, w.size()});

  std::vector<std::size_t> order(pieces.size());
  std::iota(order.begin(), order.end(), 0);
  const std::vector<std::size_t> identity = order;
  do {
    std::shuffle(order.begin(), order.end(), rng);
  } while (order == identity);

  TamperRecord rec;
  rec.op = op;
  rec.op.level = Severity::kSevere;
  rec.output.sample_rate = w.sample_rate;
  rec.output.samples.reserve(w.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Interval& src = pieces[order[pos]];
    const std::size_t out_start = rec.output.size();
    rec.output.samples.insert(rec.output.samples.end(),
                              w.samples.begin() + static_cast<std::ptrdiff_t>(src.start),
                              w.samples.begin() + static_cast<std::ptrdiff_t>(src.end));
    if (order[pos] != pos) {
      const Interval moved{out_start, rec.output.size()};
      if (!rec.edited_intervals.empty() && rec.edited_intervals.back().end == moved.start) {
        rec.edited_intervals.back().end = moved.end;
      } else {
        rec.edited_intervals.push_back(moved);
      }
    }
  }
  return rec;
}

}  // namespace

double SeverityRatio(Severity level) {
  switch (level) {
    case Severity::kMinor:
      return 0.1;
    case Severity::kModerate:
      return 0.3;
    case Severity::kSevere:
      return 0.5;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown severity");
}

bool RequiresDonor(MaliciousKind kind) {
  return kind == MaliciousKind::kSplicing || kind == MaliciousKind::kSubstitution ||
         kind == MaliciousKind::kTtsProxy;
}

std::string BenignKindName(BenignKind kind) {
  switch (kind) {
    case BenignKind::kCompression:
      return "compression";
    case BenignKind::kReencoding:
      return "reencoding";
    case BenignKind::kResampling:
      return "resampling";
    case BenignKind::kNoiseSuppression:
      return "noise_suppression";
  }
  return "unknown";
}

std::string MaliciousKindName(MaliciousKind kind) {
  switch (kind) {
    case MaliciousKind::kDeletion:
      return "deletion";
    case MaliciousKind::kSplicing:
      return "splicing";
    case MaliciousKind::kSubstitution:
      return "substitution";
    case MaliciousKind::kSilencing:
      return "silencing";
    case MaliciousKind::kReordering:
      return "reordering";
    case MaliciousKind::kVoiceConversion:
      return "voice_conversion";
    case MaliciousKind::kTtsProxy:
      return "tts_proxy";
  }
  return "unknown";
}

std::string SeverityName(Severity level) {
  switch (level) {
    case Severity::kMinor:
      return "minor";
    case Severity::kModerate:
      return "moderate";
    case Severity::kSevere:
      return "severe";
  }
  return "unknown";
}

namespace {

std::string Normalize(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '-' || c == ' ') c = '_';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

BenignKind ParseBenignKind(const std::string& name) {
  const std::string n = Normalize(name);
  for (BenignKind k : {BenignKind::kCompression, BenignKind::kReencoding, BenignKind::kResampling,
                       BenignKind::kNoiseSuppression}) {
    if (BenignKindName(k) == n) return k;
  }
  if (n == "noisesuppression") return BenignKind::kNoiseSuppression;
  throw Error(ErrorCode::kInvalidArgument, "unknown benign operation: " + name);
}

MaliciousKind ParseMaliciousKind(const std::string& name) {
  const std::string n = Normalize(name);
  for (MaliciousKind k :
       {MaliciousKind::kDeletion, MaliciousKind::kSplicing, MaliciousKind::kSubstitution,
        MaliciousKind::kSilencing, MaliciousKind::kReordering, MaliciousKind::kVoiceConversion,
        MaliciousKind::kTtsProxy}) {
    if (MaliciousKindName(k) == n) return k;
  }
  if (n == "voiceconversion") return MaliciousKind::kVoiceConversion;
  if (n == "ttsproxy" || n == "tts") return MaliciousKind::kTtsProxy;
  throw Error(ErrorCode::kInvalidArgument, "unknown malicious operation: " + name);
}

Severity ParseSeverity(const std::string& name) {
  const std::string n = Normalize(name);
  for (Severity s : {Severity::kMinor, Severity::kModerate, Severity::kSevere}) {
    if (SeverityName(s) == n) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown severity level: " + name);
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "quantile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<Interval> VoicedRegions(const Waveform& w, double frame_ms, double hop_ms,
                                    double energy_quantile) {
  const auto window = static_cast<std::size_t>(std::lround(frame_ms * 1e-3 * w.sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(hop_ms * 1e-3 * w.sample_rate));
  if (window == 0 || hop == 0) throw Error(ErrorCode::kInvalidArgument, "bad VAD framing");
  if (w.size() < window) {
    throw Error(ErrorCode::kTooShort, "waveform shorter than one VAD frame");
  }
  std::vector<double> rms;
  for (const FrameView& f : FrameSignal(w, window, hop)) rms.push_back(RmsEnergy(f));
  const double threshold = Quantile(rms, energy_quantile);

  std::vector<std::pair<std::size_t, std::size_t>> runs;  // inclusive frame runs
  for (std::size_t f = 0; f < rms.size(); ++f) {
    if (rms[f] <= 0.0 || rms[f] < threshold) continue;
    if (!runs.empty() && f - runs.back().second - 1 < 3) {
      runs.back().second = f;
    } else {
      runs.push_back({f, f});
    }
  }
  std::vector<Interval> out;
  for (const auto& [first, last] : runs) {
    std::size_t end = last * hop + window;
    if (last + 1 == rms.size()) end = w.size();
    out.push_back({first * hop, std::min(end, w.size())});
  }
  return out;
}

Waveform ApplyBenign(const Waveform& w, const BenignOp& op) {
  RequireDuration(w);
  switch (op.kind) {
    case BenignKind::kCompression:
      return op.external_command.empty() ? CompressionProxy(w, op) : ExternalCompression(w, op);
    case BenignKind::kReencoding:
      return Reencode(w);
    case BenignKind::kResampling:
      return ResampleRoundTrip(w, op.resample_rate);
    case BenignKind::kNoiseSuppression:
      return MuteQuietFrames(w, op.mute_quantile);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown benign operation");
}

TamperRecord ApplyMalicious(const Waveform& w, const MaliciousOp& op) {
  if (RequiresDonor(op.kind) && !op.donor) {
    throw Error(ErrorCode::kInvalidArgument,
                MaliciousKindName(op.kind) + " requires a donor waveform");
  }
  std::mt19937_64 rng(op.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(op.kind) + 1);
  TamperRecord rec;
  rec.op = op;
  rec.output.sample_rate = w.sample_rate;

  switch (op.kind) {
    case MaliciousKind::kVoiceConversion:
      rec.output = PitchShift(w, op.semitones);
      rec.edited_intervals.push_back({0, rec.output.size()});
      return rec;
    case MaliciousKind::kReordering:
      return Reorder(w, op, rng);
    case MaliciousKind::kTtsProxy: {
      const std::size_t n = EditLength(w, op.ratio.value_or(1.0));
      const std::size_t start = UniformIndex(rng, 0, w.size() - n);
      rec.output = w;
      const std::vector<double> foreign = DonorSlice(*op.donor, n, rng);
      std::copy(foreign.begin(), foreign.end(),
                rec.output.samples.begin() + static_cast<std::ptrdiff_t>(start));
      if (n > 0) rec.edited_intervals.push_back({start, start + n});
      return rec;
    }
    default:
      break;
  }

  const std::size_t total = EditLength(w, op.ratio.value_or(SeverityRatio(op.level)));
  const std::vector<Interval> pieces = PlacePieces(VoicedRegions(w), total, rng);
  switch (op.kind) {
    case MaliciousKind::kDeletion: {
      std::size_t prev = 0;
      for (const Interval& p : pieces) {
        rec.output.samples.insert(rec.output.samples.end(),
                                  w.samples.begin() + static_cast<std::ptrdiff_t>(prev),
                                  w.samples.begin() + static_cast<std::ptrdiff_t>(p.start));
        prev = p.end;
      }
      rec.output.samples.insert(rec.output.samples.end(),
                                w.samples.begin() + static_cast<std::ptrdiff_t>(prev),
                                w.samples.end());
      rec.edited_intervals = pieces;
      break;
    }
    case MaliciousKind::kSilencing:
      rec.output = w;
      for (const Interval& p : pieces) {
        std::fill(rec.output.samples.begin() + static_cast<std::ptrdiff_t>(p.start),
                  rec.output.samples.begin() + static_cast<std::ptrdiff_t>(p.end), 0.0);
      }
      rec.edited_intervals = pieces;
      break;
    case MaliciousKind::kSubstitution:
      rec.output = w;
      for (const Interval& p : pieces) {
        const std::vector<double> patch = DonorSlice(*op.donor, p.length(), rng);
        std::copy(patch.begin(), patch.end(),
                  rec.output.samples.begin() + static_cast<std::ptrdiff_t>(p.start));
      }
      rec.edited_intervals = pieces;
      break;
    case MaliciousKind::kSplicing: {
      std::size_t prev = 0;
      for (const Interval& p : pieces) {
        rec.output.samples.insert(rec.output.samples.end(),
                                  w.samples.begin() + static_cast<std::ptrdiff_t>(prev),
                                  w.samples.begin() + static_cast<std::ptrdiff_t>(p.start));
        const std::vector<double> patch = DonorSlice(*op.donor, p.length(), rng);
        const std::size_t at = rec.output.size();
        rec.output.samples.insert(rec.output.samples.end(), patch.begin(), patch.end());
        rec.edited_intervals.push_back({at, at + patch.size()});
        prev = p.start;
      }
      rec.output.samples.insert(rec.output.samples.end(),
                                w.samples.begin() + static_cast<std::ptrdiff_t>(prev),
                                w.samples.end());
      break;
    }
    default:
      throw Error(ErrorCode::kInvalidArgument, "unknown malicious operation");
  }
  return rec;
}

}  // namespace speechverifier
