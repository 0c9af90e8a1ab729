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

#include "speechverifier/features.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <vector>

#include "speechverifier/dsp.h"
#include "speechverifier/error.h"

namespace speechverifier {

std::size_t MfccConfig::window_samples() const {
  return static_cast<std::size_t>(std::lround(window_ms * 1e-3 * sample_rate));
}

std::size_t MfccConfig::hop_samples() const {
  return static_cast<std::size_t>(std::lround(hop_ms * 1e-3 * sample_rate));
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd MelFilterbank(const MfccConfig& c) {
  const int bins = c.fft_size / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(c.mel_filters, bins);
  const double lo = HzToMel(c.low_hz);
  const double hi = HzToMel(c.high_hz);
  std::vector<double> edges(static_cast<std::size_t>(c.mel_filters) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(lo + (hi - lo) * static_cast<double>(i) / (c.mel_filters + 1));
  }
  for (int m = 0; m < c.mel_filters; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * c.sample_rate / c.fft_size;
      if (f > left && f < right) {
        fb(m, k) = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
      }
    }
  }
  return fb;
}

Eigen::MatrixXd Deltas(const Eigen::MatrixXd& x) {
  const Eigen::Index t = x.rows();
  Eigen::MatrixXd d(t, x.cols());
  auto row = [&](Eigen::Index i) { return x.row(std::clamp<Eigen::Index>(i, 0, t - 1)); };
  for (Eigen::Index i = 0; i < t; ++i) {
    d.row(i) = ((row(i + 1) - row(i - 1)) + 2.0 * (row(i + 2) - row(i - 2))) / 10.0;
  }
  return d;
}

Eigen::MatrixXd LogMelEnergies(const Waveform& w, const MfccConfig& c) {
  if (w.sample_rate != c.sample_rate) {
    throw Error(ErrorCode::kInvalidArgument, "MFCC expects " + std::to_string(c.sample_rate) +
                                                 " Hz audio, got " + std::to_string(w.sample_rate));
  }
  const std::size_t window = c.window_samples();
  const std::size_t hop = c.hop_samples();
  if (c.cepstra > c.mel_filters || window < hop || hop == 0 ||
      window > static_cast<std::size_t>(c.fft_size)) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent MFCC configuration");
  }
  const std::size_t frames = FrameCount(w.size(), window, hop);
  if (frames == 0) {
    throw Error(ErrorCode::kTooShort, "audio shorter than one MFCC window");
  }
  const Eigen::MatrixXd fb = MelFilterbank(c);
  const std::vector<double> hann = HannWindow(window);
  RealFft fft(static_cast<std::size_t>(c.fft_size));
  std::vector<double> buf(static_cast<std::size_t>(c.fft_size));
  std::vector<Complex> spec;
  Eigen::VectorXd power(c.fft_size / 2 + 1);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(frames), c.mel_filters);
  for (std::size_t f = 0; f < frames; ++f) {
    const double* x = w.samples.data() + f * hop;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < window; ++i) {
      const double emphasized = x[i] - c.pre_emphasis * (i > 0 ? x[i - 1] : x[0]);
      buf[i] = emphasized * hann[i];
    }
    fft.Forward(buf, spec);
    for (Eigen::Index k = 0; k < power.size(); ++k) power(k) = std::norm(spec[static_cast<std::size_t>(k)]);
    const Eigen::VectorXd mel = fb * power;
    for (int m = 0; m < c.mel_filters; ++m) {
      out(static_cast<Eigen::Index>(f), m) = std::log(std::max(mel(m), c.log_floor));
    }
  }
  return out;
}

FrameFeatures Mfcc(const Waveform& w, const MfccConfig& c) {
  const Eigen::MatrixXd logmel = LogMelEnergies(w, c);
  // DCT-II with coefficient 0 scaled to the mean and the rest by 2/M.
  const int m_count = c.mel_filters;
  Eigen::MatrixXd dct(m_count, c.cepstra);
  for (int k = 0; k < c.cepstra; ++k) {
    for (int m = 0; m < m_count; ++m) {
      dct(m, k) = (k == 0 ? 1.0 : 2.0) / m_count *
                  std::cos(std::numbers::pi * k * (m + 0.5) / m_count);
    }
  }
  const Eigen::MatrixXd cep = logmel * dct;
  FrameFeatures out;
  out.frame_hop_seconds = static_cast<double>(c.hop_samples()) / c.sample_rate;
  out.source = FeatureSource::kMfcc;
  if (c.deltas) {
    const Eigen::MatrixXd d1 = Deltas(cep);
    const Eigen::MatrixXd d2 = Deltas(d1);
    out.matrix.resize(cep.rows(), 3 * cep.cols());
    out.matrix << cep, d1, d2;
  } else {
    out.matrix = cep;
  }
  if (c.cepstral_mean_norm) {
    out.matrix.rowwise() -= out.matrix.colwise().mean();
  }
  return out;
}

namespace {

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

float ReadF32(const unsigned char* p) { return std::bit_cast<float>(ReadU32(p)); }

void PutU32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

}  // namespace

FrameFeatures LoadExternalFeatures(const std::filesystem::path& path,
                                   std::optional<int> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open feature file " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "SVFT", 4) != 0) {
    throw Error(ErrorCode::kParse, "not an SVFT feature file: " + path.string());
  }
  const std::uint32_t t = ReadU32(bytes.data() + 4);
  const std::uint32_t d = ReadU32(bytes.data() + 8);
  const float hop = ReadF32(bytes.data() + 12);
  const std::uint64_t expected_bytes = 16 + 4ull * t * d;
  if (bytes.size() != expected_bytes) {
    throw Error(ErrorCode::kShape, "feature file declares " + std::to_string(t) + "x" +
                                       std::to_string(d) + " values but holds " +
                                       std::to_string((bytes.size() - 16) / 4));
  }
  if (t == 0 || d == 0) throw Error(ErrorCode::kShape, "feature matrix is empty");
  if (expected_dim && static_cast<int>(d) != *expected_dim) {
    throw Error(ErrorCode::kShape, "feature dimension " + std::to_string(d) +
                                       " does not match model input " +
                                       std::to_string(*expected_dim));
  }
  if (!std::isfinite(hop) || hop <= 0.0f) throw Error(ErrorCode::kData, "invalid frame hop");
  FrameFeatures out;
  out.source = FeatureSource::kExternal;
  out.frame_hop_seconds = hop;
  out.matrix.resize(t, d);
  const unsigned char* p = bytes.data() + 16;
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < d; ++j, p += 4) {
      const float v = ReadF32(p);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kData, "non-finite feature at frame " + std::to_string(i));
      }
      out.matrix(i, j) = v;
    }
  }
  return out;
}

void SaveExternalFeatures(const FrameFeatures& f, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes = {'S', 'V', 'F', 'T'};
  PutU32(bytes, static_cast<std::uint32_t>(f.frames()));
  PutU32(bytes, static_cast<std::uint32_t>(f.dim()));
  PutU32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(f.frame_hop_seconds)));
  for (Eigen::Index i = 0; i < f.frames(); ++i) {
    for (Eigen::Index j = 0; j < f.dim(); ++j) {
      PutU32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(f.matrix(i, j))));
    }
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "cannot write feature file " + path.string());
}

}  // namespace speechverifier
