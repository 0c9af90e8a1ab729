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

#include "speechverifier/dsp.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "speechverifier/error.h"

namespace speechverifier {

std::vector<double> HannWindow(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(length));
  }
  return w;
}

struct RealFft::Impl {
  Eigen::FFT<double> fft;
  std::vector<double> real_buffer;
  std::vector<Complex> complex_buffer;
};

RealFft::RealFft(std::size_t size) : size_(size), impl_(std::make_unique<Impl>()) {
  if (size < 2 || size % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "FFT size must be even and >= 2");
  }
  impl_->fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  impl_->real_buffer.resize(size);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::Forward(std::span<const double> input, std::vector<Complex>& out) {
  auto& buf = impl_->real_buffer;
  const std::size_t n = std::min(input.size(), size_);
  std::copy_n(input.begin(), n, buf.begin());
  std::fill(buf.begin() + n, buf.end(), 0.0);
  impl_->fft.fwd(out, buf);
  out.resize(size_ / 2 + 1);
}

void RealFft::Inverse(std::span<const Complex> bins, std::vector<double>& out) {
  if (bins.size() != size_ / 2 + 1) {
    throw Error(ErrorCode::kShape, "inverse FFT expects size/2+1 bins");
  }
  auto& cbuf = impl_->complex_buffer;
  cbuf.assign(bins.begin(), bins.end());
  out.resize(size_);
  impl_->fft.inv(out, cbuf, static_cast<Eigen::DenseIndex>(size_));
}

Spectrogram Stft(std::span<const double> signal, std::size_t fft_size,
                 std::size_t hop, bool pad) {
  if (hop == 0 || hop > fft_size) {
    throw Error(ErrorCode::kInvalidArgument, "STFT hop must be in [1, fft_size]");
  }
  Spectrogram spec;
  spec.fft_size = fft_size;
  spec.hop = hop;
  spec.signal_length = signal.size();
  spec.pad_front = pad ? fft_size - hop : 0;

  std::size_t padded_length = signal.size() + spec.pad_front;
  std::size_t frame_count = 0;
  if (pad) {
    // Cover the last sample with a full complement of overlapping frames.
    frame_count = (padded_length + hop - 1) / hop;
    padded_length = (frame_count - 1) * hop + fft_size;
  } else if (signal.size() >= fft_size) {
    frame_count = (signal.size() - fft_size) / hop + 1;
  }

  std::vector<double> padded(std::max(padded_length, signal.size() + spec.pad_front), 0.0);
  std::copy(signal.begin(), signal.end(), padded.begin() + static_cast<std::ptrdiff_t>(spec.pad_front));

  const std::vector<double> window = HannWindow(fft_size);
  RealFft fft(fft_size);
  std::vector<double> frame(fft_size);
  spec.frames.resize(frame_count);
  for (std::size_t f = 0; f < frame_count; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < fft_size; ++i) frame[i] = padded[start + i] * window[i];
    fft.Forward(frame, spec.frames[f]);
  }
  return spec;
}

std::vector<double> InverseStft(const Spectrogram& spec) {
  const std::size_t n = spec.fft_size;
  const std::size_t total = spec.frames.empty() ? 0 : (spec.frames.size() - 1) * spec.hop + n;
  std::vector<double> acc(std::max(total, spec.pad_front + spec.signal_length), 0.0);
  std::vector<double> norm(acc.size(), 0.0);
  const std::vector<double> window = HannWindow(n);
  RealFft fft(n);
  std::vector<double> frame;
  for (std::size_t f = 0; f < spec.frames.size(); ++f) {
    fft.Inverse(spec.frames[f], frame);
    const std::size_t start = f * spec.hop;
    for (std::size_t i = 0; i < n; ++i) {
      acc[start + i] += frame[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  std::vector<double> out(spec.signal_length, 0.0);
  for (std::size_t i = 0; i < spec.signal_length; ++i) {
    const std::size_t j = i + spec.pad_front;
    out[i] = norm[j] > 1e-12 ? acc[j] / norm[j] : 0.0;
  }
  return out;
}

double DominantFrequencyHz(std::span<const double> signal, int sample_rate,
                           double* bin_width_hz) {
  std::size_t n = 2;
  while (n < signal.size()) n *= 2;
  const std::vector<double> window = HannWindow(signal.size());
  std::vector<double> buf(n, 0.0);
  for (std::size_t i = 0; i < signal.size(); ++i) buf[i] = signal[i] * window[i];
  RealFft fft(n);
  std::vector<Complex> bins;
  fft.Forward(buf, bins);
  std::size_t best = 1;
  for (std::size_t k = 1; k < bins.size(); ++k) {
    if (std::abs(bins[k]) > std::abs(bins[best])) best = k;
  }
  const double width = static_cast<double>(sample_rate) / static_cast<double>(n);
  if (bin_width_hz != nullptr) *bin_width_hz = width;
  return static_cast<double>(best) * width;
}

}  // namespace speechverifier
