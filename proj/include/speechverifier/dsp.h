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

#ifndef SPEECHVERIFIER_DSP_H_
#define SPEECHVERIFIER_DSP_H_

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace speechverifier {

using Complex = std::complex<double>;

// Periodic Hann window of the given length.
std::vector<double> HannWindow(std::size_t length);

// Real-input FFT of fixed size. Forward() yields size/2 + 1 bins. Inverse()
// takes size/2 + 1 bins and returns size real samples (scaled by 1/size).
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;

  std::size_t size() const { return size_; }
  void Forward(std::span<const double> input, std::vector<Complex>& out);
  void Inverse(std::span<const Complex> bins, std::vector<double>& out);

 private:
  struct Impl;
  std::size_t size_;
  std::unique_ptr<Impl> impl_;
};

// Short-time spectrum with rows = frames, each row holding fft_size/2 + 1
// bins. Frames start at offset - pad_front + i * hop of the zero-extended
// signal.
struct Spectrogram {
  std::size_t fft_size = 0;
  std::size_t hop = 0;
  std::size_t pad_front = 0;
  std::size_t signal_length = 0;
  std::vector<std::vector<Complex>> frames;
};

// When pad is true the signal is extended by fft_size - hop zeros at the front
// and enough zeros at the back that every sample is covered by a full set of
// overlapping frames, which makes InverseStft an exact inverse.
Spectrogram Stft(std::span<const double> signal, std::size_t fft_size,
                 std::size_t hop, bool pad);
std::vector<double> InverseStft(const Spectrogram& spectrogram);

// Index of the largest-magnitude bin of a Hann-windowed FFT over the whole
// buffer (zero-padded to the next power of two). Bin 0 is ignored.
double DominantFrequencyHz(std::span<const double> signal, int sample_rate,
                           double* bin_width_hz = nullptr);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_DSP_H_
