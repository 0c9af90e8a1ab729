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

#ifndef SPEECHVERIFIER_METRICS_H_
#define SPEECHVERIFIER_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace speechverifier {

// Scale-invariant SNR in dB. The test signal is projected onto the reference;
// the result is capped at kSiSnrCapDb when the residual vanishes.
inline constexpr double kSiSnrCapDb = 100.0;
double SiSnr(std::span<const double> reference, std::span<const double> test);

// Mean over STFT frames (2048 / 512, Hann) of the RMS difference of log10
// magnitudes, with magnitudes floored at 1e-8.
double LogSpectralDistance(std::span<const double> reference,
                           std::span<const double> test);

// Benign is the positive class.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
};

// A rate whose denominator is zero is reported as nullopt.
struct Rates {
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> tnr;
  std::optional<double> fnr;
};

Rates ComputeRates(const ConfusionCounts& counts);

enum class Label { kBenign, kMalicious };

// Scores are Hamming distances: lower means more benign. A sample is accepted
// (predicted benign) when score <= threshold.
ConfusionCounts CountAtThreshold(std::span<const double> scores,
                                 std::span<const Label> labels, double threshold);

// Mann-Whitney estimate of P(malicious score > benign score), ties counted as
// one half. Perfect separation with benign below malicious gives 1.
double RocAuc(std::span<const double> scores, std::span<const Label> labels);

struct EerPoint {
  double eer = 0.0;
  double threshold = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
};

// Sweeps every distinct score (plus one below the minimum) as an acceptance
// threshold and returns the point minimizing |FPR - FNR|; ties go to the
// smaller threshold. EER is (FPR + FNR) / 2 at that point.
EerPoint EqualErrorPoint(std::span<const double> scores,
                         std::span<const Label> labels);
double Eer(std::span<const double> scores, std::span<const Label> labels);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_METRICS_H_
