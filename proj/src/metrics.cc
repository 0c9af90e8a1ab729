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

#include "speechverifier/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "speechverifier/dsp.h"
#include "speechverifier/error.h"

namespace speechverifier {
namespace {

void CheckBothClasses(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  const bool has_benign = std::find(labels.begin(), labels.end(), Label::kBenign) != labels.end();
  const bool has_malicious =
      std::find(labels.begin(), labels.end(), Label::kMalicious) != labels.end();
  if (!has_benign || !has_malicious) {
    throw Error(ErrorCode::kInvalidArgument, "both benign and malicious labels are required");
  }
}

std::optional<double> Ratio(std::int64_t num, std::int64_t den) {
  if (den <= 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double SiSnr(std::span<const double> reference, std::span<const double> test) {
  if (reference.size() != test.size()) {
    throw Error(ErrorCode::kInvalidArgument, "SI-SNR inputs differ in length");
  }
  double rr = 0.0;
  double tr = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    rr += reference[i] * reference[i];
    tr += test[i] * reference[i];
  }
  if (rr <= 0.0) throw Error(ErrorCode::kInvalidArgument, "silent reference");
  const double scale = tr / rr;
  double target = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double s = scale * reference[i];
    const double e = test[i] - s;
    target += s * s;
    noise += e * e;
  }
  if (noise <= target * 1e-10) return kSiSnrCapDb;
  return std::min(kSiSnrCapDb, 10.0 * std::log10(target / noise));
}

double LogSpectralDistance(std::span<const double> reference, std::span<const double> test) {
  if (reference.size() != test.size()) {
    throw Error(ErrorCode::kInvalidArgument, "LSD inputs differ in length");
  }
  constexpr std::size_t kFft = 2048;
  constexpr std::size_t kHop = 512;
  constexpr double kFloor = 1e-8;
  std::vector<double> ref(reference.begin(), reference.end());
  std::vector<double> tst(test.begin(), test.end());
  if (ref.size() < kFft) {
    ref.resize(kFft, 0.0);
    tst.resize(kFft, 0.0);
  }
  const Spectrogram a = Stft(ref, kFft, kHop, false);
  const Spectrogram b = Stft(tst, kFft, kHop, false);
  double total = 0.0;
  for (std::size_t f = 0; f < a.frames.size(); ++f) {
    double sum = 0.0;
    const std::size_t bins = a.frames[f].size();
    for (std::size_t k = 0; k < bins; ++k) {
      const double la = std::log10(std::max(std::abs(a.frames[f][k]), kFloor));
      const double lb = std::log10(std::max(std::abs(b.frames[f][k]), kFloor));
      sum += (la - lb) * (la - lb);
    }
    total += std::sqrt(sum / static_cast<double>(bins));
  }
  return a.frames.empty() ? 0.0 : total / static_cast<double>(a.frames.size());
}

Rates ComputeRates(const ConfusionCounts& c) {
  return {Ratio(c.tp, c.tp + c.fn), Ratio(c.fp, c.fp + c.tn), Ratio(c.tn, c.tn + c.fp),
          Ratio(c.fn, c.fn + c.tp)};
}

ConfusionCounts CountAtThreshold(std::span<const double> scores, std::span<const Label> labels,
                                 double threshold) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool accepted = scores[i] <= threshold;
    if (labels[i] == Label::kBenign) {
      accepted ? ++c.tp : ++c.fn;
    } else {
      accepted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double RocAuc(std::span<const double> scores, std::span<const Label> labels) {
  CheckBothClasses(scores, labels);
  // Rank-sum form of the Mann-Whitney statistic with midranks for ties.
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double malicious_rank_sum = 0.0;
  std::size_t n_mal = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == Label::kMalicious) {
        malicious_rank_sum += midrank;
        ++n_mal;
      }
    }
    i = j;
  }
  const double n_ben = static_cast<double>(scores.size() - n_mal);
  const double m = static_cast<double>(n_mal);
  const double u = malicious_rank_sum - m * (m + 1.0) / 2.0;
  return u / (m * n_ben);
}

EerPoint EqualErrorPoint(std::span<const double> scores, std::span<const Label> labels) {
  CheckBothClasses(scores, labels);
  std::vector<double> thresholds(scores.begin(), scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.insert(thresholds.begin(), thresholds.front() - 1.0);

  EerPoint best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double t : thresholds) {
    const Rates r = ComputeRates(CountAtThreshold(scores, labels, t));
    const double gap = std::abs(*r.fpr - *r.fnr);
    if (gap < best_gap) {
      best_gap = gap;
      best = {0.5 * (*r.fpr + *r.fnr), t, *r.fpr, *r.fnr};
    }
  }
  return best;
}

double Eer(std::span<const double> scores, std::span<const Label> labels) {
  return EqualErrorPoint(scores, labels).eer;
}

}  // namespace speechverifier
