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

// Brute-force reference implementations shared by the unit tests and the
// acceptance runner.

#ifndef SPEECHVERIFIER_TESTS_METRIC_ORACLES_H_
#define SPEECHVERIFIER_TESTS_METRIC_ORACLES_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "speechverifier/metrics.h"

namespace speechverifier {
namespace oracle {

struct Instance {
  std::vector<double> scores;
  std::vector<Label> labels;
};

// Integer scores in [0, 8] so that ties are common; both classes present.
inline Instance RandomInstance(std::mt19937_64& rng) {
  Instance inst;
  const int n = 2 + static_cast<int>(rng() % 11);
  for (int i = 0; i < n; ++i) {
    inst.scores.push_back(static_cast<double>(rng() % 9));
    inst.labels.push_back((rng() & 1) ? Label::kBenign : Label::kMalicious);
  }
  inst.labels[0] = Label::kBenign;
  inst.labels[1] = Label::kMalicious;
  return inst;
}

// Pairwise count over every (benign, malicious) pair.
inline double Auc(const Instance& inst) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t b = 0; b < inst.scores.size(); ++b) {
    if (inst.labels[b] != Label::kBenign) continue;
    for (std::size_t m = 0; m < inst.scores.size(); ++m) {
      if (inst.labels[m] != Label::kMalicious) continue;
      pairs += 1.0;
      if (inst.scores[m] > inst.scores[b]) wins += 1.0;
      if (inst.scores[m] == inst.scores[b]) wins += 0.5;
    }
  }
  return wins / pairs;
}

struct Eer {
  double eer;
  double threshold;
};

// Walks every integer threshold from min - 1 to max and keeps the first one
// with the smallest |FPR - FNR|. Valid for integer scores.
inline Eer EqualError(const Instance& inst) {
  double lo = inst.scores[0];
  double hi = inst.scores[0];
  for (double s : inst.scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  Eer best{0.0, 0.0};
  double best_gap = 2.0;
  for (double t = lo - 1.0; t <= hi; t += 1.0) {
    double fp = 0, tn = 0, fn = 0, tp = 0;
    for (std::size_t i = 0; i < inst.scores.size(); ++i) {
      const bool accept = inst.scores[i] <= t;
      if (inst.labels[i] == Label::kBenign) {
        (accept ? tp : fn) += 1.0;
      } else {
        (accept ? fp : tn) += 1.0;
      }
    }
    const double fpr = fp / (fp + tn);
    const double fnr = fn / (fn + tp);
    if (std::abs(fpr - fnr) < best_gap) {
      best_gap = std::abs(fpr - fnr);
      best = {0.5 * (fpr + fnr), t};
    }
  }
  return best;
}

}  // namespace oracle
}  // namespace speechverifier

#endif  // SPEECHVERIFIER_TESTS_METRIC_ORACLES_H_
