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

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "metric_oracles.h"
#include "speechverifier/error.h"
#include "test_util.h"

namespace speechverifier {
namespace {

constexpr Label kB = Label::kBenign;
constexpr Label kM = Label::kMalicious;

TEST(RatesTest, Formulas) {
  const Rates r = ComputeRates({.tp = 9, .fp = 0, .tn = 10, .fn = 1});
  EXPECT_DOUBLE_EQ(*r.tpr, 0.9);
  EXPECT_DOUBLE_EQ(*r.fnr, 0.1);
  EXPECT_DOUBLE_EQ(*r.fpr, 0.0);
  EXPECT_DOUBLE_EQ(*r.tnr, 1.0);
  const Rates empty = ComputeRates({.tp = 0, .fp = 3, .tn = 1, .fn = 0});
  EXPECT_FALSE(empty.tpr.has_value());
  EXPECT_FALSE(empty.fnr.has_value());
  EXPECT_DOUBLE_EQ(*empty.fpr, 0.75);
}

TEST(RocAucTest, Examples) {
  const std::vector<double> s = {1, 3, 2, 4};
  const std::vector<Label> l = {kB, kB, kM, kM};
  EXPECT_DOUBLE_EQ(RocAuc(s, l), 0.75);
  const std::vector<double> sep = {0, 1, 2, 50, 60};
  const std::vector<Label> sl = {kB, kB, kB, kM, kM};
  EXPECT_DOUBLE_EQ(RocAuc(sep, sl), 1.0);
  const std::vector<double> same(6, 3.0);
  const std::vector<Label> mixed = {kB, kM, kB, kM, kM, kB};
  EXPECT_DOUBLE_EQ(RocAuc(same, mixed), 0.5);
  const std::vector<Label> one = {kB, kB, kB, kB};
  EXPECT_THROW(RocAuc(s, one), Error);
}

TEST(EerTest, Examples) {
  const std::vector<double> sep = {0, 5, 10, 100, 120};
  const std::vector<Label> sl = {kB, kB, kB, kM, kM};
  const EerPoint p = EqualErrorPoint(sep, sl);
  EXPECT_DOUBLE_EQ(p.eer, 0.0);
  EXPECT_DOUBLE_EQ(p.threshold, 10.0);

  const std::vector<double> same(8, 1.0);
  const std::vector<Label> coin = {kB, kM, kM, kB, kB, kM, kB, kM};
  EXPECT_DOUBLE_EQ(Eer(same, coin), 0.5);

  oracle::Instance inst{{1, 2, 3, 2, 3, 4}, {kB, kB, kB, kM, kM, kM}};
  const oracle::Eer want = oracle::EqualError(inst);
  const EerPoint got = EqualErrorPoint(inst.scores, inst.labels);
  EXPECT_DOUBLE_EQ(got.eer, want.eer);
  EXPECT_DOUBLE_EQ(got.threshold, want.threshold);
  EXPECT_THROW(Eer(sep, std::vector<Label>(5, kM)), Error);
}

TEST(MetricsPropertyTest, MatchesBruteForce) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const oracle::Instance inst = oracle::RandomInstance(rng);
    EXPECT_NEAR(RocAuc(inst.scores, inst.labels), oracle::Auc(inst), 1e-12);
    const oracle::Eer want = oracle::EqualError(inst);
    const EerPoint got = EqualErrorPoint(inst.scores, inst.labels);
    EXPECT_NEAR(got.eer, want.eer, 1e-12);
    EXPECT_EQ(got.threshold, want.threshold);

    std::vector<Label> flipped = inst.labels;
    for (Label& l : flipped) l = l == kB ? kM : kB;
    EXPECT_NEAR(RocAuc(inst.scores, flipped), 1.0 - oracle::Auc(inst), 1e-12);
  }
}

TEST(SiSnrTest, Examples) {
  const Waveform r = testing::Speech(0, 1.0, 3);
  EXPECT_DOUBLE_EQ(SiSnr(r.samples, r.samples), kSiSnrCapDb);
  std::vector<double> twice = r.samples;
  for (double& x : twice) x *= 2.0;
  EXPECT_DOUBLE_EQ(SiSnr(r.samples, twice), kSiSnrCapDb);

  // Orthogonal noise of equal energy: Gram-Schmidt against the reference.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> n(r.size());
  for (double& x : n) x = g(rng);
  double nr = 0, rr = 0, nn = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    nr += n[i] * r.samples[i];
    rr += r.samples[i] * r.samples[i];
  }
  for (std::size_t i = 0; i < n.size(); ++i) n[i] -= nr / rr * r.samples[i];
  for (double x : n) nn += x * x;
  std::vector<double> t(r.size());
  for (std::size_t i = 0; i < n.size(); ++i) t[i] = r.samples[i] + n[i] * std::sqrt(rr / nn);
  EXPECT_NEAR(SiSnr(r.samples, t), 0.0, 0.01);

  std::vector<double> scaled = t;
  for (double& x : scaled) x *= 0.3;
  EXPECT_NEAR(SiSnr(r.samples, scaled), SiSnr(r.samples, t), 1e-9);
  EXPECT_THROW(SiSnr(std::vector<double>(10, 0.0), std::vector<double>(10, 1.0)), Error);
}

TEST(LsdTest, Examples) {
  const Waveform r = testing::Speech(1, 1.0, 5);
  EXPECT_DOUBLE_EQ(LogSpectralDistance(r.samples, r.samples), 0.0);
  std::vector<double> ten = r.samples;
  for (double& x : ten) x *= 10.0;
  EXPECT_NEAR(LogSpectralDistance(r.samples, ten), 1.0, 1e-9);

  const Waveform o = testing::Speech(2, 1.0, 6);
  std::vector<double> a = r.samples, b = o.samples;
  const double base = LogSpectralDistance(a, b);
  for (double& x : a) x *= 3.0;
  for (double& x : b) x *= 3.0;
  EXPECT_NEAR(LogSpectralDistance(a, b), base, 1e-9);
}

}  // namespace
}  // namespace speechverifier
