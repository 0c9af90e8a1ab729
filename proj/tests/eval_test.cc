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

#include "speechverifier/eval.h"

#include <cmath>
#include <sstream>

#include "gtest/gtest.h"
#include "test_util.h"

namespace speechverifier {
namespace {

TEST(OpMatrixTest, DefaultRows) {
  const std::vector<OpCase> ops = DefaultOpMatrix();
  ASSERT_EQ(ops.size(), 18u);
  int benign = 0;
  for (const OpCase& c : ops) benign += c.benign;
  EXPECT_EQ(benign, 4);
  EXPECT_EQ(ops[4].name, "deletion");
  EXPECT_EQ(ops[4].level, "minor");
  EXPECT_EQ(ops[16].name, "reordering");
  EXPECT_EQ(ops[16].level, "severe");
  EXPECT_EQ(ops[17].name, "voice_conversion");
  EXPECT_EQ(ops[17].level, "-");
  const std::vector<OpCase> tts = TtsSweepMatrix({0.1, 0.25, 0.5, 0.75, 0.9});
  ASSERT_EQ(tts.size(), 5u);
  EXPECT_EQ(tts[1].level, "25%");
  EXPECT_EQ(*tts[1].malicious_op.ratio, 0.25);
}

class ProtocolTest : public ::testing::Test {
 protected:
  static std::vector<Utterance> Corpus() { return SyntheticCorpus(4, 2, 2.5, 3.0, 8); }
  ModelCheckpoint ckpt_ = NewCheckpoint(DeskModelConfig(), MfccConfig{}, 4);
};

TEST_F(ProtocolTest, ReportStructureAndReproducibility) {
  const auto corpus = Corpus();
  std::vector<OpCase> ops = DefaultOpMatrix();
  ops.erase(ops.begin() + 5, ops.begin() + 16);  // keep a few rows to bound runtime
  const VerifierConfig config;
  const EvalReport a = RunProtocol(corpus, ckpt_, config, ops, 1, 1);
  ASSERT_EQ(a.rows.size(), ops.size());
  int total = 0;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    EXPECT_EQ(a.rows[r].op, ops[r].name);
    EXPECT_GT(a.rows[r].n, 0);
    total += a.rows[r].n;
    if (a.rows[r].benign) {
      EXPECT_TRUE(a.rows[r].rates.tpr.has_value());
      EXPECT_FALSE(a.rows[r].rates.tnr.has_value());
    } else {
      EXPECT_FALSE(a.rows[r].rates.tpr.has_value());
      EXPECT_TRUE(a.rows[r].rates.tnr.has_value());
    }
  }
  EXPECT_EQ(a.overall.n, total);
  EXPECT_EQ(static_cast<int>(a.samples.size()), total);
  EXPECT_GE(a.quality.si_snr_min, 20.0);
  EXPECT_LE(a.quality.lsd_max, 0.8);

  const EvalReport b = RunProtocol(corpus, ckpt_, config, ops, 1, 2);
  EXPECT_EQ(ReportToJson(a).dump(), ReportToJson(b).dump());
  EXPECT_EQ(ReportToCsv(a), ReportToCsv(b));

  const EvalReport strict = Rescore(a, ops, 0);
  EXPECT_EQ(strict.theta, 0);
  EXPECT_LE(strict.overall.counts.tp, a.overall.counts.tp);
  EXPECT_EQ(Rescore(a, ops, a.theta).overall.counts.tp, a.overall.counts.tp);
}

TEST_F(ProtocolTest, CsvLayout) {
  const auto corpus = Corpus();
  const std::vector<OpCase> ops = {DefaultOpMatrix()[1], DefaultOpMatrix()[17]};
  const EvalReport r = RunProtocol(corpus, ckpt_, VerifierConfig{}, ops, 2);
  std::istringstream csv(ReportToCsv(r));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "op,level,n,tpr,fpr,tnr,fnr,auc,eer,mean_distance");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 3);
  const nlohmann::json j = ReportToJson(r);
  EXPECT_TRUE(j["rows"][0]["tnr"].is_null());
  EXPECT_EQ(j["overall"]["n"], 8);
}

TEST(StudyTest, PairwiseMeasures) {
  const Waveform w = testing::Speech(0, 2.0, 5);
  EXPECT_NEAR(MfccCosine(w, w), 1.0, 1e-12);
  EXPECT_EQ(DigestDistance(w, w), 0);
  int sum = 0;
  for (int i = 0; i < 20; ++i) {
    Waveform changed = w;
    changed.samples[static_cast<std::size_t>(i * 997)] += 0.01;
    const int d = DigestDistance(w, changed);
    EXPECT_GE(d, 96);
    EXPECT_LE(d, 160);
    sum += d;
  }
  EXPECT_NEAR(sum / 20.0, 128.0, 12.0);
}

TEST(StudyTest, Sha256DistancesAreUniformlyLarge) {
  const auto corpus = SyntheticCorpus(4, 2, 2.5, 3.0, 9);
  const DistributionReport r = Sha256Study(corpus, 3);
  EXPECT_LT(std::abs(r.Mean("benign") - r.Mean("malicious")), 16.0);
  EXPECT_GT(r.Mean("cross"), 96.0);
  std::istringstream csv(r.HistogramCsv(0, 256, 16));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "bin_left,bin_right,count,category");
  int rows = 0, counted = 0;
  while (std::getline(csv, line)) {
    ++rows;
    counted += std::stoi(line.substr(line.find(',', line.find(',') + 1) + 1));
  }
  EXPECT_EQ(rows, 48);
  EXPECT_EQ(counted, static_cast<int>(r.values.at("benign").size() + r.values.at("malicious").size() +
                                      r.values.at("cross").size()));
}

TEST(StudyTest, SimilarityCategories) {
  const auto corpus = SyntheticCorpus(4, 2, 2.5, 3.0, 10);
  const DistributionReport r = SimilarityStudy(corpus, 3);
  EXPECT_EQ(r.categories.size(), 5u);
  EXPECT_EQ(r.values.at("benign").size(), 16u);
  EXPECT_EQ(r.values.at("cross").size(), 8u);
  EXPECT_GT(r.Mean("benign"), r.Mean("severe"));
  EXPECT_EQ(r.Summary().size(), 5u);
}

TEST(ExportTest, EmbeddingRows) {
  const auto corpus = SyntheticCorpus(2, 2, 2.5, 3.0, 11);
  const ModelCheckpoint ckpt = NewCheckpoint(DeskModelConfig(), MfccConfig{}, 4);
  const std::vector<OpCase> ops = {DefaultOpMatrix()[1], DefaultOpMatrix()[13]};
  std::istringstream csv(ExportEmbeddings(corpus, ckpt, ops, 1));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("utterance,variant,label,e0,", 0), 0u);
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2 + 256);
  }
  EXPECT_EQ(rows, 6);
}

}  // namespace
}  // namespace speechverifier
