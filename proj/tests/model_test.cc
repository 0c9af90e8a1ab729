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

#include "speechverifier/model.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gtest/gtest.h"
#include "speechverifier/checkpoint.h"
#include "speechverifier/error.h"
#include "speechverifier/fingerprint.h"
#include "speechverifier/gradcheck.h"
#include "test_util.h"

namespace speechverifier {
namespace {

using testing::Speech;

Eigen::MatrixXd Random(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

ModelConfig Tiny(int input_dim = 3, int hidden = 2, int layers = 2) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.lstm_hidden = hidden;
  c.lstm_layers = layers;
  c.attention_dim = 3;
  c.proj_hidden = 4;
  c.fingerprint_bits = 8;
  c.pool_windows = {2, 3, 5};
  c.pool_stride = 1;
  return c;
}

// Perturbs every tensor so biases and attention vectors are non-trivial.
ModelParams RandomParams(const ModelConfig& c, std::uint64_t seed, double scale = 0.5) {
  ModelParams p = InitParams(c, seed);
  std::uint64_t k = seed;
  p.ForEach([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) {
    t = Random(t.rows(), t.cols(), ++k, scale);
  });
  return p;
}

// Scalar straight-line LSTM: x is T frames of D values.
std::vector<std::vector<double>> ScalarLstm(const LstmParams& p,
                                            const std::vector<std::vector<double>>& x,
                                            bool reverse) {
  const int h = static_cast<int>(p.wh.cols());
  const int d = static_cast<int>(p.wx.cols());
  const int t_len = static_cast<int>(x.size());
  std::vector<std::vector<double>> out(t_len, std::vector<double>(h));
  std::vector<double> hp(h, 0.0), cp(h, 0.0);
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (int s = 0; s < t_len; ++s) {
    const int t = reverse ? t_len - 1 - s : s;
    std::vector<double> z(4 * h);
    for (int r = 0; r < 4 * h; ++r) {
      double acc = p.b(r);
      for (int j = 0; j < d; ++j) acc += p.wx(r, j) * x[t][j];
      for (int j = 0; j < h; ++j) acc += p.wh(r, j) * hp[j];
      z[r] = acc;
    }
    std::vector<double> hn(h), cn(h);
    for (int k = 0; k < h; ++k) {
      const double i = sig(z[k]), f = sig(z[h + k]), g = std::tanh(z[2 * h + k]),
                   o = sig(z[3 * h + k]);
      cn[k] = f * cp[k] + i * g;
      hn[k] = o * std::tanh(cn[k]);
    }
    out[t] = hn;
    hp = hn;
    cp = cn;
  }
  return out;
}

TEST(BiLstmTest, MatchesScalarReference) {
  const ModelConfig c = Tiny(3, 2, 2);
  const ModelParams p = RandomParams(c, 4);
  const Eigen::MatrixXd x = Random(3, 3, 9);  // T=3, D=3
  const Eigen::MatrixXd out = BiLstmForward(c, p, x, {}, nullptr);
  std::vector<std::vector<double>> seq(3, std::vector<double>(3));
  for (int t = 0; t < 3; ++t) {
    for (int j = 0; j < 3; ++j) seq[t][j] = x(t, j);
  }
  for (int l = 0; l < 2; ++l) {
    const auto f = ScalarLstm(p.lstm[l][0], seq, false);
    const auto b = ScalarLstm(p.lstm[l][1], seq, true);
    for (int t = 0; t < 3; ++t) {
      seq[t] = f[t];
      seq[t].insert(seq[t].end(), b[t].begin(), b[t].end());
    }
  }
  for (int t = 0; t < 3; ++t) {
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(out(k, t), seq[t][k], 1e-10);
  }
}

TEST(BiLstmTest, ZeroWeightsGiveZeroStates) {
  const ModelConfig c = Tiny();
  ModelParams p = InitParams(c, 1);
  p.SetZero();
  const Eigen::MatrixXd out = BiLstmForward(c, p, Random(7, 3, 2), {}, nullptr);
  EXPECT_EQ(out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BiLstmTest, SingleFrameSeesSameInputBothWays) {
  const ModelConfig c = Tiny(3, 2, 1);
  ModelParams p = RandomParams(c, 5);
  p.lstm[0][1] = p.lstm[0][0];
  const Eigen::MatrixXd out = BiLstmForward(c, p, Random(1, 3, 3), {}, nullptr);
  EXPECT_EQ(out.rows(), 4);
  EXPECT_NEAR((out.topRows(2) - out.bottomRows(2)).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(BiLstmTest, ErrorsOnEmptyAndWrongDimension) {
  const ModelConfig c = Tiny();
  const ModelParams p = InitParams(c, 1);
  try {
    BiLstmForward(c, p, Eigen::MatrixXd(0, 3), {}, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
  EXPECT_THROW(BiLstmForward(c, p, Eigen::MatrixXd::Zero(4, 5), {}, nullptr), Error);
}

TEST(BiLstmTest, FrameOrderMatters) {
  const ModelConfig c = DeskModelConfig();
  const ModelParams p = InitParams(c, 3);
  const Eigen::MatrixXd x = Random(30, 39, 4);
  Eigen::MatrixXd shuffled = x;
  shuffled.row(3).swap(shuffled.row(17));
  const Eigen::MatrixXd a = BiLstmForward(c, p, x, {}, nullptr);
  const Eigen::MatrixXd b = BiLstmForward(c, p, shuffled, {}, nullptr);
  Eigen::MatrixXd b_aligned = b;
  b_aligned.col(3).swap(b_aligned.col(17));
  EXPECT_GT((a - b_aligned).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BiLstmTest, DropoutOnlyInTrainMode) {
  const ModelConfig c = Tiny();
  const ModelParams p = RandomParams(c, 2);
  const Eigen::MatrixXd x = Random(6, 3, 1);
  const Eigen::MatrixXd eval1 = BiLstmForward(c, p, x, {false, 1}, nullptr);
  const Eigen::MatrixXd eval2 = BiLstmForward(c, p, x, {false, 2}, nullptr);
  EXPECT_EQ(eval1, eval2);
  const Eigen::MatrixXd train1 = BiLstmForward(c, p, x, {true, 1}, nullptr);
  EXPECT_EQ(train1, BiLstmForward(c, p, x, {true, 1}, nullptr));
  EXPECT_NE(train1, BiLstmForward(c, p, x, {true, 2}, nullptr));
}

TEST(MultiscalePoolTest, CountsAtHundredFrames) {
  const Eigen::MatrixXd pooled = MultiscalePool(Random(4, 100, 1), {20, 50, 100}, 10);
  EXPECT_EQ(pooled.cols(), 16);
  EXPECT_EQ(PoolCount(100, 20, 10), 9);
  EXPECT_EQ(PoolCount(100, 50, 10), 6);
  EXPECT_EQ(PoolCount(100, 100, 10), 1);
}

TEST(MultiscalePoolTest, ShortSequencesArePaddedByEdgeReplication) {
  EXPECT_EQ(PoolCount(20, 20, 10), 1);
  EXPECT_EQ(PoolCount(20, 50, 10), 0);
  const Eigen::MatrixXd h = Random(3, 20, 2);
  const Eigen::MatrixXd pooled = MultiscalePool(h, {20, 50, 100}, 10);
  ASSERT_EQ(pooled.cols(), 16);
  Eigen::MatrixXd padded(3, 100);
  for (int t = 0; t < 100; ++t) padded.col(t) = h.col(std::min(t, 19));
  EXPECT_LT((pooled - MultiscalePool(padded, {20, 50, 100}, 10)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MultiscalePoolTest, ConstantInputPoolsToItself) {
  const Eigen::VectorXd v = Random(5, 1, 3).col(0);
  const Eigen::MatrixXd h = v.replicate(1, 137);
  const Eigen::MatrixXd pooled = MultiscalePool(h, {20, 50, 100}, 10);
  for (Eigen::Index k = 0; k < pooled.cols(); ++k) {
    EXPECT_LT((pooled.col(k) - v).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MultiscalePoolTest, MatchesBruteForceForManyLengths) {
  for (int t = 100; t <= 400; t += 7) {
    const Eigen::MatrixXd h = Random(2, t, static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd pooled = MultiscalePool(h, {20, 50, 100}, 10);
    int expected = 0;
    for (int w : {20, 50, 100}) expected += (t - w) / 10 + 1;
    ASSERT_EQ(pooled.cols(), expected) << t;
    int k = 0;
    for (int w : {20, 50, 100}) {
      for (int start = 0; start + w <= t; start += 10, ++k) {
        const Eigen::VectorXd mean = h.middleCols(start, w).rowwise().mean();
        ASSERT_LT((pooled.col(k) - mean).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(AttentivePoolTest, EqualScoresGiveMean) {
  const ModelConfig c = Tiny();
  ModelParams p = RandomParams(c, 1);
  p.att_v.setZero();
  const Eigen::MatrixXd h = Random(4, 5, 2);
  AttentionCache cache;
  const Eigen::VectorXd v = AttentivePool(p, h, &cache);
  EXPECT_LT((v - h.rowwise().mean()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((cache.weights.array() - 0.2).abs().maxCoeff(), 1e-15);
}

TEST(AttentivePoolTest, SoftmaxArithmetic) {
  ModelParams p;
  p.att_w = Eigen::MatrixXd::Zero(1, 2);
  p.att_w(0, 0) = 1.0;
  p.att_b = Eigen::VectorXd::Zero(1);
  p.att_v = Eigen::VectorXd::Ones(1);
  Eigen::MatrixXd h(2, 2);
  h << std::atanh(std::log(2.0)), 0.0, 5.0, -1.0;
  AttentionCache cache;
  const Eigen::VectorXd v = AttentivePool(p, h, &cache);
  EXPECT_NEAR(cache.weights(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(cache.weights(1), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(v(1), 2.0 / 3.0 * 5.0 - 1.0 / 3.0, 1e-12);
}

TEST(AttentivePoolTest, SingleVectorPassesThrough) {
  const ModelConfig c = Tiny();
  const ModelParams p = RandomParams(c, 3);
  const Eigen::MatrixXd h = Random(4, 1, 3);
  EXPECT_LT((AttentivePool(p, h, nullptr) - h.col(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectionTest, ZeroWeightsGiveZeros) {
  const ModelConfig c = Tiny();
  ModelParams p = InitParams(c, 1);
  p.SetZero();
  EXPECT_EQ(ProjectAndSquash(p, Random(4, 1, 1).col(0), 0.0, {}, nullptr).cwiseAbs().maxCoeff(),
            0.0);
}

TEST(ProjectionTest, MatchesMatrixOracleAndStaysBounded) {
  const ModelConfig c = DeskModelConfig();
  const ModelParams p = RandomParams(c, 6, 0.3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Eigen::VectorXd x = Random(c.sequence_dim(), 1, 50 + s, 3.0).col(0);
    const Eigen::VectorXd out = ProjectAndSquash(p, x, 0.0, {}, nullptr);
    Eigen::VectorXd h(c.proj_hidden);
    for (int i = 0; i < c.proj_hidden; ++i) {
      double acc = p.proj_b1(i);
      for (int j = 0; j < c.sequence_dim(); ++j) acc += p.proj_w1(i, j) * x(j);
      h(i) = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> z(c.fingerprint_bits);
    double norm2 = 0.0;
    for (int i = 0; i < c.fingerprint_bits; ++i) {
      double acc = p.proj_b2(i);
      for (int j = 0; j < c.proj_hidden; ++j) acc += p.proj_w2(i, j) * h(j);
      z[i] = acc;
      norm2 += acc * acc;
    }
    for (int i = 0; i < c.fingerprint_bits; ++i) {
      EXPECT_NEAR(out(i), std::tanh(z[i] / std::sqrt(norm2)), 1e-10);
      EXPECT_LT(std::abs(out(i)), 1.0);
    }
  }
}

TEST(BinarizeTest, TieBreakAndOddness) {
  Eigen::VectorXd v(3);
  v << 0.3, -0.2, 0.0;
  EXPECT_EQ(Binarize(v).bits, (std::vector<std::int8_t>{1, -1, 1}));
  const Eigen::VectorXd r = Random(64, 1, 8).col(0);
  const BinaryFingerprint b = Binarize(r);
  const BinaryFingerprint nb = Binarize(-r);
  Eigen::VectorXd as_reals(64);
  for (int i = 0; i < 64; ++i) {
    EXPECT_EQ(nb.bits[i], -b.bits[i]);
    EXPECT_EQ(b.bits[i], r(i) >= 0.0 ? 1 : -1);
    as_reals(i) = b.bits[i];
  }
  EXPECT_EQ(Binarize(as_reals), b);
}

TEST(BinaryFingerprintTest, PackingIsMsbFirst) {
  BinaryFingerprint f;
  f.bits.assign(16, -1);
  f.bits[0] = 1;
  f.bits[15] = 1;
  EXPECT_EQ(f.Pack(), (std::vector<std::uint8_t>{0x80, 0x01}));
  EXPECT_EQ(f.ToHex(), "8001");
  EXPECT_EQ(BinaryFingerprint::FromHex("8001", 16), f);
  const BinaryFingerprint g = Binarize(Random(256, 1, 2).col(0));
  EXPECT_EQ(g.ToHex().size(), 64u);
  EXPECT_EQ(BinaryFingerprint::FromHex(g.ToHex(), 256), g);
  EXPECT_THROW(BinaryFingerprint::FromHex("80", 16), Error);
}

TEST(GradientCheckTest, AttentivePool) {
  const ModelConfig c = [] {
    ModelConfig m = Tiny(3, 2);
    m.attention_dim = 5;
    return m;
  }();
  const ModelParams p = RandomParams(c, 11);
  EXPECT_LT(GradientCheck("attentive_pool", Random(4, 3, 12), c, p, 1e-5), 1e-5);
}

TEST(GradientCheckTest, SingleLayerLstm) {
  const ModelConfig c = Tiny(2, 3, 1);
  const ModelParams p = RandomParams(c, 13);
  EXPECT_LT(GradientCheck("lstm_direction", Random(2, 3, 14), c, p, 1e-5), 1e-4);
  EXPECT_LT(GradientCheck("bilstm", Random(3, 2, 15), c, p, 1e-5), 1e-4);
}

TEST(GradientCheckTest, TwoLayerBiLstm) {
  const ModelConfig c = Tiny(3, 3, 2);
  const ModelParams p = RandomParams(c, 16);
  EXPECT_LT(GradientCheck("bilstm", Random(6, 3, 17), c, p, 1e-5), 1e-4);
}

TEST(GradientCheckTest, MultiscalePool) {
  const ModelConfig c = Tiny();
  EXPECT_LT(GradientCheck("multiscale_pool", Random(3, 4, 18), c, InitParams(c, 1), 1e-5), 1e-5);
  EXPECT_LT(GradientCheck("multiscale_pool", Random(3, 9, 19), c, InitParams(c, 1), 1e-5), 1e-5);
}

TEST(GradientCheckTest, Projection) {
  const ModelConfig c = Tiny();
  const ModelParams p = RandomParams(c, 20);
  EXPECT_LT(GradientCheck("projection", Random(4, 1, 21), c, p, 1e-5), 1e-6);
}

TEST(GradientCheckTest, WholeNetwork) {
  const ModelConfig c = Tiny(3, 2, 2);
  const ModelParams p = RandomParams(c, 22);
  EXPECT_LT(GradientCheck("network", Random(7, 3, 23), c, p, 1e-5), 1e-4);
}

class CheckpointTest : public ::testing::Test {
 protected:
  std::filesystem::path path_ = std::filesystem::temp_directory_path() / "sv_model_test.svck";
  void TearDown() override { std::filesystem::remove(path_); }
};

TEST_F(CheckpointTest, RoundTrip) {
  ModelCheckpoint c = NewCheckpoint(DeskModelConfig(), MfccConfig{}, 5);
  c.step = 17;
  c.epoch = 2;
  c.extra["opt.velocity.att.b"] = Eigen::MatrixXd::Constant(3, 1, 0.25);
  SaveCheckpoint(c, path_);
  const ModelCheckpoint d = LoadCheckpoint(path_);
  EXPECT_EQ(d.step, 17);
  EXPECT_EQ(d.epoch, 2);
  EXPECT_EQ(d.extra.at("opt.velocity.att.b"), c.extra.at("opt.velocity.att.b"));
  EXPECT_EQ(SerializeCheckpoint(d), SerializeCheckpoint(c));
  EXPECT_EQ(CheckpointId(d), CheckpointId(c));
  EXPECT_EQ(d.PipelineHash(), c.PipelineHash());
}

TEST_F(CheckpointTest, RejectsCorruptFiles) {
  const ModelCheckpoint c = NewCheckpoint(DeskModelConfig(), MfccConfig{}, 5);
  std::vector<std::uint8_t> bytes = SerializeCheckpoint(c);
  std::vector<std::uint8_t> bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(ParseCheckpoint(bad_magic), Error);
  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 9);
  try {
    ParseCheckpoint(truncated);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(FingerprintTest, DeterministicAndTooShort) {
  const ModelCheckpoint c = NewCheckpoint(DeskModelConfig(), MfccConfig{}, 9);
  const Waveform w = Speech(0, 2.5, 1);
  const BinaryFingerprint a = Fingerprint(w, c);
  EXPECT_EQ(a.size(), 256u);
  EXPECT_EQ(Fingerprint(w, c), a);
  try {
    Fingerprint(Speech(0, 1.5, 1), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
}

TEST(FingerprintTest, UntrainedModelSeparatesUnrelatedAudio) {
  const ModelCheckpoint c = NewCheckpoint(DeskModelConfig(), MfccConfig{}, 10);
  for (int i = 0; i < 20; ++i) {
    const Waveform a = Speech(i % 4, 2.2, 1000 + i);
    const Waveform b = Speech((i + 1) % 4, 2.2, 2000 + i);
    EXPECT_GT(Hamming(Fingerprint(a, c), Fingerprint(b, c)), 0) << i;
  }
}

TEST(FingerprintTest, ConfigMismatchBetweenFeaturesAndModel) {
  MfccConfig f;
  f.deltas = false;
  EXPECT_THROW(NewCheckpoint(DeskModelConfig(), f, 1), Error);
}

}  // namespace
}  // namespace speechverifier
