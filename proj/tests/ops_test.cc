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
#include <cmath>
#include <map>
#include <memory>

#include "gtest/gtest.h"
#include "speechverifier/dsp.h"
#include "speechverifier/error.h"
#include "speechverifier/metrics.h"
#include "test_util.h"

namespace speechverifier {
namespace {

using testing::Concat;
using testing::Silence;
using testing::Speech;
using testing::Tone;

std::size_t TotalLength(const std::vector<Interval>& intervals) {
  std::size_t n = 0;
  for (const Interval& i : intervals) n += i.length();
  return n;
}

void ExpectWellFormed(const std::vector<Interval>& intervals, std::size_t bound) {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    EXPECT_LT(intervals[i].start, intervals[i].end);
    EXPECT_LE(intervals[i].end, bound);
    if (i > 0) EXPECT_LE(intervals[i - 1].end, intervals[i].start);
  }
}

bool Inside(const Interval& piece, const std::vector<Interval>& regions) {
  return std::any_of(regions.begin(), regions.end(), [&](const Interval& r) {
    return r.start <= piece.start && piece.end <= r.end;
  });
}

MaliciousOp Op(MaliciousKind kind, Severity level, std::uint64_t seed = 1) {
  MaliciousOp op;
  op.kind = kind;
  op.level = level;
  op.seed = seed;
  if (RequiresDonor(kind)) op.donor = std::make_shared<Waveform>(Speech(3, 6.0, 99));
  return op;
}

TEST(SeverityRatioTest, Levels) {
  EXPECT_EQ(SeverityRatio(Severity::kMinor), 0.1);
  EXPECT_EQ(SeverityRatio(Severity::kModerate), 0.3);
  EXPECT_EQ(SeverityRatio(Severity::kSevere), 0.5);
}

TEST(ParseTest, Names) {
  EXPECT_EQ(ParseMaliciousKind("Silencing"), MaliciousKind::kSilencing);
  EXPECT_EQ(ParseMaliciousKind("voice-conversion"), MaliciousKind::kVoiceConversion);
  EXPECT_EQ(ParseBenignKind("NoiseSuppression"), BenignKind::kNoiseSuppression);
  EXPECT_EQ(ParseSeverity("MODERATE"), Severity::kModerate);
  EXPECT_THROW(ParseMaliciousKind("teleport"), Error);
}

TEST(QuantileTest, MatchesLinearInterpolation) {
  EXPECT_DOUBLE_EQ(Quantile({3, 1, 2, 4}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(Quantile({3, 1, 2, 4}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(Quantile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(Quantile({10, 20}, 0.25), 12.5);
}

TEST(VoicedRegionsTest, ToneBetweenSilences) {
  const Waveform w = Concat({Silence(1.0), Tone(440, 1.0), Silence(1.0)});
  const auto regions = VoicedRegions(w, 25.0, 10.0, 0.5);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_NEAR(static_cast<double>(regions[0].start), 16000.0, 2 * 160.0 + 400.0);
  EXPECT_NEAR(static_cast<double>(regions[0].end), 32000.0, 2 * 160.0 + 400.0);
}

TEST(VoicedRegionsTest, AllZeroIsEmpty) {
  EXPECT_TRUE(VoicedRegions(Silence(1.0)).empty());
}

TEST(VoicedRegionsTest, ConstantAmplitudeQuantileZeroCoversEverything) {
  Waveform w = Silence(1.0);
  for (std::size_t i = 0; i < w.size(); ++i) w.samples[i] = (i % 2 == 0) ? 0.3 : -0.3;
  const auto regions = VoicedRegions(w, 25.0, 10.0, 0.0);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0], (Interval{0, w.size()}));
}

TEST(VoicedRegionsTest, ShortGapsMerge) {
  // Two tones separated by 20 ms of silence (fewer than 3 whole frames).
  const Waveform w = Concat({Silence(0.5), Tone(300, 0.5), Silence(0.02), Tone(300, 0.5),
                             Silence(0.5)});
  EXPECT_EQ(VoicedRegions(w, 25.0, 10.0, 0.3).size(), 1u);
  const Waveform apart = Concat({Silence(0.5), Tone(300, 0.5), Silence(0.2), Tone(300, 0.5),
                                 Silence(0.5)});
  EXPECT_EQ(VoicedRegions(apart, 25.0, 10.0, 0.3).size(), 2u);
}

TEST(VoicedRegionsTest, ShorterThanFrameThrows) {
  EXPECT_THROW(VoicedRegions(Silence(0.01)), Error);
}

TEST(ApplyBenignTest, TooShort) {
  BenignOp op;
  try {
    ApplyBenign(Tone(440, 1.5), op);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
}

TEST(ApplyBenignTest, ReencodingWithinOneLsb) {
  const Waveform w = Speech(0, 3.0, 1);
  const Waveform out = ApplyBenign(w, {.kind = BenignKind::kReencoding});
  ASSERT_EQ(out.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_LE(std::abs(out.samples[i] - w.samples[i]), std::ldexp(1.0, -15));
  }
}

TEST(ApplyBenignTest, ResamplingToneKeepsQuality) {
  const Waveform w = Tone(1000, 2.5);
  const Waveform out =
      ApplyBenign(w, {.kind = BenignKind::kResampling, .resample_rate = 8000});
  ASSERT_EQ(out.size(), w.size());
  // Ignore filter edge transients.
  const std::size_t edge = 800;
  const std::span<const double> a(w.samples.data() + edge, w.size() - 2 * edge);
  const std::span<const double> b(out.samples.data() + edge, w.size() - 2 * edge);
  EXPECT_GE(SiSnr(a, b), 30.0);
}

TEST(ApplyBenignTest, ResamplingRejectsUnlistedRate) {
  EXPECT_THROW(ApplyBenign(Tone(440, 2.5), {.kind = BenignKind::kResampling,
                                            .resample_rate = 12000}),
               Error);
}

TEST(ApplyBenignTest, ResamplingAllRatesKeepLength) {
  const Waveform w = Speech(1, 2.3, 4);
  for (int rate : {8000, 22050, 44100}) {
    EXPECT_EQ(ApplyBenign(w, {.kind = BenignKind::kResampling, .resample_rate = rate}).size(),
              w.size());
  }
}

TEST(ApplyBenignTest, NoiseSuppressionZeroesSilentFramesOnly) {
  // 101 frames of 20 ms, 10 of them quiet. With quantile 0.1 the threshold is
  // exactly the 11th-smallest frame RMS, a loud frame, so precisely the quiet
  // frames fall strictly below it. The loud envelope ramps so that no two loud
  // frames tie.
  Waveform w = Tone(300, 2.02);
  auto quiet = [](std::size_t i) {
    return (i >= 6400 && i < 8000) || (i >= 24000 && i < 25600);
  };
  for (std::size_t i = 0; i < w.size(); ++i) {
    w.samples[i] *= quiet(i) ? 0.002 : 0.4 + 0.5 * static_cast<double>(i) / w.size();
  }
  const Waveform out =
      ApplyBenign(w, {.kind = BenignKind::kNoiseSuppression, .mute_quantile = 0.1});
  ASSERT_EQ(out.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (quiet(i)) {
      ASSERT_EQ(out.samples[i], 0.0) << i;
    } else {
      ASSERT_EQ(out.samples[i], w.samples[i]) << i;
    }
  }
}

TEST(ApplyBenignTest, IdempotentOps) {
  const Waveform w = Speech(2, 3.0, 5);
  for (BenignKind kind : {BenignKind::kReencoding, BenignKind::kNoiseSuppression}) {
    BenignOp op{.kind = kind};
    const Waveform once = ApplyBenign(w, op);
    EXPECT_EQ(ApplyBenign(once, op), once) << BenignKindName(kind);
  }
}

TEST(ApplyBenignTest, CompressionRemovesHighBandAndKeepsLength) {
  const Waveform w = Concat({Tone(1000, 1.5), Silence(0.5)});
  Waveform mixed = w;
  const Waveform high = Tone(7500, 2.0, 16000, 0.2);
  for (std::size_t i = 0; i < w.size(); ++i) mixed.samples[i] += high.samples[i];
  const Waveform out = ApplyBenign(mixed, {.kind = BenignKind::kCompression});
  ASSERT_EQ(out.size(), mixed.size());
  const Spectrogram spec = Stft(out.samples, 1024, 256, false);
  double low = 0.0, top = 0.0;
  for (const auto& frame : spec.frames) {
    low += std::abs(frame[64]);
    top += std::abs(frame[480]);
  }
  EXPECT_LT(top, 1e-3 * low);
  // The kept band stays close to the input.
  EXPECT_GE(SiSnr(std::span<const double>(w.samples).subspan(2000, 16000),
                  std::span<const double>(out.samples).subspan(2000, 16000)),
            20.0);
}

TEST(ApplyBenignTest, ExternalCommandHook) {
  BenignOp op{.kind = BenignKind::kCompression};
  op.external_command = "cp {input} {output}";
  const Waveform w = Speech(0, 2.5, 8);
  const Waveform out = ApplyBenign(w, op);
  ASSERT_EQ(out.size(), w.size());
  for (std::size_t i = 0; i < w.size(); i += 97) EXPECT_NEAR(out.samples[i], w.samples[i], 1e-6);
  op.external_command = "false";
  EXPECT_THROW(ApplyBenign(w, op), Error);
}

TEST(ApplyMaliciousTest, DonorRequired) {
  MaliciousOp op{.kind = MaliciousKind::kSplicing};
  EXPECT_THROW(ApplyMalicious(Speech(0, 4.0, 1), op), Error);
}

TEST(ApplyMaliciousTest, SilencingMinorOnTenSeconds) {
  const Waveform w = Speech(0, 10.0, 11);
  const TamperRecord rec = ApplyMalicious(w, Op(MaliciousKind::kSilencing, Severity::kMinor));
  EXPECT_NEAR(TotalLength(rec.edited_intervals) / 16000.0, 1.0, 0.5);
  ExpectWellFormed(rec.edited_intervals, rec.output.size());
  for (const Interval& iv : rec.edited_intervals) {
    for (std::size_t i = iv.start; i < iv.end; ++i) ASSERT_EQ(rec.output.samples[i], 0.0);
  }
}

TEST(ApplyMaliciousTest, DeletionSevereHalvesDuration) {
  const Waveform w = Speech(1, 10.0, 12);
  const TamperRecord rec = ApplyMalicious(w, Op(MaliciousKind::kDeletion, Severity::kSevere));
  EXPECT_NEAR(rec.output.DurationSeconds(), 5.0, 0.5);
  EXPECT_EQ(rec.output.size() + TotalLength(rec.edited_intervals), w.size());
}

TEST(ApplyMaliciousTest, VoiceConversionShiftsToneFourSemitones) {
  const Waveform w = Tone(440, 3.0);
  const TamperRecord rec = ApplyMalicious(w, Op(MaliciousKind::kVoiceConversion, Severity::kMinor));
  double bin = 0.0;
  const double f = DominantFrequencyHz(rec.output.samples, 16000, &bin);
  EXPECT_NEAR(f, 440.0 * std::pow(2.0, 4.0 / 12.0), 2 * bin);
  EXPECT_EQ(rec.output.size(), w.size());
}

class EditPropertyTest : public ::testing::TestWithParam<MaliciousKind> {};

TEST_P(EditPropertyTest, RatioPlacementAndBookkeeping) {
  const MaliciousKind kind = GetParam();
  for (Severity level : {Severity::kMinor, Severity::kModerate, Severity::kSevere}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const Waveform w = Speech(static_cast<int>(seed), 5.0, 100 + seed);
      const MaliciousOp op = Op(kind, level, seed);
      const TamperRecord rec = ApplyMalicious(w, op);
      const double ratio = static_cast<double>(TotalLength(rec.edited_intervals)) / w.size();
      EXPECT_NEAR(ratio, SeverityRatio(level), 0.05);
      const std::vector<Interval> voiced = VoicedRegions(w);
      switch (kind) {
        case MaliciousKind::kDeletion:
          ExpectWellFormed(rec.edited_intervals, w.size());
          EXPECT_EQ(rec.output.size(), w.size() - TotalLength(rec.edited_intervals));
          for (const Interval& iv : rec.edited_intervals) EXPECT_TRUE(Inside(iv, voiced));
          break;
        case MaliciousKind::kSplicing:
          ExpectWellFormed(rec.edited_intervals, rec.output.size());
          EXPECT_EQ(rec.output.size(), w.size() + TotalLength(rec.edited_intervals));
          break;
        default: {
          ExpectWellFormed(rec.edited_intervals, rec.output.size());
          ASSERT_EQ(rec.output.size(), w.size());
          std::vector<bool> edited(w.size(), false);
          for (const Interval& iv : rec.edited_intervals) {
            EXPECT_TRUE(Inside(iv, voiced));
            for (std::size_t i = iv.start; i < iv.end; ++i) edited[i] = true;
          }
          for (std::size_t i = 0; i < w.size(); ++i) {
            if (!edited[i]) ASSERT_EQ(rec.output.samples[i], w.samples[i]);
          }
        }
      }
      // Determinism.
      EXPECT_EQ(ApplyMalicious(w, op).output, rec.output);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(ContentEdits, EditPropertyTest,
                         ::testing::Values(MaliciousKind::kDeletion, MaliciousKind::kSplicing,
                                           MaliciousKind::kSubstitution,
                                           MaliciousKind::kSilencing));

TEST(ApplyMaliciousTest, SplicingKeepsOriginalSamplesAroundInsertions) {
  const Waveform w = Speech(0, 4.0, 21);
  const TamperRecord rec = ApplyMalicious(w, Op(MaliciousKind::kSplicing, Severity::kModerate));
  std::vector<double> rest;
  std::size_t next = 0;
  for (const Interval& iv : rec.edited_intervals) {
    rest.insert(rest.end(), rec.output.samples.begin() + next, rec.output.samples.begin() + iv.start);
    next = iv.end;
  }
  rest.insert(rest.end(), rec.output.samples.begin() + next, rec.output.samples.end());
  EXPECT_EQ(rest, w.samples);
}

TEST(ApplyMaliciousTest, ReorderingPermutesVoicedAlignedChunks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Waveform w = Speech(static_cast<int>(seed % 4), 5.0, 300 + seed);
    MaliciousOp op = Op(MaliciousKind::kReordering, Severity::kMinor, seed);
    const TamperRecord rec = ApplyMalicious(w, op);
    EXPECT_EQ(rec.op.level, Severity::kSevere);
    ASSERT_EQ(rec.output.size(), w.size());
    EXPECT_NE(rec.output.samples, w.samples);
    ASSERT_FALSE(rec.edited_intervals.empty());
    ExpectWellFormed(rec.edited_intervals, w.size());
    // Every sample value survives: the output is a rearrangement.
    std::vector<double> a = w.samples, b = rec.output.samples;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    EXPECT_EQ(ApplyMalicious(w, op).output, rec.output);
  }
}

TEST(ApplyMaliciousTest, ReorderingNeedsPauses) {
  try {
    Waveform steady = Silence(3.0);
    for (std::size_t i = 0; i < steady.size(); ++i) steady.samples[i] = (i % 2 == 0) ? 0.3 : -0.3;
    ApplyMalicious(steady, Op(MaliciousKind::kReordering, Severity::kSevere));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleEdit);
  }
}

TEST(ApplyMaliciousTest, InfeasibleWhenNotEnoughVoicedAudio) {
  const Waveform w = Concat({Silence(2.0), Tone(300, 0.3), Silence(2.0)});
  try {
    ApplyMalicious(w, Op(MaliciousKind::kSilencing, Severity::kSevere));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleEdit);
  }
}

TEST(ApplyMaliciousTest, TtsProxyReplacesRequestedFraction) {
  const Waveform w = Speech(0, 5.0, 31);
  for (double ratio : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    MaliciousOp op = Op(MaliciousKind::kTtsProxy, Severity::kSevere, 3);
    op.ratio = ratio;
    const TamperRecord rec = ApplyMalicious(w, op);
    ASSERT_EQ(rec.output.size(), w.size());
    EXPECT_NEAR(static_cast<double>(TotalLength(rec.edited_intervals)) / w.size(), ratio, 1e-3);
  }
}

}  // namespace
}  // namespace speechverifier
