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

#ifndef SPEECHVERIFIER_EVAL_H_
#define SPEECHVERIFIER_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "speechverifier/checkpoint.h"
#include "speechverifier/corpus.h"
#include "speechverifier/metrics.h"
#include "speechverifier/ops.h"
#include "speechverifier/verify.h"

namespace speechverifier {

// One row of the operation matrix.
struct OpCase {
  bool benign = true;
  BenignOp benign_op;
  MaliciousOp malicious_op;  // seed is re-derived per utterance
  std::string name;
  std::string level;  // "-" when the op has no levels

  static OpCase Benign(const BenignOp& op);
  static OpCase Malicious(MaliciousKind kind, Severity level);
};

// 4 benign ops, then Deletion, Splicing, Substitution and Silencing at every
// level, Reordering (severe only) and VoiceConversion: 18 rows.
std::vector<OpCase> DefaultOpMatrix();
// TtsProxy substitution at each ratio (level is e.g. "25%").
std::vector<OpCase> TtsSweepMatrix(const std::vector<double>& ratios);

struct SampleScore {
  std::string utterance;
  std::size_t row = 0;
  int distance = 0;
  Label label = Label::kBenign;
  // True when the variant was too short to verify; it is scored as d.
  bool unverifiable = false;
};

struct OpRow {
  std::string op;
  std::string level;
  bool benign = true;
  int n = 0;
  ConfusionCounts counts;
  Rates rates;
  // Against the pooled opposite class; absent when that class is empty.
  std::optional<double> auc;
  std::optional<double> eer;
  double mean_distance = 0.0;
  int unverifiable = 0;
};

struct QualityStats {
  double si_snr_mean = 0.0;
  double si_snr_min = 0.0;
  double lsd_mean = 0.0;
  double lsd_max = 0.0;
};

struct EvalReport {
  int theta = 0;
  std::vector<OpRow> rows;
  OpRow overall;
  QualityStats quality;
  double mean_benign_distance = 0.0;
  double mean_malicious_distance = 0.0;
  std::string checkpoint_id;
  std::string config_hash;
  std::vector<SampleScore> samples;
};

// Signs every utterance, applies every op case, verifies, and aggregates at
// config.theta. Donors for splicing and substitution are other utterances of
// the same speaker when labels allow; TtsProxy donors are another speaker's.
// Work is split over jobs threads; results do not depend on jobs.
EvalReport RunProtocol(const std::vector<Utterance>& corpus, const ModelCheckpoint& checkpoint,
                       const VerifierConfig& config, const std::vector<OpCase>& ops,
                       std::uint64_t seed, int jobs = 1);

// Re-aggregates the same samples at another threshold.
EvalReport Rescore(const EvalReport& report, const std::vector<OpCase>& ops, int theta);

nlohmann::json ReportToJson(const EvalReport& report);
// One line per row plus "overall": op,level,n,tpr,fpr,tnr,fnr,auc,eer,mean_distance.
std::string ReportToCsv(const EvalReport& report);

// Distribution of a pairwise score per category.
struct DistributionReport {
  std::vector<std::string> categories;  // in presentation order
  std::map<std::string, std::vector<double>> values;

  double Mean(const std::string& category) const;
  // bin_left,bin_right,count,category
  std::string HistogramCsv(double lo, double hi, int bins) const;
  nlohmann::json Summary() const;
};

// Cosine similarity of mean-pooled MFCCs computed over a 0-4 kHz mel band
// without cepstral mean normalization.
double MfccCosine(const Waveform& a, const Waveform& b);

// Bit-level Hamming distance between the SHA-256 digests of the two signals
// serialized as 32-bit float WAV files.
int DigestDistance(const Waveform& a, const Waveform& b);

// Cosine similarity of mean-pooled MFCCs (without mean normalization) between
// each original and its benign variants, its content edits per severity, and
// every utterance of another speaker. Categories: benign, minor, moderate,
// severe, cross.
DistributionReport SimilarityStudy(const std::vector<Utterance>& corpus, std::uint64_t seed);

// Bit-level Hamming distance between SHA-256 digests of the float WAV bytes
// of each original and its variants, and of each pair of utterances from
// different speakers. Categories: benign, malicious, cross.
DistributionReport Sha256Study(const std::vector<Utterance>& corpus, std::uint64_t seed);

// utterance,variant,label,e0..e{d-1}: normalized embeddings of each original
// and one variant per op case.
std::string ExportEmbeddings(const std::vector<Utterance>& corpus,
                             const ModelCheckpoint& checkpoint, const std::vector<OpCase>& ops,
                             std::uint64_t seed);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_EVAL_H_
