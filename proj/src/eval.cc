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

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "speechverifier/error.h"
#include "speechverifier/features.h"
#include "speechverifier/hash.h"
#include "speechverifier/seed.h"

namespace speechverifier {
namespace {

constexpr int kRedraws = 8;

// Runs fn(i) for i in [0, n) on up to jobs threads.
template <typename Fn>
void ParallelFor(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::shared_ptr<const Waveform> Borrow(const Waveform& w) {
  return std::shared_ptr<const Waveform>(std::shared_ptr<const Waveform>(), &w);
}

// Another utterance, preferring the same speaker (or a different one when
// cross_speaker is set). Returns -1 for a single-utterance corpus.
int PickDonor(const std::vector<Utterance>& corpus, std::size_t i, bool cross_speaker,
              std::uint64_t seed) {
  std::vector<int> preferred, others;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    if (k == i) continue;
    others.push_back(static_cast<int>(k));
    const bool same = corpus[i].speaker_id && corpus[k].speaker_id == corpus[i].speaker_id;
    const bool labeled = corpus[i].speaker_id && corpus[k].speaker_id;
    if (cross_speaker ? (labeled && !same) : same) preferred.push_back(static_cast<int>(k));
  }
  const std::vector<int>& pool = preferred.empty() ? others : preferred;
  if (pool.empty()) return -1;
  return pool[Mix(seed, 0xD0) % pool.size()];
}

// Every utterance of another speaker, or every other utterance when speaker
// labels are missing.
std::vector<std::size_t> CrossPartners(const std::vector<Utterance>& corpus, std::size_t i) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    if (k == i) continue;
    const bool labeled = corpus[i].speaker_id && corpus[k].speaker_id;
    if (labeled && corpus[k].speaker_id == corpus[i].speaker_id) continue;
    out.push_back(k);
  }
  return out;
}

// Applies a malicious op, redrawing the seed when the edit is infeasible.
std::optional<Waveform> ApplyCase(const std::vector<Utterance>& corpus, std::size_t i,
                                  const Waveform& base, const OpCase& c, std::uint64_t seed) {
  if (c.benign) return ApplyBenign(base, c.benign_op);
  MaliciousOp op = c.malicious_op;
  op.seed = seed;
  if (RequiresDonor(op.kind)) {
    const int d = PickDonor(corpus, i, op.kind == MaliciousKind::kTtsProxy, seed);
    if (d < 0) return std::nullopt;
    op.donor = Borrow(corpus[static_cast<std::size_t>(d)].audio);
  }
  for (int attempt = 0; attempt < kRedraws; ++attempt) {
    try {
      return ApplyMalicious(base, op).output;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasibleEdit) throw;
      op.seed = Mix(op.seed, attempt);
    }
  }
  return std::nullopt;
}

std::string FormatLevel(double ratio) {
  std::ostringstream s;
  s << std::round(ratio * 100.0) << "%";
  return s.str();
}

OpRow Aggregate(const std::vector<const SampleScore*>& mine,
                const std::vector<const SampleScore*>& opposite, int theta) {
  OpRow row;
  row.n = static_cast<int>(mine.size());
  std::vector<double> scores;
  std::vector<Label> labels;
  double sum = 0.0;
  for (const SampleScore* s : mine) {
    scores.push_back(s->distance);
    labels.push_back(s->label);
    sum += s->distance;
    if (s->unverifiable) ++row.unverifiable;
  }
  row.mean_distance = mine.empty() ? 0.0 : sum / static_cast<double>(mine.size());
  row.counts = CountAtThreshold(scores, labels, theta);
  row.rates = ComputeRates(row.counts);
  for (const SampleScore* s : opposite) {
    scores.push_back(s->distance);
    labels.push_back(s->label);
  }
  const bool has_benign = std::count(labels.begin(), labels.end(), Label::kBenign) > 0;
  const bool has_malicious = std::count(labels.begin(), labels.end(), Label::kMalicious) > 0;
  if (has_benign && has_malicious) {
    row.auc = RocAuc(scores, labels);
    row.eer = Eer(scores, labels);
  }
  return row;
}

void Finish(EvalReport& report, const std::vector<OpCase>& ops) {
  std::vector<std::vector<const SampleScore*>> by_row(ops.size());
  std::vector<const SampleScore*> benign, malicious;
  for (const SampleScore& s : report.samples) {
    by_row[s.row].push_back(&s);
    (s.label == Label::kBenign ? benign : malicious).push_back(&s);
  }
  report.rows.clear();
  for (std::size_t r = 0; r < ops.size(); ++r) {
    OpRow row = Aggregate(by_row[r], ops[r].benign ? malicious : benign, report.theta);
    row.op = ops[r].name;
    row.level = ops[r].level;
    row.benign = ops[r].benign;
    report.rows.push_back(std::move(row));
  }
  std::vector<const SampleScore*> all = benign;
  all.insert(all.end(), malicious.begin(), malicious.end());
  report.overall = Aggregate(all, {}, report.theta);
  report.overall.op = "overall";
  report.overall.level = "-";
  auto mean = [](const std::vector<const SampleScore*>& v) {
    double s = 0.0;
    for (const SampleScore* x : v) s += x->distance;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  report.mean_benign_distance = mean(benign);
  report.mean_malicious_distance = mean(malicious);
}

nlohmann::json OptionalJson(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string OptionalCsv(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::setprecision(6) << *v;
  return s.str();
}

nlohmann::json RowJson(const OpRow& r) {
  return {{"op", r.op},
          {"level", r.level},
          {"benign", r.benign},
          {"n", r.n},
          {"tp", r.counts.tp},
          {"fp", r.counts.fp},
          {"tn", r.counts.tn},
          {"fn", r.counts.fn},
          {"tpr", OptionalJson(r.rates.tpr)},
          {"fpr", OptionalJson(r.rates.fpr)},
          {"tnr", OptionalJson(r.rates.tnr)},
          {"fnr", OptionalJson(r.rates.fnr)},
          {"auc", OptionalJson(r.auc)},
          {"eer", OptionalJson(r.eer)},
          {"mean_distance", r.mean_distance},
          {"unverifiable", r.unverifiable}};
}

// Mel band limited to 0-4 kHz, the band every benign channel (including the
// 8 kHz resampling round trip) preserves.
Eigen::VectorXd MeanPooledMfcc(const Waveform& w) {
  MfccConfig c;
  c.cepstral_mean_norm = false;
  c.high_hz = 4000.0;
  return Mfcc(w, c).matrix.colwise().mean().transpose();
}

double Cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

double MfccCosine(const Waveform& a, const Waveform& b) {
  return Cosine(MeanPooledMfcc(a), MeanPooledMfcc(b));
}

int DigestDistance(const Waveform& a, const Waveform& b) {
  const auto da = Sha256(SerializeWav(a, WavEncoding::kFloat32));
  const auto db = Sha256(SerializeWav(b, WavEncoding::kFloat32));
  int d = 0;
  for (std::size_t i = 0; i < da.size(); ++i) d += std::popcount(static_cast<unsigned>(da[i] ^ db[i]));
  return d;
}

OpCase OpCase::Benign(const BenignOp& op) {
  OpCase c;
  c.benign = true;
  c.benign_op = op;
  c.name = BenignKindName(op.kind);
  c.level = "-";
  return c;
}

OpCase OpCase::Malicious(MaliciousKind kind, Severity level) {
  OpCase c;
  c.benign = false;
  c.malicious_op.kind = kind;
  c.malicious_op.level = level;
  c.name = MaliciousKindName(kind);
  const bool leveled = kind != MaliciousKind::kVoiceConversion && kind != MaliciousKind::kTtsProxy;
  c.level = leveled ? SeverityName(level) : "-";
  return c;
}

std::vector<OpCase> DefaultOpMatrix() {
  std::vector<OpCase> ops;
  for (BenignKind k : {BenignKind::kCompression, BenignKind::kReencoding, BenignKind::kResampling,
                       BenignKind::kNoiseSuppression}) {
    BenignOp op;
    op.kind = k;
    ops.push_back(OpCase::Benign(op));
  }
  for (MaliciousKind k : {MaliciousKind::kDeletion, MaliciousKind::kSplicing,
                          MaliciousKind::kSubstitution, MaliciousKind::kSilencing}) {
    for (Severity s : {Severity::kMinor, Severity::kModerate, Severity::kSevere}) {
      ops.push_back(OpCase::Malicious(k, s));
    }
  }
  ops.push_back(OpCase::Malicious(MaliciousKind::kReordering, Severity::kSevere));
  ops.push_back(OpCase::Malicious(MaliciousKind::kVoiceConversion, Severity::kMinor));
  return ops;
}

std::vector<OpCase> TtsSweepMatrix(const std::vector<double>& ratios) {
  std::vector<OpCase> ops;
  for (double r : ratios) {
    OpCase c = OpCase::Malicious(MaliciousKind::kTtsProxy, Severity::kMinor);
    c.malicious_op.ratio = r;
    c.level = FormatLevel(r);
    ops.push_back(c);
  }
  return ops;
}

EvalReport RunProtocol(const std::vector<Utterance>& corpus, const ModelCheckpoint& checkpoint,
                       const VerifierConfig& config, const std::vector<OpCase>& ops,
                       std::uint64_t seed, int jobs) {
  config.Validate(checkpoint);
  const int d = checkpoint.model.fingerprint_bits;
  struct PerUtterance {
    std::vector<SampleScore> samples;
    std::optional<double> si_snr, lsd;
  };
  std::vector<PerUtterance> results(corpus.size());
  ParallelFor(corpus.size(), jobs, [&](std::size_t i) {
    const Waveform& original = corpus[i].audio;
    if (original.DurationSeconds() < kMinFingerprintSeconds) return;
    SignedAudio s;
    try {
      s = Sign(original, checkpoint, config.watermark);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kTooShort) return;
      throw;
    }
    PerUtterance& out = results[i];
    out.si_snr = SiSnr(original.samples, s.audio.samples);
    out.lsd = LogSpectralDistance(original.samples, s.audio.samples);
    for (std::size_t r = 0; r < ops.size(); ++r) {
      const std::optional<Waveform> variant = ApplyCase(corpus, i, s.audio, ops[r], Mix(seed, i, r));
      if (!variant) continue;
      SampleScore score;
      score.utterance = corpus[i].name;
      score.row = r;
      score.label = ops[r].benign ? Label::kBenign : Label::kMalicious;
      try {
        score.distance = Verify(*variant, checkpoint, config).distance;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kTooShort) throw;
        score.distance = d;
        score.unverifiable = true;
      }
      out.samples.push_back(score);
    }
  });

  EvalReport report;
  report.theta = config.theta;
  report.checkpoint_id = CheckpointId(checkpoint);
  report.config_hash = VerifierConfigHash(checkpoint, config);
  double snr_sum = 0.0, lsd_sum = 0.0;
  int counted = 0;
  report.quality.si_snr_min = kSiSnrCapDb;
  for (PerUtterance& u : results) {
    for (SampleScore& s : u.samples) report.samples.push_back(std::move(s));
    if (!u.si_snr) continue;
    ++counted;
    snr_sum += *u.si_snr;
    lsd_sum += *u.lsd;
    report.quality.si_snr_min = std::min(report.quality.si_snr_min, *u.si_snr);
    report.quality.lsd_max = std::max(report.quality.lsd_max, *u.lsd);
  }
  if (counted > 0) {
    report.quality.si_snr_mean = snr_sum / counted;
    report.quality.lsd_mean = lsd_sum / counted;
  }
  Finish(report, ops);
  return report;
}

EvalReport Rescore(const EvalReport& report, const std::vector<OpCase>& ops, int theta) {
  EvalReport out = report;
  out.theta = theta;
  Finish(out, ops);
  return out;
}

nlohmann::json ReportToJson(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const OpRow& r : report.rows) rows.push_back(RowJson(r));
  return {{"theta", report.theta},
          {"checkpoint_id", report.checkpoint_id},
          {"config_hash", report.config_hash},
          {"rows", rows},
          {"overall", RowJson(report.overall)},
          {"mean_benign_distance", report.mean_benign_distance},
          {"mean_malicious_distance", report.mean_malicious_distance},
          {"quality",
           {{"si_snr_mean", report.quality.si_snr_mean},
            {"si_snr_min", report.quality.si_snr_min},
            {"lsd_mean", report.quality.lsd_mean},
            {"lsd_max", report.quality.lsd_max}}}};
}

std::string ReportToCsv(const EvalReport& report) {
  std::ostringstream s;
  s << "op,level,n,tpr,fpr,tnr,fnr,auc,eer,mean_distance\n";
  auto line = [&](const OpRow& r) {
    s << r.op << "," << r.level << "," << r.n << "," << OptionalCsv(r.rates.tpr) << ","
      << OptionalCsv(r.rates.fpr) << "," << OptionalCsv(r.rates.tnr) << ","
      << OptionalCsv(r.rates.fnr) << "," << OptionalCsv(r.auc) << "," << OptionalCsv(r.eer) << ","
      << OptionalCsv(r.mean_distance) << "\n";
  };
  for (const OpRow& r : report.rows) line(r);
  line(report.overall);
  return s.str();
}

double DistributionReport::Mean(const std::string& category) const {
  auto it = values.find(category);
  if (it == values.end() || it->second.empty()) return 0.0;
  double s = 0.0;
  for (double v : it->second) s += v;
  return s / static_cast<double>(it->second.size());
}

std::string DistributionReport::HistogramCsv(double lo, double hi, int bins) const {
  std::ostringstream s;
  s << "bin_left,bin_right,count,category\n";
  const double width = (hi - lo) / bins;
  for (const std::string& c : categories) {
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    auto it = values.find(c);
    if (it != values.end()) {
      for (double v : it->second) {
        const int b = std::clamp(static_cast<int>(std::floor((v - lo) / width)), 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
      }
    }
    for (int b = 0; b < bins; ++b) {
      s << lo + b * width << "," << lo + (b + 1) * width << "," << counts[b] << "," << c << "\n";
    }
  }
  return s.str();
}

nlohmann::json DistributionReport::Summary() const {
  nlohmann::json j = nlohmann::json::array();
  for (const std::string& c : categories) {
    auto it = values.find(c);
    const std::vector<double> v = it == values.end() ? std::vector<double>{} : it->second;
    double var = 0.0;
    const double m = Mean(c);
    for (double x : v) var += (x - m) * (x - m);
    j.push_back({{"category", c},
                 {"n", v.size()},
                 {"mean", m},
                 {"std", v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0},
                 {"min", v.empty() ? 0.0 : *std::min_element(v.begin(), v.end())},
                 {"max", v.empty() ? 0.0 : *std::max_element(v.begin(), v.end())}});
  }
  return j;
}

DistributionReport SimilarityStudy(const std::vector<Utterance>& corpus, std::uint64_t seed) {
  DistributionReport out;
  out.categories = {"benign", "minor", "moderate", "severe", "cross"};
  const std::vector<OpCase> ops = DefaultOpMatrix();
  std::vector<Eigen::VectorXd> pooled;
  for (const Utterance& u : corpus) pooled.push_back(MeanPooledMfcc(u.audio));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Waveform& w = corpus[i].audio;
    const Eigen::VectorXd& ref = pooled[i];
    for (std::size_t r = 0; r < ops.size(); ++r) {
      const OpCase& c = ops[r];
      // Reordering and voice conversion have no severity scale.
      if (!c.benign && c.level == "-") continue;
      if (c.malicious_op.kind == MaliciousKind::kReordering && !c.benign) continue;
      const std::optional<Waveform> v = ApplyCase(corpus, i, w, c, Mix(seed, i, r));
      if (!v) continue;
      out.values[c.benign ? "benign" : c.level].push_back(Cosine(ref, MeanPooledMfcc(*v)));
    }
    for (std::size_t k : CrossPartners(corpus, i)) {
      out.values["cross"].push_back(Cosine(ref, pooled[k]));
    }
  }
  return out;
}

DistributionReport Sha256Study(const std::vector<Utterance>& corpus, std::uint64_t seed) {
  DistributionReport out;
  out.categories = {"benign", "malicious", "cross"};
  const std::vector<OpCase> ops = DefaultOpMatrix();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Waveform& w = corpus[i].audio;
    for (std::size_t r = 0; r < ops.size(); ++r) {
      const std::optional<Waveform> v = ApplyCase(corpus, i, w, ops[r], Mix(seed, i, r));
      if (!v) continue;
      out.values[ops[r].benign ? "benign" : "malicious"].push_back(DigestDistance(w, *v));
    }
    for (std::size_t k : CrossPartners(corpus, i)) {
      out.values["cross"].push_back(DigestDistance(w, corpus[k].audio));
    }
  }
  return out;
}

std::string ExportEmbeddings(const std::vector<Utterance>& corpus,
                             const ModelCheckpoint& checkpoint, const std::vector<OpCase>& ops,
                             std::uint64_t seed) {
  std::ostringstream s;
  s << std::setprecision(9) << "utterance,variant,label";
  for (int k = 0; k < checkpoint.model.fingerprint_bits; ++k) s << ",e" << k;
  s << "\n";
  auto emit = [&](const std::string& utt, const std::string& variant, const std::string& label,
                  const Waveform& w) {
    if (w.DurationSeconds() < kMinFingerprintSeconds) return;
    const Embedding e = EmbedFeatures(ExtractFeatures(w, checkpoint).matrix, checkpoint);
    s << utt << "," << variant << "," << label;
    for (Eigen::Index k = 0; k < e.normalized.size(); ++k) s << "," << e.normalized[k];
    s << "\n";
  };
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Waveform& w = corpus[i].audio;
    emit(corpus[i].name, "original", "original", w);
    for (std::size_t r = 0; r < ops.size(); ++r) {
      const std::optional<Waveform> v = ApplyCase(corpus, i, w, ops[r], Mix(seed, i, r));
      if (!v) continue;
      const std::string variant = ops[r].level == "-" ? ops[r].name : ops[r].name + ":" + ops[r].level;
      emit(corpus[i].name, variant, ops[r].benign ? "benign" : "malicious", *v);
    }
  }
  return s.str();
}

}  // namespace speechverifier
