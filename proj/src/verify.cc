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

#include "speechverifier/verify.h"

#include <algorithm>

#include "speechverifier/config.h"
#include "speechverifier/error.h"

namespace speechverifier {

void VerifierConfig::Validate(const ModelCheckpoint& checkpoint) const {
  const int d = checkpoint.model.fingerprint_bits;
  if (watermark.segments < 1 || d % watermark.segments != 0) {
    throw Error(ErrorCode::kConfigMismatch,
                "fingerprint length " + std::to_string(d) + " does not split into " +
                    std::to_string(watermark.segments) + " segments");
  }
  if (watermark.sample_rate != checkpoint.features.sample_rate) {
    throw Error(ErrorCode::kConfigMismatch, "watermark and feature sample rates differ");
  }
  if (theta < 0 || theta > d) {
    throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, " + std::to_string(d) + "]");
  }
  watermark.Validate();
}

std::string DecisionName(Decision d) { return d == Decision::kAccept ? "accept" : "reject"; }

SignedAudio Sign(const Waveform& waveform, const ModelCheckpoint& checkpoint,
                 const WatermarkConfig& watermark) {
  VerifierConfig config;
  config.watermark = watermark;
  config.Validate(checkpoint);
  SignedAudio out;
  out.fingerprint = Fingerprint(waveform, checkpoint);
  out.audio = Embed(waveform, out.fingerprint, watermark);
  return out;
}

VerificationResult Verify(const Waveform& waveform, const ModelCheckpoint& checkpoint,
                          const VerifierConfig& config) {
  config.Validate(checkpoint);
  const int d = checkpoint.model.fingerprint_bits;
  VerificationResult r;
  r.regenerated = Fingerprint(waveform, checkpoint);
  r.extracted = Extract(waveform, d, config.watermark);
  const int per = d / config.watermark.segments;
  r.per_segment_errors.assign(static_cast<std::size_t>(config.watermark.segments), 0);
  for (int i = 0; i < d; ++i) {
    if (r.regenerated.bits[i] != r.extracted.bits[i]) ++r.per_segment_errors[i / per];
  }
  for (int e : r.per_segment_errors) r.distance += e;
  r.decision = Decide(r.distance, config.theta);
  return r;
}

Calibration CalibrateThreshold(std::span<const int> distances, std::span<const Label> labels,
                               int bits) {
  const std::vector<double> scores(distances.begin(), distances.end());
  const EerPoint p = EqualErrorPoint(scores, labels);
  Calibration c;
  c.theta = std::clamp(static_cast<int>(p.threshold), 0, bits);
  const Rates r = ComputeRates(CountAtThreshold(scores, labels, c.theta));
  c.fpr = *r.fpr;
  c.fnr = *r.fnr;
  c.eer = 0.5 * (c.fpr + c.fnr);
  return c;
}

std::string VerifierConfigHash(const ModelCheckpoint& checkpoint, const VerifierConfig& config) {
  return CanonicalHash({{"pipeline", checkpoint.PipelineHash()},
                        {"watermark", config.watermark},
                        {"theta", config.theta}});
}

nlohmann::json VerificationReport(const std::filesystem::path& path,
                                  const VerificationResult& result, const VerifierConfig& config,
                                  const ModelCheckpoint& checkpoint) {
  return {{"path", path.string()},
          {"distance", result.distance},
          {"theta", config.theta},
          {"decision", DecisionName(result.decision)},
          {"per_segment_errors", result.per_segment_errors},
          {"checkpoint_id", CheckpointId(checkpoint)},
          {"config_hash", VerifierConfigHash(checkpoint, config)}};
}

}  // namespace speechverifier
