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

#ifndef SPEECHVERIFIER_TRAINING_H_
#define SPEECHVERIFIER_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "speechverifier/checkpoint.h"
#include "speechverifier/corpus.h"
#include "speechverifier/ops.h"

namespace speechverifier {

enum class LossKind { kInfoNce, kTriplet };
enum class OptimizerKind { kSgd, kMomentum, kAdam };

std::string LossKindName(LossKind kind);
LossKind ParseLossKind(const std::string& name);
std::string OptimizerKindName(OptimizerKind kind);
OptimizerKind ParseOptimizerKind(const std::string& name);

struct TrainingConfig {
  int batch_size = 8;           // anchors per batch, B
  int benign_per_anchor = 2;    // P
  int malicious_per_anchor = 2; // M
  double temperature = 0.05;
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  int epochs = 50;
  std::uint64_t seed = 42;
  LossKind loss = LossKind::kInfoNce;
  double triplet_margin = 0.5;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Global gradient norm clip; 0 disables.
  double clip_norm = 0.0;
  // Variants are derived from a watermarked copy of the anchor, as they are
  // at verification time.
  bool watermark_variants = true;
  std::vector<BenignKind> benign_ops = {BenignKind::kCompression, BenignKind::kReencoding,
                                        BenignKind::kResampling,
                                        BenignKind::kNoiseSuppression};
  std::vector<MaliciousKind> malicious_ops = {
      MaliciousKind::kDeletion,  MaliciousKind::kSplicing,   MaliciousKind::kSubstitution,
      MaliciousKind::kSilencing, MaliciousKind::kReordering, MaliciousKind::kVoiceConversion,
      MaliciousKind::kTtsProxy};

  void Validate() const;
};

void to_json(nlohmann::json& j, const TrainingConfig& c);
void from_json(const nlohmann::json& j, TrainingConfig& c);

// One variant draw. For malicious variants the donor is referenced by corpus
// index (-1 when the op needs none).
struct VariantSpec {
  bool benign = true;
  BenignOp benign_op;
  MaliciousOp malicious_op;
  int donor_index = -1;

  std::string Describe() const;
};

struct BatchItem {
  int anchor = 0;  // corpus index
  std::vector<VariantSpec> benign;
  std::vector<VariantSpec> malicious;
};

struct ContrastiveBatch {
  int epoch = 0;
  int batch_index = 0;
  std::vector<BatchItem> items;

  std::string Describe() const;
};

// Full batches per epoch; the remainder of the shuffled corpus is skipped.
int BatchesPerEpoch(std::size_t corpus_size, const TrainingConfig& config);

// Anchors come from a per-epoch seeded permutation, so each utterance is used
// at most once per epoch. Benign and malicious kinds are drawn without
// replacement per anchor while enough kinds remain. Donors share the anchor's
// speaker when labels allow.
ContrastiveBatch BuildBatch(const std::vector<Utterance>& corpus, const TrainingConfig& config,
                            int epoch, int batch_index);

// Applies spec to base. Edits that find too little voiced audio are redrawn
// with a new seed, and finally replaced by voice conversion; spec is updated to
// what was actually applied.
Waveform MaterializeVariant(const std::vector<Utterance>& corpus, const Waveform& base,
                            VariantSpec& spec);

// Gradient-descent state over ModelParams.
class Optimizer {
 public:
  Optimizer(const TrainingConfig& config, const ModelParams& like);

  void Step(ModelParams& params, const ModelParams& grad, double lr);
  void Save(std::map<std::string, Eigen::MatrixXd>& extra) const;
  void Load(const std::map<std::string, Eigen::MatrixXd>& extra);

 private:
  OptimizerKind kind_;
  double momentum_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long t_ = 0;
  ModelParams first_;
  ModelParams second_;
};

struct EpochStats {
  int epoch = 0;  // 1-based count of completed epochs
  long step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> dev_gap_bits;
};

struct TrainOptions {
  // Per-epoch checkpoints (epoch_NNN.svck and latest.svck) when non-empty.
  std::filesystem::path checkpoint_dir;
  // CSV log with columns epoch,step,lr,loss,dev_gap_bits when non-empty.
  std::filesystem::path log_path;
  // Continue from this checkpoint's epoch, step, weights and optimizer state.
  std::optional<ModelCheckpoint> resume;
  std::function<void(const EpochStats&)> on_epoch;
};

// Mean Path-A Hamming distance of malicious variants minus that of benign
// variants over the dev set, with fixed seeded variants.
double DevGapBits(const ModelCheckpoint& checkpoint, const std::vector<Utterance>& dev,
                  std::uint64_t seed);

ModelCheckpoint Train(const std::vector<Utterance>& corpus, const std::vector<Utterance>& dev,
                      const ModelConfig& model, const MfccConfig& features,
                      const TrainingConfig& config, const TrainOptions& options = {});

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_TRAINING_H_
