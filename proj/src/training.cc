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

#include "speechverifier/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "speechverifier/config.h"
#include "speechverifier/error.h"
#include "speechverifier/features.h"
#include "speechverifier/loss.h"
#include "speechverifier/seed.h"
#include "speechverifier/watermark.h"

namespace speechverifier {
namespace {

// Salts that separate the random streams drawn from the training seed.
enum Stream : std::uint64_t {
  kShuffleStream = 1,
  kVariantStream = 2,
  kDropoutStream = 3,
  kPayloadStream = 4,
  kDevStream = 5,
};

constexpr int kRedraws = 8;

std::mt19937_64 MakeRng(std::uint64_t seed) { return std::mt19937_64(seed); }

template <typename T>
std::vector<T> DrawKinds(const std::vector<T>& pool, int count, std::mt19937_64& rng) {
  std::vector<T> out;
  std::vector<T> bag;
  while (static_cast<int>(out.size()) < count) {
    if (bag.empty()) {
      bag = pool;
      std::shuffle(bag.begin(), bag.end(), rng);
    }
    out.push_back(bag.back());
    bag.pop_back();
  }
  return out;
}

// Same-speaker donors for content edits; another speaker's for synthesis.
int PickDonor(const std::vector<Utterance>& corpus, int anchor, bool cross_speaker,
              std::mt19937_64& rng) {
  std::vector<int> preferred;
  std::vector<int> others;
  for (int i = 0; i < static_cast<int>(corpus.size()); ++i) {
    if (i == anchor) continue;
    others.push_back(i);
    const bool same = corpus[anchor].speaker_id && corpus[i].speaker_id == corpus[anchor].speaker_id;
    const bool different = corpus[anchor].speaker_id && corpus[i].speaker_id &&
                           corpus[i].speaker_id != corpus[anchor].speaker_id;
    if (cross_speaker ? different : same) preferred.push_back(i);
  }
  const std::vector<int>& pool = preferred.empty() ? others : preferred;
  if (pool.empty()) return anchor;
  return pool[rng() % pool.size()];
}

BenignOp DrawBenign(BenignKind kind, std::mt19937_64& rng) {
  BenignOp op;
  op.kind = kind;
  if (kind == BenignKind::kResampling) {
    static constexpr int kRates[] = {8000, 22050, 44100};
    op.resample_rate = kRates[rng() % 3];
  }
  return op;
}

std::shared_ptr<const Waveform> Borrow(const Waveform& w) {
  // Non-owning: the corpus outlives every materialized variant.
  return std::shared_ptr<const Waveform>(std::shared_ptr<const Waveform>(), &w);
}

ModelParams ClipAndGet(ModelParams grad, double clip_norm) {
  if (clip_norm > 0.0) {
    const double n = std::sqrt(grad.SquaredNorm());
    if (n > clip_norm) {
      ModelParams scaled = grad.ZerosLike();
      scaled.AddScaled(grad, clip_norm / n);
      return scaled;
    }
  }
  return grad;
}

std::string FormatDouble(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

std::string LossKindName(LossKind kind) { return kind == LossKind::kInfoNce ? "infonce" : "triplet"; }

LossKind ParseLossKind(const std::string& name) {
  if (name == "infonce") return LossKind::kInfoNce;
  if (name == "triplet") return LossKind::kTriplet;
  throw Error(ErrorCode::kInvalidArgument, "unknown loss: " + name);
}

std::string OptimizerKindName(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
      return "sgd";
    case OptimizerKind::kMomentum:
      return "momentum";
    case OptimizerKind::kAdam:
      return "adam";
  }
  return "sgd";
}

OptimizerKind ParseOptimizerKind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "momentum") return OptimizerKind::kMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  throw Error(ErrorCode::kInvalidArgument, "unknown optimizer: " + name);
}

void TrainingConfig::Validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (batch_size < 2) bad("batch_size must be >= 2");
  if (benign_per_anchor < 1) bad("benign_per_anchor must be >= 1");
  if (malicious_per_anchor < 0) bad("malicious_per_anchor must be >= 0");
  if (!(temperature > 0.0)) bad("temperature must be > 0");
  if (!(lr_max > 0.0) || !(lr_min >= 0.0) || lr_min > lr_max) bad("invalid learning rates");
  if (epochs < 0) bad("epochs must be >= 0");
  if (benign_ops.empty()) bad("benign_ops is empty");
  if (malicious_per_anchor > 0 && malicious_ops.empty()) bad("malicious_ops is empty");
  if (loss == LossKind::kTriplet && malicious_per_anchor < 1) bad("triplet loss needs M >= 1");
  if (clip_norm < 0.0) bad("clip_norm must be >= 0");
}

void to_json(nlohmann::json& j, const TrainingConfig& c) {
  std::vector<std::string> benign, malicious;
  for (BenignKind k : c.benign_ops) benign.push_back(BenignKindName(k));
  for (MaliciousKind k : c.malicious_ops) malicious.push_back(MaliciousKindName(k));
  j = {{"batch_size", c.batch_size},
       {"benign_per_anchor", c.benign_per_anchor},
       {"malicious_per_anchor", c.malicious_per_anchor},
       {"temperature", c.temperature},
       {"lr_max", c.lr_max},
       {"lr_min", c.lr_min},
       {"epochs", c.epochs},
       {"seed", c.seed},
       {"loss", LossKindName(c.loss)},
       {"triplet_margin", c.triplet_margin},
       {"optimizer", OptimizerKindName(c.optimizer)},
       {"momentum", c.momentum},
       {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},
       {"adam_epsilon", c.adam_epsilon},
       {"clip_norm", c.clip_norm},
       {"watermark_variants", c.watermark_variants},
       {"benign_ops", benign},
       {"malicious_ops", malicious}};
}

void from_json(const nlohmann::json& j, TrainingConfig& c) {
  const TrainingConfig d;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.benign_per_anchor = j.value("benign_per_anchor", d.benign_per_anchor);
  c.malicious_per_anchor = j.value("malicious_per_anchor", d.malicious_per_anchor);
  c.temperature = j.value("temperature", d.temperature);
  c.lr_max = j.value("lr_max", d.lr_max);
  c.lr_min = j.value("lr_min", d.lr_min);
  c.epochs = j.value("epochs", d.epochs);
  c.seed = j.value("seed", d.seed);
  c.loss = ParseLossKind(j.value("loss", LossKindName(d.loss)));
  c.triplet_margin = j.value("triplet_margin", d.triplet_margin);
  c.optimizer = ParseOptimizerKind(j.value("optimizer", OptimizerKindName(d.optimizer)));
  c.momentum = j.value("momentum", d.momentum);
  c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", d.adam_epsilon);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.watermark_variants = j.value("watermark_variants", d.watermark_variants);
  if (j.contains("benign_ops")) {
    c.benign_ops.clear();
    for (const auto& n : j["benign_ops"]) c.benign_ops.push_back(ParseBenignKind(n));
  }
  if (j.contains("malicious_ops")) {
    c.malicious_ops.clear();
    for (const auto& n : j["malicious_ops"]) c.malicious_ops.push_back(ParseMaliciousKind(n));
  }
}

std::string VariantSpec::Describe() const {
  std::ostringstream s;
  if (benign) {
    s << BenignKindName(benign_op.kind);
    if (benign_op.kind == BenignKind::kResampling) s << "@" << benign_op.resample_rate;
  } else {
    s << MaliciousKindName(malicious_op.kind) << ":" << SeverityName(malicious_op.level)
      << " seed=" << malicious_op.seed;
    if (donor_index >= 0) s << " donor=" << donor_index;
  }
  return s.str();
}

std::string ContrastiveBatch::Describe() const {
  std::ostringstream s;
  s << "epoch " << epoch << " batch " << batch_index << "\n";
  for (const BatchItem& item : items) {
    s << "  anchor " << item.anchor << ":";
    for (const VariantSpec& v : item.benign) s << " [" << v.Describe() << "]";
    for (const VariantSpec& v : item.malicious) s << " [" << v.Describe() << "]";
    s << "\n";
  }
  return s.str();
}

int BatchesPerEpoch(std::size_t corpus_size, const TrainingConfig& config) {
  return static_cast<int>(corpus_size / static_cast<std::size_t>(config.batch_size));
}

ContrastiveBatch BuildBatch(const std::vector<Utterance>& corpus, const TrainingConfig& config,
                            int epoch, int batch_index) {
  config.Validate();
  if (corpus.size() < static_cast<std::size_t>(config.batch_size)) {
    throw Error(ErrorCode::kCorpusTooSmall, "corpus has " + std::to_string(corpus.size()) +
                                                " utterances, batch needs " +
                                                std::to_string(config.batch_size));
  }
  if (batch_index < 0 || batch_index >= BatchesPerEpoch(corpus.size(), config)) {
    throw Error(ErrorCode::kInvalidArgument, "batch index out of range");
  }
  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  auto shuffle_rng = MakeRng(Mix(config.seed, kShuffleStream, epoch));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  ContrastiveBatch batch;
  batch.epoch = epoch;
  batch.batch_index = batch_index;
  for (int b = 0; b < config.batch_size; ++b) {
    BatchItem item;
    item.anchor = order[static_cast<std::size_t>(batch_index * config.batch_size + b)];
    auto rng = MakeRng(Mix(config.seed, kVariantStream, epoch, item.anchor));
    for (BenignKind k : DrawKinds(config.benign_ops, config.benign_per_anchor, rng)) {
      VariantSpec v;
      v.benign = true;
      v.benign_op = DrawBenign(k, rng);
      item.benign.push_back(v);
    }
    for (MaliciousKind k : DrawKinds(config.malicious_ops, config.malicious_per_anchor, rng)) {
      VariantSpec v;
      v.benign = false;
      v.malicious_op.kind = k;
      v.malicious_op.level = static_cast<Severity>(rng() % 3);
      v.malicious_op.seed = rng();
      // Partial synthesis replaces the level's share of the utterance.
      if (k == MaliciousKind::kTtsProxy) v.malicious_op.ratio = SeverityRatio(v.malicious_op.level);
      if (RequiresDonor(k)) {
        v.donor_index = PickDonor(corpus, item.anchor, k == MaliciousKind::kTtsProxy, rng);
      }
      item.malicious.push_back(v);
    }
    batch.items.push_back(std::move(item));
  }
  return batch;
}

Waveform MaterializeVariant(const std::vector<Utterance>& corpus, const Waveform& base,
                            VariantSpec& spec) {
  if (spec.benign) return ApplyBenign(base, spec.benign_op);
  MaliciousOp op = spec.malicious_op;
  if (spec.donor_index >= 0) op.donor = Borrow(corpus.at(spec.donor_index).audio);
  for (int attempt = 0; attempt < kRedraws; ++attempt) {
    try {
      Waveform out = ApplyMalicious(base, op).output;
      spec.malicious_op.seed = op.seed;
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasibleEdit) throw;
      op.seed = Mix(op.seed, attempt);
    }
  }
  spec.malicious_op.kind = MaliciousKind::kVoiceConversion;
  spec.donor_index = -1;
  op.kind = MaliciousKind::kVoiceConversion;
  op.donor.reset();
  return ApplyMalicious(base, op).output;
}

Optimizer::Optimizer(const TrainingConfig& config, const ModelParams& like)
    : kind_(config.optimizer),
      momentum_(config.momentum),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      epsilon_(config.adam_epsilon),
      first_(like.ZerosLike()),
      second_(like.ZerosLike()) {}

void Optimizer::Step(ModelParams& params, const ModelParams& grad, double lr) {
  ++t_;
  switch (kind_) {
    case OptimizerKind::kSgd:
      params.AddScaled(grad, -lr);
      return;
    case OptimizerKind::kMomentum: {
      // v <- mu v + g; w <- w - lr v
      std::vector<Eigen::Map<Eigen::MatrixXd>> vs;
      first_.ForEach(ModelParams::Visitor(
          [&](const std::string&, Eigen::Map<Eigen::MatrixXd> m) { vs.push_back(m); }));
      std::size_t i = 0;
      grad.ForEach(ModelParams::ConstVisitor(
          [&](const std::string&, Eigen::Map<const Eigen::MatrixXd> g) {
            vs[i] = momentum_ * vs[i] + g;
            ++i;
          }));
      params.AddScaled(first_, -lr);
      return;
    }
    case OptimizerKind::kAdam: {
      std::vector<Eigen::Map<Eigen::MatrixXd>> ms, vs, ws;
      first_.ForEach(ModelParams::Visitor(
          [&](const std::string&, Eigen::Map<Eigen::MatrixXd> m) { ms.push_back(m); }));
      second_.ForEach(ModelParams::Visitor(
          [&](const std::string&, Eigen::Map<Eigen::MatrixXd> m) { vs.push_back(m); }));
      params.ForEach(ModelParams::Visitor(
          [&](const std::string&, Eigen::Map<Eigen::MatrixXd> m) { ws.push_back(m); }));
      const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
      std::size_t i = 0;
      grad.ForEach(ModelParams::ConstVisitor(
          [&](const std::string&, Eigen::Map<const Eigen::MatrixXd> g) {
            ms[i] = beta1_ * ms[i] + (1.0 - beta1_) * g;
            vs[i] = beta2_ * vs[i] + (1.0 - beta2_) * g.cwiseProduct(g);
            ws[i].array() -= lr * (ms[i].array() / c1) /
                             ((vs[i].array() / c2).sqrt() + epsilon_);
            ++i;
          }));
      return;
    }
  }
}

void Optimizer::Save(std::map<std::string, Eigen::MatrixXd>& extra) const {
  extra["opt.t"] = Eigen::MatrixXd::Constant(1, 1, static_cast<double>(t_));
  if (kind_ == OptimizerKind::kSgd) return;
  first_.ForEach(ModelParams::ConstVisitor(
      [&](const std::string& name, Eigen::Map<const Eigen::MatrixXd> m) {
        extra["opt.m." + name] = m;
      }));
  if (kind_ != OptimizerKind::kAdam) return;
  second_.ForEach(ModelParams::ConstVisitor(
      [&](const std::string& name, Eigen::Map<const Eigen::MatrixXd> m) {
        extra["opt.v." + name] = m;
      }));
}

void Optimizer::Load(const std::map<std::string, Eigen::MatrixXd>& extra) {
  auto t = extra.find("opt.t");
  t_ = t == extra.end() ? 0 : static_cast<long>(t->second(0, 0));
  auto load = [&](ModelParams& target, const std::string& prefix) {
    target.ForEach(ModelParams::Visitor([&](const std::string& name, Eigen::Map<Eigen::MatrixXd> m) {
      auto it = extra.find(prefix + name);
      if (it == extra.end()) {
        throw Error(ErrorCode::kConfigMismatch, "checkpoint lacks optimizer state " + prefix + name);
      }
      if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
        throw Error(ErrorCode::kShape, "optimizer state shape mismatch for " + name);
      }
      m = it->second;
    }));
  };
  if (kind_ != OptimizerKind::kSgd) load(first_, "opt.m.");
  if (kind_ == OptimizerKind::kAdam) load(second_, "opt.v.");
}

double DevGapBits(const ModelCheckpoint& checkpoint, const std::vector<Utterance>& dev,
                  std::uint64_t seed) {
  static constexpr BenignKind kBenign[] = {BenignKind::kCompression, BenignKind::kReencoding,
                                           BenignKind::kResampling, BenignKind::kNoiseSuppression};
  static constexpr MaliciousKind kMalicious[] = {
      MaliciousKind::kDeletion,  MaliciousKind::kSplicing,   MaliciousKind::kSubstitution,
      MaliciousKind::kSilencing, MaliciousKind::kReordering, MaliciousKind::kVoiceConversion};
  double benign = 0.0, malicious = 0.0;
  int nb = 0, nm = 0;
  std::vector<Utterance> pool = dev;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    const Waveform& w = dev[i].audio;
    const BinaryFingerprint fp = Fingerprint(w, checkpoint);
    const Waveform signed_audio = Embed(w, fp);
    VariantSpec b;
    b.benign_op.kind = kBenign[i % 4];
    benign += Hamming(fp, Fingerprint(MaterializeVariant(pool, signed_audio, b), checkpoint));
    ++nb;
    VariantSpec m;
    m.benign = false;
    m.malicious_op.kind = kMalicious[i % 6];
    m.malicious_op.level = static_cast<Severity>((i / 6) % 3);
    m.malicious_op.seed = Mix(seed, kDevStream, i);
    if (RequiresDonor(m.malicious_op.kind)) m.donor_index = static_cast<int>((i + 1) % dev.size());
    const Waveform edited = MaterializeVariant(pool, signed_audio, m);
    if (edited.DurationSeconds() < kMinFingerprintSeconds) continue;
    malicious += Hamming(fp, Fingerprint(edited, checkpoint));
    ++nm;
  }
  if (nb == 0 || nm == 0) return 0.0;
  return malicious / nm - benign / nb;
}

ModelCheckpoint Train(const std::vector<Utterance>& corpus, const std::vector<Utterance>& dev,
                      const ModelConfig& model, const MfccConfig& features,
                      const TrainingConfig& config, const TrainOptions& options) {
  config.Validate();
  model.Validate();
  if (corpus.size() < static_cast<std::size_t>(config.batch_size)) {
    throw Error(ErrorCode::kCorpusTooSmall, "corpus has " + std::to_string(corpus.size()) +
                                                " utterances, batch needs " +
                                                std::to_string(config.batch_size));
  }
  ModelCheckpoint ckpt = NewCheckpoint(model, features, config.seed);
  ckpt.loss = LossKindName(config.loss);
  Optimizer opt(config, ckpt.params);
  if (options.resume) {
    const ModelCheckpoint& r = *options.resume;
    if (r.PipelineHash() != ckpt.PipelineHash()) {
      throw Error(ErrorCode::kConfigMismatch, "resume checkpoint has a different pipeline config");
    }
    ckpt = r;
    opt.Load(r.extra);
  }

  // Anchor features and the watermarked bases are reused every epoch.
  const WatermarkConfig wm;
  std::vector<Eigen::MatrixXd> anchor_features(corpus.size());
  std::vector<Waveform> bases(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    anchor_features[i] = Mfcc(corpus[i].audio, features).matrix;
    if (config.watermark_variants) {
      BinaryFingerprint payload;
      auto rng = MakeRng(Mix(config.seed, kPayloadStream, i));
      for (int k = 0; k < model.fingerprint_bits; ++k) payload.bits.push_back((rng() & 1) ? 1 : -1);
      bases[i] = Embed(corpus[i].audio, payload, wm);
    } else {
      bases[i] = corpus[i].audio;
    }
  }

  std::ofstream log;
  if (!options.log_path.empty()) {
    const bool append = options.resume.has_value() && std::filesystem::exists(options.log_path);
    log.open(options.log_path, append ? std::ios::app : std::ios::trunc);
    if (!log) throw Error(ErrorCode::kIo, "cannot write " + options.log_path.string());
    if (!append) log << "epoch,step,lr,loss,dev_gap_bits\n";
  }
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  const int per_epoch = BatchesPerEpoch(corpus.size(), config);
  const long total_steps = static_cast<long>(per_epoch) * config.epochs;
  for (int epoch = ckpt.epoch; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    double lr = config.lr_max;
    for (int b = 0; b < per_epoch; ++b) {
      ContrastiveBatch batch = BuildBatch(corpus, config, epoch, b);
      // Flattened items: per anchor, the anchor then benign then malicious.
      std::vector<const Eigen::MatrixXd*> inputs;
      std::vector<Eigen::MatrixXd> owned;
      owned.reserve(batch.items.size() *
                    static_cast<std::size_t>(config.benign_per_anchor + config.malicious_per_anchor));
      for (BatchItem& item : batch.items) {
        inputs.push_back(&anchor_features[item.anchor]);
        for (auto* set : {&item.benign, &item.malicious}) {
          for (VariantSpec& v : *set) {
            owned.push_back(Mfcc(MaterializeVariant(corpus, bases[item.anchor], v), features).matrix);
            inputs.push_back(&owned.back());
          }
        }
      }
      std::vector<ForwardCache> caches(inputs.size());
      std::vector<EmbeddingGroup> groups(batch.items.size());
      std::size_t k = 0;
      for (std::size_t g = 0; g < batch.items.size(); ++g) {
        auto forward = [&]() {
          const DropoutSpec drop{true, Mix(config.seed, kDropoutStream, ckpt.step, k)};
          Eigen::VectorXd e =
              ForwardNetwork(model, ckpt.params, *inputs[k], drop, &caches[k]).normalized;
          ++k;
          return e;
        };
        groups[g].anchor = forward();
        for (std::size_t j = 0; j < batch.items[g].benign.size(); ++j) {
          groups[g].benign.push_back(forward());
        }
        for (std::size_t j = 0; j < batch.items[g].malicious.size(); ++j) {
          groups[g].malicious.push_back(forward());
        }
      }
      const LossResult loss = config.loss == LossKind::kInfoNce
                                  ? InfoNceLoss(groups, config.temperature)
                                  : TripletLoss(groups, config.triplet_margin);
      if (!std::isfinite(loss.value)) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "non-finite loss at step " + std::to_string(ckpt.step) + "; batch:\n" +
                        batch.Describe());
      }
      ModelParams grad = ckpt.params.ZerosLike();
      k = 0;
      for (const EmbeddingGroup& g : loss.grad) {
        auto backward = [&](const Eigen::VectorXd& d) {
          BackwardNetwork(model, ckpt.params, *inputs[k], caches[k], d, grad);
          ++k;
        };
        backward(g.anchor);
        for (const auto& d : g.benign) backward(d);
        for (const auto& d : g.malicious) backward(d);
      }
      lr = LrAt(ckpt.step, total_steps, config.lr_max, config.lr_min);
      opt.Step(ckpt.params, ClipAndGet(std::move(grad), config.clip_norm), lr);
      if (!ckpt.params.AllFinite()) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "non-finite weights after step " + std::to_string(ckpt.step) + "; batch:\n" +
                        batch.Describe());
      }
      ++ckpt.step;
      loss_sum += loss.value;
    }
    ckpt.epoch = epoch + 1;
    ckpt.extra.clear();
    opt.Save(ckpt.extra);

    EpochStats stats;
    stats.epoch = ckpt.epoch;
    stats.step = ckpt.step;
    stats.lr = lr;
    stats.loss = per_epoch > 0 ? loss_sum / per_epoch : 0.0;
    if (!dev.empty()) stats.dev_gap_bits = DevGapBits(ckpt, dev, config.seed);
    if (log.is_open()) {
      log << stats.epoch << "," << stats.step << "," << FormatDouble(stats.lr) << ","
          << FormatDouble(stats.loss) << ","
          << (stats.dev_gap_bits ? FormatDouble(*stats.dev_gap_bits) : "") << "\n";
      log.flush();
    }
    if (!options.checkpoint_dir.empty()) {
      std::ostringstream name;
      name << "epoch_" << std::setw(3) << std::setfill('0') << ckpt.epoch << ".svck";
      SaveCheckpoint(ckpt, options.checkpoint_dir / name.str());
      SaveCheckpoint(ckpt, options.checkpoint_dir / "latest.svck");
    }
    if (options.on_epoch) options.on_epoch(stats);
  }
  return ckpt;
}

}  // namespace speechverifier
