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

#include "speechverifier/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "speechverifier/config.h"
#include "speechverifier/error.h"
#include "speechverifier/hash.h"

namespace speechverifier {
namespace {

constexpr std::uint32_t kVersion = 1;

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutF64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  void Need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::kParse, "checkpoint is truncated");
  }
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double F64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string Str(std::size_t n) {
    Need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool Done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void PutTensor(std::vector<std::uint8_t>& out, const std::string& name,
               Eigen::Map<const Eigen::MatrixXd> t) {
  PutU32(out, static_cast<std::uint32_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  PutU32(out, static_cast<std::uint32_t>(t.rows()));
  PutU32(out, static_cast<std::uint32_t>(t.cols()));
  for (Eigen::Index i = 0; i < t.size(); ++i) PutF64(out, t.data()[i]);
}

}  // namespace

std::string ModelCheckpoint::PipelineHash() const {
  return CanonicalHash(nlohmann::json{{"model", model}, {"features", features}});
}

ModelCheckpoint NewCheckpoint(const ModelConfig& model, const MfccConfig& features,
                              std::uint64_t seed) {
  if (features.dim() != model.input_dim) {
    throw Error(ErrorCode::kConfigMismatch, "MFCC dimension " + std::to_string(features.dim()) +
                                                " does not match model input " +
                                                std::to_string(model.input_dim));
  }
  ModelCheckpoint c;
  c.model = model;
  c.features = features;
  c.seed = seed;
  c.params = InitParams(model, seed);
  return c;
}

std::vector<std::uint8_t> SerializeCheckpoint(const ModelCheckpoint& c) {
  const nlohmann::json header = {{"model", c.model},     {"features", c.features},
                                 {"seed", c.seed},       {"step", c.step},
                                 {"epoch", c.epoch},     {"loss", c.loss},
                                 {"pipeline_hash", c.PipelineHash()},
                                 {"config_hash", c.config_hash}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> out = {'S', 'V', 'C', 'K'};
  PutU32(out, kVersion);
  PutU32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  std::uint32_t count = static_cast<std::uint32_t>(c.extra.size());
  c.params.ForEach([&](const std::string&, Eigen::Map<const Eigen::MatrixXd>) { ++count; });
  PutU32(out, count);
  c.params.ForEach(
      [&](const std::string& name, Eigen::Map<const Eigen::MatrixXd> t) { PutTensor(out, name, t); });
  for (const auto& [name, t] : c.extra) {
    PutTensor(out, name, Eigen::Map<const Eigen::MatrixXd>(t.data(), t.rows(), t.cols()));
  }
  return out;
}

ModelCheckpoint ParseCheckpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "SVCK", 4) != 0) {
    throw Error(ErrorCode::kParse, "not a checkpoint file (missing SVCK magic)");
  }
  Reader r(bytes);
  r.Str(4);
  const std::uint32_t version = r.U32();
  if (version != kVersion) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "checkpoint version " + std::to_string(version) + " is not supported");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.Str(r.U32()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("checkpoint header: ") + e.what());
  }
  ModelCheckpoint c;
  c.model = header.at("model").get<ModelConfig>();
  c.features = header.at("features").get<MfccConfig>();
  c.model.Validate();
  c.seed = header.value("seed", std::uint64_t{0});
  c.step = header.value("step", std::int64_t{0});
  c.epoch = header.value("epoch", 0);
  c.loss = header.value("loss", std::string("infonce"));
  c.config_hash = header.value("config_hash", std::string());
  if (header.value("pipeline_hash", std::string()) != c.PipelineHash()) {
    throw Error(ErrorCode::kParse, "checkpoint header hash does not match its configuration");
  }

  c.params = InitParams(c.model, 0);
  std::map<std::string, Eigen::MatrixXd> tensors;
  const std::uint32_t count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.Str(r.U32());
    const std::uint32_t rows = r.U32();
    const std::uint32_t cols = r.U32();
    r.Need(8ull * rows * cols);
    Eigen::MatrixXd t(rows, cols);
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = r.F64();
    if (!t.allFinite()) throw Error(ErrorCode::kData, "checkpoint tensor " + name + " is not finite");
    tensors[name] = std::move(t);
  }
  if (!r.Done()) throw Error(ErrorCode::kParse, "trailing bytes after checkpoint tensors");
  c.params.ForEach([&](const std::string& name, Eigen::Map<Eigen::MatrixXd> t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(ErrorCode::kShape, "checkpoint lacks tensor " + name);
    if (it->second.rows() != t.rows() || it->second.cols() != t.cols()) {
      throw Error(ErrorCode::kShape, "checkpoint tensor " + name + " has the wrong shape");
    }
    t = it->second;
    tensors.erase(it);
  });
  c.extra = std::move(tensors);
  return c;
}

void SaveCheckpoint(const ModelCheckpoint& c, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = SerializeCheckpoint(c);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "cannot write checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

ModelCheckpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return ParseCheckpoint(bytes);
}

std::string CheckpointId(const ModelCheckpoint& c) {
  return Sha256Hex(SerializeCheckpoint(c)).substr(0, 16);
}

FrameFeatures ExtractFeatures(const Waveform& w, const ModelCheckpoint& c) {
  if (w.DurationSeconds() < kMinFingerprintSeconds) {
    throw Error(ErrorCode::kTooShort, "fingerprinting requires at least 2 s of audio, got " +
                                          std::to_string(w.DurationSeconds()) + " s");
  }
  return Mfcc(w, c.features);
}

Embedding EmbedFeatures(const Eigen::MatrixXd& features, const ModelCheckpoint& c) {
  return ForwardNetwork(c.model, c.params, features, DropoutSpec{}, nullptr);
}

BinaryFingerprint FingerprintFeatures(const FrameFeatures& f, const ModelCheckpoint& c) {
  return Binarize(EmbedFeatures(f.matrix, c).squashed);
}

BinaryFingerprint Fingerprint(const Waveform& w, const ModelCheckpoint& c) {
  return FingerprintFeatures(ExtractFeatures(w, c), c);
}

}  // namespace speechverifier
