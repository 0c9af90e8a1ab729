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

#ifndef SPEECHVERIFIER_MODEL_H_
#define SPEECHVERIFIER_MODEL_H_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "speechverifier/features.h"

namespace speechverifier {

struct ModelConfig {
  int input_dim = 39;
  int lstm_hidden = 64;  // per direction
  int lstm_layers = 2;
  double lstm_dropout = 0.25;
  std::vector<int> pool_windows = {20, 50, 100};
  int pool_stride = 10;
  int attention_dim = 64;
  double embed_dropout = 0.2;
  int proj_hidden = 64;
  int fingerprint_bits = 256;

  int sequence_dim() const { return 2 * lstm_hidden; }
  void Validate() const;
};

// Desk-scale defaults and the full-size variant (256 per direction, 768-dim
// external features, 512-unit projection).
ModelConfig DeskModelConfig();
ModelConfig FullModelConfig();

struct LstmParams {
  Eigen::MatrixXd wx;  // 4H x D, gate order i, f, g, o
  Eigen::MatrixXd wh;  // 4H x H
  Eigen::VectorXd b;   // 4H
};

struct ModelParams {
  // layers[l][0] runs forward in time, layers[l][1] backward.
  std::vector<std::array<LstmParams, 2>> lstm;
  Eigen::MatrixXd att_w;  // A x 2H
  Eigen::VectorXd att_b;  // A
  Eigen::VectorXd att_v;  // A, scalar scorer without output bias
  Eigen::MatrixXd proj_w1;
  Eigen::VectorXd proj_b1;
  Eigen::MatrixXd proj_w2;
  Eigen::VectorXd proj_b2;

  // Visits every tensor with a stable name; vectors are viewed as n x 1.
  using Visitor = std::function<void(const std::string&, Eigen::Map<Eigen::MatrixXd>)>;
  using ConstVisitor =
      std::function<void(const std::string&, Eigen::Map<const Eigen::MatrixXd>)>;
  void ForEach(const Visitor& fn);
  void ForEach(const ConstVisitor& fn) const;
  // Same shapes, all zeros.
  ModelParams ZerosLike() const;
  void AddScaled(const ModelParams& other, double scale);
  void SetZero();
  double SquaredNorm() const;
  bool AllFinite() const;
};

// Uniform(-1/sqrt(fan), 1/sqrt(fan)) weights, zero biases except the LSTM
// forget gate bias which starts at 1.
ModelParams InitParams(const ModelConfig& config, std::uint64_t seed);

// ---- BiLSTM ----

struct LstmDirCache {
  Eigen::MatrixXd gates;   // 4H x T post-activation, indexed by time
  Eigen::MatrixXd cell;    // H x T
  Eigen::MatrixXd hidden;  // H x T
};

struct BiLstmLayerCache {
  Eigen::MatrixXd input;  // D x T (after dropout, as seen by this layer)
  std::array<LstmDirCache, 2> dirs;
  Eigen::MatrixXd dropout_mask;  // mask applied to this layer's input, empty if none
};

struct BiLstmCache {
  std::vector<BiLstmLayerCache> layers;
  Eigen::MatrixXd output;  // 2H x T
};

// One LSTM direction over x (D x T). Returns hidden states H x T aligned with
// the input time index.
Eigen::MatrixXd LstmDirectionForward(const LstmParams& p, const Eigen::MatrixXd& x,
                                     bool reverse, LstmDirCache* cache);
// Accumulates parameter gradients into grad and returns dL/dx.
Eigen::MatrixXd LstmDirectionBackward(const LstmParams& p, const Eigen::MatrixXd& x,
                                      bool reverse, const LstmDirCache& cache,
                                      const Eigen::MatrixXd& d_hidden, LstmParams& grad);

struct DropoutSpec {
  bool train = false;
  std::uint64_t seed = 0;
};

// features: T x d_z rows as produced by the feature encoders. Output 2H x T.
Eigen::MatrixXd BiLstmForward(const ModelConfig& config, const ModelParams& params,
                              const Eigen::MatrixXd& features, const DropoutSpec& dropout,
                              BiLstmCache* cache);
// Returns dL/dfeatures (T x d_z).
Eigen::MatrixXd BiLstmBackward(const ModelConfig& config, const ModelParams& params,
                               const BiLstmCache& cache, const Eigen::MatrixXd& d_output,
                               ModelParams& grad);

// ---- Pooling ----

// Number of windows of size w at the given stride in a sequence of length t.
int PoolCount(int t, int window, int stride);
// Pads (edge replication) sequences shorter than the largest window, then
// averages every window. Input 2H x T, output 2H x K.
Eigen::MatrixXd MultiscalePool(const Eigen::MatrixXd& hidden, const std::vector<int>& windows,
                               int stride);
Eigen::MatrixXd MultiscalePoolBackward(int t, const std::vector<int>& windows, int stride,
                                       const Eigen::MatrixXd& d_pooled);

struct AttentionCache {
  Eigen::MatrixXd squashed;  // A x K, tanh(W h + b)
  Eigen::VectorXd weights;   // K
};

// Softmax-weighted sum of the K columns using scorer v^T tanh(W h + b).
Eigen::VectorXd AttentivePool(const ModelParams& params, const Eigen::MatrixXd& pooled,
                              AttentionCache* cache);
Eigen::MatrixXd AttentivePoolBackward(const ModelParams& params, const Eigen::MatrixXd& pooled,
                                      const AttentionCache& cache, const Eigen::VectorXd& d_out,
                                      ModelParams& grad);

struct ProjectionCache {
  Eigen::VectorXd input;       // after embed dropout
  Eigen::VectorXd dropout_mask;
  Eigen::VectorXd pre_relu;
  Eigen::VectorXd hidden;
  Eigen::VectorXd raw;         // second linear output
  double norm = 0.0;
  Eigen::VectorXd normalized;  // raw / |raw|
  Eigen::VectorXd squashed;    // tanh(normalized)
};

// Linear -> ReLU -> linear -> L2 normalize -> tanh. Returns the tanh output.
Eigen::VectorXd ProjectAndSquash(const ModelParams& params, const Eigen::VectorXd& input,
                                 double dropout_rate, const DropoutSpec& dropout,
                                 ProjectionCache* cache);
// Gradient enters at the L2-normalized vector (the training embedding);
// d_squashed, when non-empty, is chained through tanh and added.
Eigen::VectorXd ProjectionBackward(const ModelParams& params, const ProjectionCache& cache,
                                   const Eigen::VectorXd& d_normalized,
                                   const Eigen::VectorXd& d_squashed, ModelParams& grad);

// ---- Whole network ----

struct ForwardCache {
  BiLstmCache lstm;
  int frames = 0;
  Eigen::MatrixXd pooled;
  AttentionCache attention;
  ProjectionCache projection;
};

struct Embedding {
  Eigen::VectorXd normalized;  // unit-norm training embedding
  Eigen::VectorXd squashed;    // tanh output in (-1, 1)
};

Embedding ForwardNetwork(const ModelConfig& config, const ModelParams& params,
                         const Eigen::MatrixXd& features, const DropoutSpec& dropout,
                         ForwardCache* cache);
// Backpropagates dL/d(normalized embedding) into grad; returns dL/dfeatures.
Eigen::MatrixXd BackwardNetwork(const ModelConfig& config, const ModelParams& params,
                                const Eigen::MatrixXd& features, const ForwardCache& cache,
                                const Eigen::VectorXd& d_normalized, ModelParams& grad);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_MODEL_H_
