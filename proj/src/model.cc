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

#include <algorithm>
#include <cmath>
#include <random>

#include "speechverifier/error.h"
#include "speechverifier/seed.h"

namespace speechverifier {
namespace {

// Inverted-dropout mask: kept entries are scaled by 1 / (1 - rate).
Eigen::MatrixXd DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 - rate;
  Eigen::MatrixXd mask(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = u(rng) < keep ? 1.0 / keep : 0.0;
  }
  return mask;
}

inline double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void Uniform(Eigen::MatrixXd& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  }
}

void Uniform(Eigen::VectorXd& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
}

}  // namespace

void ModelConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (input_dim < 1 || lstm_hidden < 1 || lstm_layers < 1 || attention_dim < 1 ||
      proj_hidden < 1 || fingerprint_bits < 1) {
    fail("model dimensions must be positive");
  }
  if (pool_windows.empty() || pool_stride < 1) fail("pooling needs windows and a stride");
  if (!std::is_sorted(pool_windows.begin(), pool_windows.end()) || pool_windows.front() < 1) {
    fail("pool windows must be positive and ascending");
  }
  if (lstm_dropout < 0.0 || lstm_dropout >= 1.0 || embed_dropout < 0.0 || embed_dropout >= 1.0) {
    fail("dropout rates must be in [0, 1)");
  }
}

ModelConfig DeskModelConfig() { return ModelConfig{}; }

ModelConfig FullModelConfig() {
  ModelConfig c;
  c.input_dim = 768;
  c.lstm_hidden = 256;
  c.attention_dim = 256;
  c.proj_hidden = 512;
  return c;
}

void ModelParams::ForEach(const Visitor& fn) {
  auto visit = [&](const std::string& name, auto& t) {
    fn(name, Eigen::Map<Eigen::MatrixXd>(t.data(), t.rows(), t.cols()));
  };
  for (std::size_t l = 0; l < lstm.size(); ++l) {
    for (int d = 0; d < 2; ++d) {
      const std::string prefix = "lstm." + std::to_string(l) + (d == 0 ? ".fwd." : ".bwd.");
      visit(prefix + "wx", lstm[l][d].wx);
      visit(prefix + "wh", lstm[l][d].wh);
      visit(prefix + "b", lstm[l][d].b);
    }
  }
  visit("att.w", att_w);
  visit("att.b", att_b);
  visit("att.v", att_v);
  visit("proj.w1", proj_w1);
  visit("proj.b1", proj_b1);
  visit("proj.w2", proj_w2);
  visit("proj.b2", proj_b2);
}

void ModelParams::ForEach(const ConstVisitor& fn) const {
  const_cast<ModelParams*>(this)->ForEach(
      [&](const std::string& name, Eigen::Map<Eigen::MatrixXd> t) {
        fn(name, Eigen::Map<const Eigen::MatrixXd>(t.data(), t.rows(), t.cols()));
      });
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams z = *this;
  z.SetZero();
  return z;
}

void ModelParams::SetZero() {
  ForEach([](const std::string&, Eigen::Map<Eigen::MatrixXd> t) { t.setZero(); });
}

void ModelParams::AddScaled(const ModelParams& other, double scale) {
  std::vector<Eigen::Map<const Eigen::MatrixXd>> src;
  other.ForEach([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> t) { src.push_back(t); });
  std::size_t i = 0;
  ForEach([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) { t += scale * src[i++]; });
}

double ModelParams::SquaredNorm() const {
  double s = 0.0;
  ForEach([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> t) { s += t.squaredNorm(); });
  return s;
}

bool ModelParams::AllFinite() const {
  bool ok = true;
  ForEach([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> t) { ok = ok && t.allFinite(); });
  return ok;
}

ModelParams InitParams(const ModelConfig& c, std::uint64_t seed) {
  c.Validate();
  std::mt19937_64 rng(Mix(seed, 77));
  ModelParams p;
  const int h = c.lstm_hidden;
  for (int l = 0; l < c.lstm_layers; ++l) {
    const int in = l == 0 ? c.input_dim : 2 * h;
    std::array<LstmParams, 2> layer;
    for (LstmParams& dir : layer) {
      dir.wx.resize(4 * h, in);
      dir.wh.resize(4 * h, h);
      dir.b = Eigen::VectorXd::Zero(4 * h);
      Uniform(dir.wx, 1.0 / std::sqrt(h), rng);
      Uniform(dir.wh, 1.0 / std::sqrt(h), rng);
      dir.b.segment(h, h).setOnes();
    }
    p.lstm.push_back(std::move(layer));
  }
  p.att_w.resize(c.attention_dim, 2 * h);
  Uniform(p.att_w, 1.0 / std::sqrt(2.0 * h), rng);
  p.att_b = Eigen::VectorXd::Zero(c.attention_dim);
  p.att_v.resize(c.attention_dim);
  Uniform(p.att_v, 1.0 / std::sqrt(c.attention_dim), rng);
  p.proj_w1.resize(c.proj_hidden, 2 * h);
  Uniform(p.proj_w1, 1.0 / std::sqrt(2.0 * h), rng);
  p.proj_b1 = Eigen::VectorXd::Zero(c.proj_hidden);
  p.proj_w2.resize(c.fingerprint_bits, c.proj_hidden);
  Uniform(p.proj_w2, 1.0 / std::sqrt(c.proj_hidden), rng);
  p.proj_b2 = Eigen::VectorXd::Zero(c.fingerprint_bits);
  return p;
}

// ---- LSTM ----

Eigen::MatrixXd LstmDirectionForward(const LstmParams& p, const Eigen::MatrixXd& x, bool reverse,
                                     LstmDirCache* cache) {
  const Eigen::Index h = p.wh.cols();
  const Eigen::Index t_len = x.cols();
  Eigen::MatrixXd pre = p.wx * x;
  pre.colwise() += p.b;
  LstmDirCache local;
  LstmDirCache& c = cache ? *cache : local;
  c.gates.resize(4 * h, t_len);
  c.cell.resize(h, t_len);
  c.hidden.resize(h, t_len);
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd z(4 * h);
  for (Eigen::Index s = 0; s < t_len; ++s) {
    const Eigen::Index t = reverse ? t_len - 1 - s : s;
    z = pre.col(t);
    z.noalias() += p.wh * h_prev;
    for (Eigen::Index k = 0; k < h; ++k) {
      const double i = Sigmoid(z(k));
      const double f = Sigmoid(z(h + k));
      const double g = std::tanh(z(2 * h + k));
      const double o = Sigmoid(z(3 * h + k));
      const double cell = f * c_prev(k) + i * g;
      c.gates(k, t) = i;
      c.gates(h + k, t) = f;
      c.gates(2 * h + k, t) = g;
      c.gates(3 * h + k, t) = o;
      c.cell(k, t) = cell;
      c.hidden(k, t) = o * std::tanh(cell);
    }
    c_prev = c.cell.col(t);
    h_prev = c.hidden.col(t);
  }
  return c.hidden;
}

Eigen::MatrixXd LstmDirectionBackward(const LstmParams& p, const Eigen::MatrixXd& x, bool reverse,
                                      const LstmDirCache& c, const Eigen::MatrixXd& d_hidden,
                                      LstmParams& grad) {
  const Eigen::Index h = p.wh.cols();
  const Eigen::Index t_len = x.cols();
  Eigen::MatrixXd dz(4 * h, t_len);
  Eigen::MatrixXd h_prev_all = Eigen::MatrixXd::Zero(h, t_len);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
  for (Eigen::Index s = t_len - 1; s >= 0; --s) {
    const Eigen::Index t = reverse ? t_len - 1 - s : s;
    const Eigen::Index tp = reverse ? t + 1 : t - 1;
    const bool has_prev = s > 0;
    if (has_prev) h_prev_all.col(t) = c.hidden.col(tp);
    for (Eigen::Index k = 0; k < h; ++k) {
      const double i = c.gates(k, t);
      const double f = c.gates(h + k, t);
      const double g = c.gates(2 * h + k, t);
      const double o = c.gates(3 * h + k, t);
      const double tc = std::tanh(c.cell(k, t));
      const double c_prev = has_prev ? c.cell(k, tp) : 0.0;
      const double dh = d_hidden(k, t) + dh_next(k);
      const double dcell = dh * o * (1.0 - tc * tc) + dc_next(k);
      dz(k, t) = dcell * g * i * (1.0 - i);
      dz(h + k, t) = dcell * c_prev * f * (1.0 - f);
      dz(2 * h + k, t) = dcell * i * (1.0 - g * g);
      dz(3 * h + k, t) = dh * tc * o * (1.0 - o);
      dc_next(k) = dcell * f;
    }
    dh_next.noalias() = p.wh.transpose() * dz.col(t);
  }
  grad.wx.noalias() += dz * x.transpose();
  grad.wh.noalias() += dz * h_prev_all.transpose();
  grad.b += dz.rowwise().sum();
  return p.wx.transpose() * dz;
}

Eigen::MatrixXd BiLstmForward(const ModelConfig& config, const ModelParams& params,
                              const Eigen::MatrixXd& features, const DropoutSpec& dropout,
                              BiLstmCache* cache) {
  if (features.rows() == 0) throw Error(ErrorCode::kEmptyInput, "feature sequence is empty");
  if (features.cols() != config.input_dim) {
    throw Error(ErrorCode::kShape, "features have dimension " + std::to_string(features.cols()) +
                                       ", model expects " + std::to_string(config.input_dim));
  }
  BiLstmCache local;
  BiLstmCache& c = cache ? *cache : local;
  c.layers.assign(params.lstm.size(), {});
  Eigen::MatrixXd x = features.transpose();
  for (std::size_t l = 0; l < params.lstm.size(); ++l) {
    BiLstmLayerCache& layer = c.layers[l];
    if (l > 0 && dropout.train && config.lstm_dropout > 0.0) {
      layer.dropout_mask = DropoutMask(x.rows(), x.cols(), config.lstm_dropout, Mix(dropout.seed, l));
      x = x.cwiseProduct(layer.dropout_mask);
    }
    layer.input = std::move(x);
    const Eigen::Index h = params.lstm[l][0].wh.cols();
    x.resize(2 * h, layer.input.cols());
    x.topRows(h) = LstmDirectionForward(params.lstm[l][0], layer.input, false, &layer.dirs[0]);
    x.bottomRows(h) = LstmDirectionForward(params.lstm[l][1], layer.input, true, &layer.dirs[1]);
  }
  c.output = x;
  return x;
}

Eigen::MatrixXd BiLstmBackward(const ModelConfig&, const ModelParams& params,
                               const BiLstmCache& cache, const Eigen::MatrixXd& d_output,
                               ModelParams& grad) {
  Eigen::MatrixXd d = d_output;
  for (std::size_t l = params.lstm.size(); l-- > 0;) {
    const BiLstmLayerCache& layer = cache.layers[l];
    const Eigen::Index h = params.lstm[l][0].wh.cols();
    Eigen::MatrixXd dx = LstmDirectionBackward(params.lstm[l][0], layer.input, false,
                                               layer.dirs[0], d.topRows(h), grad.lstm[l][0]);
    dx += LstmDirectionBackward(params.lstm[l][1], layer.input, true, layer.dirs[1],
                                d.bottomRows(h), grad.lstm[l][1]);
    if (layer.dropout_mask.size() > 0) dx = dx.cwiseProduct(layer.dropout_mask);
    d = std::move(dx);
  }
  return d.transpose();
}

// ---- Pooling ----

int PoolCount(int t, int window, int stride) {
  return t >= window ? (t - window) / stride + 1 : 0;
}

Eigen::MatrixXd MultiscalePool(const Eigen::MatrixXd& hidden, const std::vector<int>& windows,
                               int stride) {
  const int t = static_cast<int>(hidden.cols());
  if (t == 0) throw Error(ErrorCode::kEmptyInput, "cannot pool an empty sequence");
  const int padded_len = std::max(t, windows.back());
  int k_total = 0;
  for (int w : windows) k_total += PoolCount(padded_len, w, stride);
  if (k_total == 0) throw Error(ErrorCode::kTooShort, "sequence shorter than every pool window");
  auto column = [&](int i) { return hidden.col(std::min(i, t - 1)); };
  Eigen::MatrixXd out(hidden.rows(), k_total);
  int k = 0;
  for (int w : windows) {
    const int count = PoolCount(padded_len, w, stride);
    for (int i = 0; i < count; ++i, ++k) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(hidden.rows());
      for (int j = i * stride; j < i * stride + w; ++j) sum += column(j);
      out.col(k) = sum / w;
    }
  }
  return out;
}

Eigen::MatrixXd MultiscalePoolBackward(int t, const std::vector<int>& windows, int stride,
                                       const Eigen::MatrixXd& d_pooled) {
  const int padded_len = std::max(t, windows.back());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(d_pooled.rows(), t);
  int k = 0;
  for (int w : windows) {
    const int count = PoolCount(padded_len, w, stride);
    for (int i = 0; i < count; ++i, ++k) {
      const Eigen::VectorXd share = d_pooled.col(k) / w;
      for (int j = i * stride; j < i * stride + w; ++j) d.col(std::min(j, t - 1)) += share;
    }
  }
  return d;
}

Eigen::VectorXd AttentivePool(const ModelParams& p, const Eigen::MatrixXd& pooled,
                              AttentionCache* cache) {
  AttentionCache local;
  AttentionCache& c = cache ? *cache : local;
  Eigen::MatrixXd pre = p.att_w * pooled;
  pre.colwise() += p.att_b;
  c.squashed = pre.array().tanh().matrix();
  const Eigen::VectorXd scores = c.squashed.transpose() * p.att_v;
  const double peak = scores.maxCoeff();
  c.weights = (scores.array() - peak).exp().matrix();
  c.weights /= c.weights.sum();
  return pooled * c.weights;
}

Eigen::MatrixXd AttentivePoolBackward(const ModelParams& p, const Eigen::MatrixXd& pooled,
                                      const AttentionCache& c, const Eigen::VectorXd& d_out,
                                      ModelParams& grad) {
  Eigen::MatrixXd d_pooled = d_out * c.weights.transpose();
  const Eigen::VectorXd dw = pooled.transpose() * d_out;
  const Eigen::VectorXd de = c.weights.cwiseProduct((dw.array() - c.weights.dot(dw)).matrix());
  grad.att_v.noalias() += c.squashed * de;
  const Eigen::MatrixXd ds =
      (p.att_v * de.transpose()).cwiseProduct((1.0 - c.squashed.array().square()).matrix());
  grad.att_w.noalias() += ds * pooled.transpose();
  grad.att_b += ds.rowwise().sum();
  d_pooled.noalias() += p.att_w.transpose() * ds;
  return d_pooled;
}

Eigen::VectorXd ProjectAndSquash(const ModelParams& p, const Eigen::VectorXd& input,
                                 double dropout_rate, const DropoutSpec& dropout,
                                 ProjectionCache* cache) {
  ProjectionCache local;
  ProjectionCache& c = cache ? *cache : local;
  c.input = input;
  c.dropout_mask.resize(0);
  if (dropout.train && dropout_rate > 0.0) {
    c.dropout_mask = DropoutMask(input.size(), 1, dropout_rate, Mix(dropout.seed, 1000));
    c.input = c.input.cwiseProduct(c.dropout_mask);
  }
  c.pre_relu = p.proj_w1 * c.input + p.proj_b1;
  c.hidden = c.pre_relu.cwiseMax(0.0);
  c.raw = p.proj_w2 * c.hidden + p.proj_b2;
  c.norm = c.raw.norm();
  c.normalized = c.norm > 0.0 ? Eigen::VectorXd(c.raw / c.norm)
                              : Eigen::VectorXd::Zero(c.raw.size());
  c.squashed = c.normalized.array().tanh().matrix();
  return c.squashed;
}

Eigen::VectorXd ProjectionBackward(const ModelParams& p, const ProjectionCache& c,
                                   const Eigen::VectorXd& d_normalized,
                                   const Eigen::VectorXd& d_squashed, ModelParams& grad) {
  Eigen::VectorXd dn = d_normalized.size() > 0 ? d_normalized
                                               : Eigen::VectorXd::Zero(c.normalized.size());
  if (d_squashed.size() > 0) {
    dn += d_squashed.cwiseProduct((1.0 - c.squashed.array().square()).matrix());
  }
  Eigen::VectorXd d_raw = Eigen::VectorXd::Zero(c.raw.size());
  if (c.norm > 0.0) d_raw = (dn - c.normalized * c.normalized.dot(dn)) / c.norm;
  grad.proj_w2.noalias() += d_raw * c.hidden.transpose();
  grad.proj_b2 += d_raw;
  Eigen::VectorXd d_hidden = p.proj_w2.transpose() * d_raw;
  for (Eigen::Index i = 0; i < d_hidden.size(); ++i) {
    if (c.pre_relu(i) <= 0.0) d_hidden(i) = 0.0;
  }
  grad.proj_w1.noalias() += d_hidden * c.input.transpose();
  grad.proj_b1 += d_hidden;
  Eigen::VectorXd d_input = p.proj_w1.transpose() * d_hidden;
  if (c.dropout_mask.size() > 0) d_input = d_input.cwiseProduct(c.dropout_mask);
  return d_input;
}

Embedding ForwardNetwork(const ModelConfig& config, const ModelParams& params,
                         const Eigen::MatrixXd& features, const DropoutSpec& dropout,
                         ForwardCache* cache) {
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.frames = static_cast<int>(features.rows());
  const Eigen::MatrixXd hidden = BiLstmForward(config, params, features, dropout, &c.lstm);
  c.pooled = MultiscalePool(hidden, config.pool_windows, config.pool_stride);
  const Eigen::VectorXd utterance = AttentivePool(params, c.pooled, &c.attention);
  ProjectAndSquash(params, utterance, config.embed_dropout, dropout, &c.projection);
  return {c.projection.normalized, c.projection.squashed};
}

Eigen::MatrixXd BackwardNetwork(const ModelConfig& config, const ModelParams& params,
                                const Eigen::MatrixXd&, const ForwardCache& c,
                                const Eigen::VectorXd& d_normalized, ModelParams& grad) {
  const Eigen::VectorXd d_utt =
      ProjectionBackward(params, c.projection, d_normalized, Eigen::VectorXd(), grad);
  const Eigen::MatrixXd d_pooled = AttentivePoolBackward(params, c.pooled, c.attention, d_utt, grad);
  const Eigen::MatrixXd d_hidden =
      MultiscalePoolBackward(c.frames, config.pool_windows, config.pool_stride, d_pooled);
  return BiLstmBackward(config, params, c.lstm, d_hidden, grad);
}

}  // namespace speechverifier
