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

#include "speechverifier/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "speechverifier/error.h"

namespace speechverifier {
namespace {

Eigen::MatrixXd RandomLike(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Eigen::Map<Eigen::MatrixXd> View(Eigen::MatrixXd& m) { return {m.data(), m.rows(), m.cols()}; }
Eigen::Map<Eigen::MatrixXd> View(Eigen::VectorXd& v) { return {v.data(), v.rows(), 1}; }
Eigen::Map<const Eigen::MatrixXd> ConstView(const Eigen::MatrixXd& m) {
  return {m.data(), m.rows(), m.cols()};
}

// Checks every parameter tensor whose name starts with one of the prefixes.
double CheckParams(const std::function<double()>& loss, ModelParams& params,
                   const ModelParams& grad, const std::vector<std::string>& prefixes, double eps) {
  std::vector<Eigen::Map<const Eigen::MatrixXd>> analytic;
  grad.ForEach([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> t) { analytic.push_back(t); });
  double worst = 0.0;
  std::size_t i = 0;
  params.ForEach([&](const std::string& name, Eigen::Map<Eigen::MatrixXd> t) {
    const auto& a = analytic[i++];
    const bool selected = std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) {
      return name.rfind(p, 0) == 0;
    });
    if (selected) worst = std::max(worst, CompareWithFiniteDifferences(loss, t, a, eps));
  });
  return worst;
}

}  // namespace

double RelativeError(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
}

double CompareWithFiniteDifferences(const std::function<double()>& loss,
                                    Eigen::Map<Eigen::MatrixXd> values,
                                    Eigen::Map<const Eigen::MatrixXd> analytic, double eps) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double saved = values.data()[i];
    values.data()[i] = saved + eps;
    const double up = loss();
    values.data()[i] = saved - eps;
    const double down = loss();
    values.data()[i] = saved;
    worst = std::max(worst, RelativeError(analytic.data()[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

double GradientCheck(const std::string& op, const Eigen::MatrixXd& input_const,
                     const ModelConfig& config, const ModelParams& params_const, double eps,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams params = params_const;
  Eigen::MatrixXd input = input_const;
  ModelParams grad = params.ZerosLike();
  const DropoutSpec eval{};

  if (op == "lstm_direction") {
    // input is D x T; checks the first layer's forward direction.
    LstmParams& p = params.lstm.at(0)[0];
    const Eigen::MatrixXd r = RandomLike(p.wh.cols(), input.cols(), rng);
    auto loss = [&] { return r.cwiseProduct(LstmDirectionForward(p, input, false, nullptr)).sum(); };
    LstmDirCache cache;
    LstmDirectionForward(p, input, false, &cache);
    LstmParams g{Eigen::MatrixXd::Zero(p.wx.rows(), p.wx.cols()),
                 Eigen::MatrixXd::Zero(p.wh.rows(), p.wh.cols()), Eigen::VectorXd::Zero(p.b.size())};
    const Eigen::MatrixXd dx = LstmDirectionBackward(p, input, false, cache, r, g);
    double worst = CompareWithFiniteDifferences(loss, View(p.wx), ConstView(g.wx), eps);
    worst = std::max(worst, CompareWithFiniteDifferences(loss, View(p.wh), ConstView(g.wh), eps));
    worst = std::max(worst, CompareWithFiniteDifferences(
                                loss, View(p.b), Eigen::Map<const Eigen::MatrixXd>(g.b.data(), g.b.size(), 1), eps));
    return std::max(worst, CompareWithFiniteDifferences(loss, View(input), ConstView(dx), eps));
  }
  if (op == "bilstm") {
    // input is T x D features.
    const Eigen::MatrixXd r = RandomLike(config.sequence_dim(), input.rows(), rng);
    auto loss = [&] {
      return r.cwiseProduct(BiLstmForward(config, params, input, eval, nullptr)).sum();
    };
    BiLstmCache cache;
    BiLstmForward(config, params, input, eval, &cache);
    const Eigen::MatrixXd dx = BiLstmBackward(config, params, cache, r, grad);
    return std::max(CheckParams(loss, params, grad, {"lstm."}, eps),
                    CompareWithFiniteDifferences(loss, View(input), ConstView(dx), eps));
  }
  if (op == "multiscale_pool") {
    // input is C x T hidden states.
    const Eigen::MatrixXd pooled = MultiscalePool(input, config.pool_windows, config.pool_stride);
    const Eigen::MatrixXd r = RandomLike(pooled.rows(), pooled.cols(), rng);
    auto loss = [&] {
      return r.cwiseProduct(MultiscalePool(input, config.pool_windows, config.pool_stride)).sum();
    };
    const Eigen::MatrixXd dx = MultiscalePoolBackward(static_cast<int>(input.cols()),
                                                      config.pool_windows, config.pool_stride, r);
    return CompareWithFiniteDifferences(loss, View(input), ConstView(dx), eps);
  }
  if (op == "attentive_pool") {
    // input is C x K pooled vectors.
    const Eigen::MatrixXd r = RandomLike(input.rows(), 1, rng);
    auto loss = [&] { return r.col(0).dot(AttentivePool(params, input, nullptr)); };
    AttentionCache cache;
    AttentivePool(params, input, &cache);
    const Eigen::MatrixXd dx = AttentivePoolBackward(params, input, cache, r.col(0), grad);
    return std::max(CheckParams(loss, params, grad, {"att."}, eps),
                    CompareWithFiniteDifferences(loss, View(input), ConstView(dx), eps));
  }
  if (op == "projection") {
    // input is a C x 1 utterance vector; the loss reads the tanh output.
    const Eigen::MatrixXd r = RandomLike(config.fingerprint_bits, 1, rng);
    auto loss = [&] {
      return r.col(0).dot(ProjectAndSquash(params, input.col(0), 0.0, eval, nullptr));
    };
    ProjectionCache cache;
    ProjectAndSquash(params, input.col(0), 0.0, eval, &cache);
    const Eigen::VectorXd dx =
        ProjectionBackward(params, cache, Eigen::VectorXd(), r.col(0), grad);
    const Eigen::MatrixXd dxm = dx;
    return std::max(CheckParams(loss, params, grad, {"proj."}, eps),
                    CompareWithFiniteDifferences(loss, View(input), ConstView(dxm), eps));
  }
  if (op == "network") {
    // input is T x D features; the loss reads the normalized embedding.
    const Eigen::VectorXd r = RandomLike(config.fingerprint_bits, 1, rng).col(0);
    auto loss = [&] { return r.dot(ForwardNetwork(config, params, input, eval, nullptr).normalized); };
    ForwardCache cache;
    ForwardNetwork(config, params, input, eval, &cache);
    const Eigen::MatrixXd dx = BackwardNetwork(config, params, input, cache, r, grad);
    return std::max(CheckParams(loss, params, grad, {""}, eps),
                    CompareWithFiniteDifferences(loss, View(input), ConstView(dx), eps));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown gradient-check op " + op);
}

}  // namespace speechverifier
