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

#ifndef SPEECHVERIFIER_GRADCHECK_H_
#define SPEECHVERIFIER_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "speechverifier/model.h"

namespace speechverifier {

// |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor). The floor
// keeps exactly-zero gradients from turning round-off into a large ratio.
inline constexpr double kGradCheckFloor = 1e-6;
double RelativeError(double analytic, double numeric);

// Perturbs every entry of values by +-eps, evaluates loss, and compares the
// central difference against analytic (same layout). Returns the max error.
double CompareWithFiniteDifferences(const std::function<double()>& loss,
                                    Eigen::Map<Eigen::MatrixXd> values,
                                    Eigen::Map<const Eigen::MatrixXd> analytic, double eps);

// Checks one model stage on a small instance with the scalar loss
// sum(R .* stage_output) for a seeded random R. Every weight of the stage and
// every input coordinate is checked. op_name is one of "lstm_direction",
// "bilstm", "multiscale_pool", "attentive_pool", "projection", "network".
double GradientCheck(const std::string& op_name, const Eigen::MatrixXd& input,
                     const ModelConfig& config, const ModelParams& params, double eps,
                     std::uint64_t seed = 1);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_GRADCHECK_H_
