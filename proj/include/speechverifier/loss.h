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

#ifndef SPEECHVERIFIER_LOSS_H_
#define SPEECHVERIFIER_LOSS_H_

#include <vector>

#include <Eigen/Dense>

namespace speechverifier {

// Unit-norm embeddings for one anchor and the variants derived from it.
struct EmbeddingGroup {
  Eigen::VectorXd anchor;
  std::vector<Eigen::VectorXd> benign;
  std::vector<Eigen::VectorXd> malicious;
};

struct LossResult {
  double value = 0.0;
  // dLoss/d(embedding), laid out like the input groups.
  std::vector<EmbeddingGroup> grad;
};

// Contrastive loss averaged over anchors and their benign variants:
//   L = -(1/B) sum_i (1/P) sum_j log(exp(s_ij / tau) / sum_{k in D_i} exp(s_ik / tau))
// where s is the dot product with anchor i and D_i holds anchor i's own
// variants plus every embedding of every other group (anchors and variants).
LossResult InfoNceLoss(const std::vector<EmbeddingGroup>& groups, double temperature);

// Hinge on cosine distance d = 1 - a.v over every (benign, malicious) pair of
// each group, summed over pairs and averaged over groups.
LossResult TripletLoss(const std::vector<EmbeddingGroup>& groups, double margin);

// Cosine annealing from lr_max at step 0 to lr_min at total_steps.
double LrAt(long step, long total_steps, double lr_max, double lr_min);

}  // namespace speechverifier

#endif  // SPEECHVERIFIER_LOSS_H_
