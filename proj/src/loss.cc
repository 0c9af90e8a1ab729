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

#include "speechverifier/loss.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "speechverifier/error.h"

namespace speechverifier {
namespace {

std::vector<EmbeddingGroup> ZeroGrad(const std::vector<EmbeddingGroup>& groups) {
  std::vector<EmbeddingGroup> g(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    g[i].anchor = Eigen::VectorXd::Zero(groups[i].anchor.size());
    for (const auto& v : groups[i].benign) g[i].benign.push_back(Eigen::VectorXd::Zero(v.size()));
    for (const auto& v : groups[i].malicious) {
      g[i].malicious.push_back(Eigen::VectorXd::Zero(v.size()));
    }
  }
  return g;
}

void CheckGroups(const std::vector<EmbeddingGroup>& groups) {
  if (groups.empty()) throw Error(ErrorCode::kInvalidArgument, "loss needs at least one group");
  for (const auto& g : groups) {
    if (g.benign.empty()) throw Error(ErrorCode::kInvalidArgument, "group without benign variant");
  }
}

}  // namespace

LossResult InfoNceLoss(const std::vector<EmbeddingGroup>& groups, double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  CheckGroups(groups);
  // Flat view of every embedding with its owner and role.
  struct Ref {
    std::size_t group;
    int role;  // 0 anchor, 1 benign, 2 malicious
    std::size_t index;
  };
  std::vector<Ref> all;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    all.push_back({g, 0, 0});
    for (std::size_t j = 0; j < groups[g].benign.size(); ++j) all.push_back({g, 1, j});
    for (std::size_t j = 0; j < groups[g].malicious.size(); ++j) all.push_back({g, 2, j});
  }
  auto vec = [&](const Ref& r) -> const Eigen::VectorXd& {
    const EmbeddingGroup& g = groups[r.group];
    return r.role == 0 ? g.anchor : r.role == 1 ? g.benign[r.index] : g.malicious[r.index];
  };
  LossResult out;
  out.grad = ZeroGrad(groups);
  auto grad = [&](const Ref& r) -> Eigen::VectorXd& {
    EmbeddingGroup& g = out.grad[r.group];
    return r.role == 0 ? g.anchor : r.role == 1 ? g.benign[r.index] : g.malicious[r.index];
  };

  const double inv_b = 1.0 / static_cast<double>(groups.size());
  std::vector<double> logits;
  std::vector<const Ref*> members;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const Eigen::VectorXd& a = groups[i].anchor;
    logits.clear();
    members.clear();
    for (const Ref& r : all) {
      if (r.group == i && r.role == 0) continue;
      members.push_back(&r);
      logits.push_back(a.dot(vec(r)) / temperature);
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double lse = mx + std::log(z);
    const double inv_p = 1.0 / static_cast<double>(groups[i].benign.size());
    double term = lse;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Ref& r = *members[k];
      const bool positive = r.group == i && r.role == 1;
      if (positive) term -= inv_p * logits[k];
      // dL/ds_ik, then chain through s = a . v.
      const double ds = inv_b * (std::exp(logits[k] - lse) - (positive ? inv_p : 0.0)) / temperature;
      if (ds == 0.0) continue;
      out.grad[i].anchor += ds * vec(r);
      grad(r) += ds * a;
    }
    out.value += inv_b * term;
  }
  return out;
}

LossResult TripletLoss(const std::vector<EmbeddingGroup>& groups, double margin) {
  CheckGroups(groups);
  LossResult out;
  out.grad = ZeroGrad(groups);
  const double inv_b = 1.0 / static_cast<double>(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const EmbeddingGroup& g = groups[i];
    for (std::size_t p = 0; p < g.benign.size(); ++p) {
      for (std::size_t n = 0; n < g.malicious.size(); ++n) {
        // (1 - a.p) - (1 - a.n) + margin
        const double h = g.anchor.dot(g.malicious[n]) - g.anchor.dot(g.benign[p]) + margin;
        if (h <= 0.0) continue;
        out.value += inv_b * h;
        out.grad[i].anchor += inv_b * (g.malicious[n] - g.benign[p]);
        out.grad[i].malicious[n] += inv_b * g.anchor;
        out.grad[i].benign[p] -= inv_b * g.anchor;
      }
    }
  }
  return out;
}

double LrAt(long step, long total_steps, double lr_max, double lr_min) {
  if (step <= 0 || total_steps <= 0) return lr_max;
  if (step >= total_steps) return lr_min;
  const double t = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace speechverifier
