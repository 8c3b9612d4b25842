// Copyright 2026 The mmrecun Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <vector>

#include "mmrecun/model.hpp"

namespace mmrecun {

struct Triple {
  std::int32_t user = 0;
  std::int32_t pos = 0;
  std::int32_t neg = 0;
};

// Positives come from the governing edge set (retain or forget); negatives
// are never train positives of the user.
using TripleBatch = std::vector<Triple>;

// Users and items that enter the contrastive term; the softmax denominator
// runs over this sample, not the whole catalog.
struct NodeSample {
  std::vector<std::int32_t> users;
  std::vector<std::int32_t> items;
};

// Distinct users and positive items of a batch, ascending.
NodeSample nodes_of(const TripleBatch& batch);
// At least two users and two items, as the contrastive term requires.
bool contrastive_applicable(const NodeSample& nodes);

// A scalar objective and its derivative w.r.t. the propagated state.
struct TermResult {
  double value = 0.0;
  StateGrad grad;
};

// mean over triples of -ln sigma(y_ui - y_uj)
TermResult bpr_term(const PropagatedState& state, const TripleBatch& batch);
// mean over triples of +ln sigma(y_ui - y_uj); exactly the negation of bpr_term
TermResult reverse_bpr_term(const PropagatedState& state, const TripleBatch& batch);
// Per sampled node v: -log(exp(s_v/tau) / sum_w exp(s_w/tau)) with
// s_v = <e_mul_v, e_beh_v>; users and items normalize separately. Averaged
// over all sampled nodes.
TermResult contrastive_term(const PropagatedState& state, const NodeSample& nodes, double tau);

// ||params||^2, gradient 2 * params.
double l2_penalty(const ModelParams& params, ModelParams* grad);

struct LossReport {
  double bpr = 0.0;
  double rpr = 0.0;
  double contrastive = 0.0;         // on the retain sample
  double contrastive_forget = 0.0;  // on the forget sample
  double l2 = 0.0;
  double preserve = 0.0;
  double impair = 0.0;
  double combined = 0.0;
  ModelParams grads;
};

LossReport bpr_loss(const Recommender& net, const ModelParams& params, const ForwardPass& pass,
                    const TripleBatch& batch);
LossReport reverse_bpr_loss(const Recommender& net, const ModelParams& params,
                            const ForwardPass& pass, const TripleBatch& batch);
LossReport contrastive_loss(const Recommender& net, const ModelParams& params,
                            const ForwardPass& pass, const NodeSample& nodes, double tau);

// L_p = bpr + lambda_c * contrastive + lambda_l2 * ||params||^2. The
// contrastive term is dropped when the sample is too small for it.
LossReport preserve_loss(const Recommender& net, const ModelParams& params,
                         const ForwardPass& pass, const TripleBatch& retain_batch,
                         const NodeSample& nodes, const HyperParams& hyper);
// L_r = rpr - (lambda_c * contrastive_f + lambda_l2 * ||params||^2)
LossReport impair_loss(const Recommender& net, const ModelParams& params,
                       const ForwardPass& pass, const TripleBatch& forget_batch,
                       const NodeSample& nodes, const HyperParams& hyper);
// alpha * L_p + (1 - alpha) * L_r
LossReport combined_loss(const LossReport& preserve, const LossReport& impair, double alpha);
// combined_loss(preserve_loss(..), impair_loss(..), hyper.alpha) with a single
// backward pass.
LossReport unlearning_loss(const Recommender& net, const ModelParams& params,
                           const ForwardPass& pass, const TripleBatch& retain_batch,
                           const NodeSample& retain_nodes, const TripleBatch& forget_batch,
                           const NodeSample& forget_nodes, const HyperParams& hyper);

struct ProbeUser {
  std::int32_t user = 0;
  std::vector<std::int32_t> positives;
  std::vector<std::int32_t> negatives;
  bool operator==(const ProbeUser&) const = default;
};

// BPR divergence: per user, mean squared score difference over positives
// plus the same over negatives; averaged over probe users.
double bpr_divergence(const PropagatedState& a, const PropagatedState& b,
                      const std::vector<ProbeUser>& probe);

}  // namespace mmrecun
