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
#include "mmrecun/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mmrecun/errors.hpp"

namespace mmrecun {

namespace {

// ln(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Sum over the sample of -log softmax(logits)_v and its gradient w.r.t.
// each logit.
double softmax_nll_sum(const Eigen::VectorXd& logits, Eigen::VectorXd& d_logits) {
  const double mx = logits.maxCoeff();
  const Eigen::VectorXd e = (logits.array() - mx).exp();
  const double sum = e.sum();
  const double lse = mx + std::log(sum);
  const auto n = static_cast<double>(logits.size());
  d_logits = n * (e / sum).array() - 1.0;
  return n * lse - logits.sum();
}

}  // namespace

NodeSample nodes_of(const TripleBatch& batch) {
  NodeSample s;
  for (const Triple& t : batch) {
    s.users.push_back(t.user);
    s.items.push_back(t.pos);
  }
  for (auto* v : {&s.users, &s.items}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return s;
}

bool contrastive_applicable(const NodeSample& nodes) {
  return nodes.users.size() >= 2 && nodes.items.size() >= 2;
}

TermResult bpr_term(const PropagatedState& state, const TripleBatch& batch) {
  if (batch.empty()) throw DomainError("bpr: empty batch");
  TermResult r;
  r.grad = StateGrad::zeros(state);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Triple& t : batch) {
    const double diff = score(state, t.user, t.pos) - score(state, t.user, t.neg);
    r.value += softplus(-diff);
    const double d_diff = -sigmoid(-diff) * inv_n;
    r.grad.add_final(t.user, t.pos, d_diff, state);
    r.grad.add_final(t.user, t.neg, -d_diff, state);
  }
  r.value *= inv_n;
  return r;
}

TermResult reverse_bpr_term(const PropagatedState& state, const TripleBatch& batch) {
  TermResult r = bpr_term(state, batch);
  r.value = -r.value;
  r.grad *= -1.0;
  return r;
}

TermResult contrastive_term(const PropagatedState& state, const NodeSample& nodes, double tau) {
  if (!(tau > 0)) throw DomainError("contrastive: temperature must be positive");
  if (!contrastive_applicable(nodes)) {
    throw DomainError("contrastive: sample needs at least two users and two items");
  }
  TermResult r;
  r.grad = StateGrad::zeros(state);
  const double inv_n = 1.0 / static_cast<double>(nodes.users.size() + nodes.items.size());

  auto side = [&](const std::vector<std::int32_t>& idx, const Eigen::MatrixXd& mul,
                  const Eigen::MatrixXd& beh, Eigen::MatrixXd& d_mul, Eigen::MatrixXd& d_beh) {
    Eigen::VectorXd logits(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      logits[static_cast<Eigen::Index>(k)] = mul.row(idx[k]).dot(beh.row(idx[k])) / tau;
    }
    Eigen::VectorXd d_logits;
    const double sum = softmax_nll_sum(logits, d_logits);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double g = d_logits[static_cast<Eigen::Index>(k)] * inv_n / tau;
      d_mul.row(idx[k]) += g * beh.row(idx[k]);
      d_beh.row(idx[k]) += g * mul.row(idx[k]);
    }
    return sum;
  };
  const double users = side(nodes.users, state.user_mul, state.user_beh, r.grad.user_mul,
                            r.grad.user_beh);
  const double items = side(nodes.items, state.item_mul, state.item_beh, r.grad.item_mul,
                            r.grad.item_beh);
  r.value = (users + items) * inv_n;
  return r;
}

double l2_penalty(const ModelParams& params, ModelParams* grad) {
  if (grad != nullptr) {
    *grad = params;
    grad->scale(2.0);
  }
  return params.squared_norm();
}

LossReport bpr_loss(const Recommender& net, const ModelParams& params, const ForwardPass& pass,
                    const TripleBatch& batch) {
  TermResult t = bpr_term(pass.state, batch);
  LossReport r;
  r.bpr = t.value;
  r.combined = t.value;
  r.grads = net.backward(params, pass, t.grad);
  return r;
}

LossReport reverse_bpr_loss(const Recommender& net, const ModelParams& params,
                            const ForwardPass& pass, const TripleBatch& batch) {
  TermResult t = reverse_bpr_term(pass.state, batch);
  LossReport r;
  r.rpr = t.value;
  r.combined = t.value;
  r.grads = net.backward(params, pass, t.grad);
  return r;
}

LossReport contrastive_loss(const Recommender& net, const ModelParams& params,
                            const ForwardPass& pass, const NodeSample& nodes, double tau) {
  TermResult t = contrastive_term(pass.state, nodes, tau);
  LossReport r;
  r.contrastive = t.value;
  r.combined = t.value;
  r.grads = net.backward(params, pass, t.grad);
  return r;
}

namespace {

// Loss values plus the state gradient of the non-L2 part, before backward.
struct Partial {
  LossReport report;
  StateGrad grad;
};

Partial preserve_partial(const PropagatedState& state, const TripleBatch& retain_batch,
                         const NodeSample& nodes, const HyperParams& hyper) {
  Partial p;
  TermResult bpr = bpr_term(state, retain_batch);
  p.report.bpr = bpr.value;
  p.grad = std::move(bpr.grad);
  if (hyper.lambda_c != 0.0 && contrastive_applicable(nodes)) {
    TermResult c = contrastive_term(state, nodes, hyper.tau);
    p.report.contrastive = c.value;
    c.grad *= hyper.lambda_c;
    p.grad += c.grad;
  }
  return p;
}

Partial impair_partial(const PropagatedState& state, const TripleBatch& forget_batch,
                       const NodeSample& nodes, const HyperParams& hyper) {
  Partial p;
  TermResult rpr = reverse_bpr_term(state, forget_batch);
  p.report.rpr = rpr.value;
  p.grad = std::move(rpr.grad);
  if (hyper.lambda_c != 0.0 && contrastive_applicable(nodes)) {
    TermResult c = contrastive_term(state, nodes, hyper.tau);
    p.report.contrastive_forget = c.value;
    c.grad *= -hyper.lambda_c;
    p.grad += c.grad;
  }
  return p;
}

}  // namespace

LossReport preserve_loss(const Recommender& net, const ModelParams& params,
                         const ForwardPass& pass, const TripleBatch& retain_batch,
                         const NodeSample& nodes, const HyperParams& hyper) {
  Partial p = preserve_partial(pass.state, retain_batch, nodes, hyper);
  LossReport& r = p.report;
  ModelParams l2_grad;
  r.l2 = l2_penalty(params, &l2_grad);
  r.preserve = r.bpr + hyper.lambda_c * r.contrastive + hyper.lambda_l2 * r.l2;
  r.combined = r.preserve;
  r.grads = net.backward(params, pass, p.grad);
  r.grads.add_scaled(l2_grad, hyper.lambda_l2);
  return r;
}

LossReport impair_loss(const Recommender& net, const ModelParams& params,
                       const ForwardPass& pass, const TripleBatch& forget_batch,
                       const NodeSample& nodes, const HyperParams& hyper) {
  Partial p = impair_partial(pass.state, forget_batch, nodes, hyper);
  LossReport& r = p.report;
  ModelParams l2_grad;
  r.l2 = l2_penalty(params, &l2_grad);
  r.impair = r.rpr - (hyper.lambda_c * r.contrastive_forget + hyper.lambda_l2 * r.l2);
  r.combined = r.impair;
  r.grads = net.backward(params, pass, p.grad);
  r.grads.add_scaled(l2_grad, -hyper.lambda_l2);
  return r;
}

LossReport unlearning_loss(const Recommender& net, const ModelParams& params,
                           const ForwardPass& pass, const TripleBatch& retain_batch,
                           const NodeSample& retain_nodes, const TripleBatch& forget_batch,
                           const NodeSample& forget_nodes, const HyperParams& hyper) {
  const double alpha = hyper.alpha;
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  Partial keep = preserve_partial(pass.state, retain_batch, retain_nodes, hyper);
  Partial drop = impair_partial(pass.state, forget_batch, forget_nodes, hyper);
  LossReport r;
  r.bpr = keep.report.bpr;
  r.contrastive = keep.report.contrastive;
  r.rpr = drop.report.rpr;
  r.contrastive_forget = drop.report.contrastive_forget;
  ModelParams l2_grad;
  r.l2 = l2_penalty(params, &l2_grad);
  r.preserve = r.bpr + hyper.lambda_c * r.contrastive + hyper.lambda_l2 * r.l2;
  r.impair = r.rpr - (hyper.lambda_c * r.contrastive_forget + hyper.lambda_l2 * r.l2);
  r.combined = alpha * r.preserve + (1.0 - alpha) * r.impair;
  keep.grad *= alpha;
  drop.grad *= 1.0 - alpha;
  keep.grad += drop.grad;
  r.grads = net.backward(params, pass, keep.grad);
  r.grads.add_scaled(l2_grad, (2.0 * alpha - 1.0) * hyper.lambda_l2);
  return r;
}

LossReport combined_loss(const LossReport& preserve, const LossReport& impair, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  LossReport r;
  r.bpr = preserve.bpr;
  r.contrastive = preserve.contrastive;
  r.l2 = preserve.l2;
  r.preserve = preserve.preserve;
  r.rpr = impair.rpr;
  r.contrastive_forget = impair.contrastive_forget;
  r.impair = impair.impair;
  r.combined = alpha * preserve.preserve + (1.0 - alpha) * impair.impair;
  r.grads = preserve.grads;
  r.grads.scale(alpha);
  r.grads.add_scaled(impair.grads, 1.0 - alpha);
  return r;
}

double bpr_divergence(const PropagatedState& a, const PropagatedState& b,
                      const std::vector<ProbeUser>& probe) {
  if (probe.empty()) throw DomainError("bpr_divergence: empty probe");
  double total = 0.0;
  for (const ProbeUser& p : probe) {
    if (p.positives.empty() || p.negatives.empty()) {
      throw DomainError("bpr_divergence: user " + std::to_string(p.user) +
                        " needs at least one positive and one negative");
    }
    auto mean_sq = [&](const std::vector<std::int32_t>& items) {
      double s = 0.0;
      for (auto i : items) {
        const double d = score(a, p.user, i) - score(b, p.user, i);
        s += d * d;
      }
      return s / static_cast<double>(items.size());
    };
    total += mean_sq(p.positives) + mean_sq(p.negatives);
  }
  return total / static_cast<double>(probe.size());
}

}  // namespace mmrecun
