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
#include "mmrecun/unlearn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "mmrecun/errors.hpp"
#include "mmrecun/metrics.hpp"

namespace mmrecun {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kTrain: return "train";
    case Mode::kGold: return "gold";
    case Mode::kAmun: return "amun";
    case Mode::kMmrecun: return "mmrecun";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  for (auto m : {Mode::kTrain, Mode::kGold, Mode::kAmun, Mode::kMmrecun}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + s + "'");
}

Adam::Adam(const ModelParams& like, double lr, double beta1, double beta2, double eps)
    : m_(like.zeros_like()), v_(like.zeros_like()), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {}

void Adam::step(ModelParams& params, const ModelParams& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  std::vector<const double*> g;
  std::vector<double*> m, v;
  grads.visit([&](const std::string&, const auto& t) { g.push_back(t.data()); });
  m_.visit([&](const std::string&, auto& t) { m.push_back(t.data()); });
  v_.visit([&](const std::string&, auto& t) { v.push_back(t.data()); });
  std::size_t k = 0;
  params.visit([&](const std::string&, auto& t) {
    const double* gk = g[k];
    double* mk = m[k];
    double* vk = v[k];
    double* p = t.data();
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      mk[j] = beta1_ * mk[j] + (1.0 - beta1_) * gk[j];
      vk[j] = beta2_ * vk[j] + (1.0 - beta2_) * gk[j] * gk[j];
      p[j] -= lr_ * (mk[j] / c1) / (std::sqrt(vk[j] / c2) + eps_);
    }
    ++k;
  });
}

std::vector<std::int32_t> sample_negatives(std::int32_t num_items, int count,
                                           const std::vector<std::int32_t>& exclusions, Rng& rng) {
  std::vector<std::int32_t> out;
  if (count <= 0) return out;
  auto excluded = [&](std::int32_t i) {
    return std::binary_search(exclusions.begin(), exclusions.end(), i);
  };
  const std::int64_t candidates =
      static_cast<std::int64_t>(num_items) - static_cast<std::int64_t>(exclusions.size());
  if (candidates <= 0) return out;

  if (static_cast<std::int64_t>(count) * 2 <= candidates) {
    // Sparse regime: rejection sampling.
    std::uniform_int_distribution<std::int32_t> pick(0, num_items - 1);
    std::unordered_set<std::int32_t> taken;
    while (static_cast<int>(out.size()) < count) {
      const std::int32_t i = pick(rng);
      if (excluded(i) || !taken.insert(i).second) continue;
      out.push_back(i);
    }
    return out;
  }
  // Dense regime: partial Fisher-Yates over the explicit candidate list.
  std::vector<std::int32_t> pool;
  pool.reserve(static_cast<std::size_t>(candidates));
  for (std::int32_t i = 0; i < num_items; ++i)
    if (!excluded(i)) pool.push_back(i);
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(count), pool.size());
  for (std::size_t k = 0; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  pool.resize(n);
  return pool;
}

TripleBatch make_triples(const EdgeList& edges, int neg_per_pos, std::int32_t num_items,
                         const std::vector<std::vector<std::int32_t>>& positives_by_user,
                         Rng& rng) {
  TripleBatch batch;
  batch.reserve(edges.size() * static_cast<std::size_t>(neg_per_pos));
  for (const Edge& e : edges) {
    for (auto j : sample_negatives(num_items, neg_per_pos, positives_by_user[e.user], rng)) {
      batch.push_back({e.user, e.item, j});
    }
  }
  return batch;
}

std::vector<ProbeUser> make_forget_probe(const DatasetSplit& split, const Partition& partition,
                                         std::uint64_t seed) {
  Rng rng = SeedStreams(seed).stream("probe");
  const auto train_pos = items_by_user(split.num_users, split.train);
  std::vector<ProbeUser> probe;
  for (const Edge& e : partition.forget) {
    if (probe.empty() || probe.back().user != e.user) probe.push_back({e.user, {}, {}});
    probe.back().positives.push_back(e.item);
  }
  for (ProbeUser& p : probe) {
    p.negatives = sample_negatives(split.num_items, kProbeNegatives, train_pos[p.user], rng);
  }
  std::erase_if(probe, [](const ProbeUser& p) { return p.negatives.empty(); });
  return probe;
}

double forget_auc(const PropagatedState& state, const DatasetSplit& split,
                  const Partition& partition) {
  if (partition.forget.empty()) throw DomainError("forget_auc: empty forget set");
  const auto train_pos = items_by_user(split.num_users, split.train);
  double total = 0.0;
  std::size_t counted = 0;
  auto it = partition.forget.begin();
  while (it != partition.forget.end()) {
    const std::int32_t u = it->user;
    const Eigen::VectorXd scores = state.item_final * state.user_final.row(u).transpose();
    const auto& excl = train_pos[u];
    for (; it != partition.forget.end() && it->user == u; ++it) {
      const double s = scores[it->item];
      double below = 0.0;
      std::size_t n = 0;
      for (std::int32_t j = 0; j < static_cast<std::int32_t>(scores.size()); ++j) {
        if (std::binary_search(excl.begin(), excl.end(), j)) continue;
        ++n;
        if (scores[j] < s) {
          below += 1.0;
        } else if (scores[j] == s) {
          below += 0.5;
        }
      }
      if (n == 0) continue;
      total += below / static_cast<double>(n);
      ++counted;
    }
  }
  return counted == 0 ? 0.5 : total / static_cast<double>(counted);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::max(std::chrono::duration<double>(Clock::now() - start).count(),
                  std::numeric_limits<double>::min());
}

void require_finite(const LossReport& rep, const char* what) {
  if (!std::isfinite(rep.combined) || !rep.grads.all_finite()) {
    throw NumericError(std::string("non-finite ") + what + " loss or gradient");
  }
}

std::vector<EdgeList> shuffled_batches(const EdgeList& edges, int batch_size, Rng& rng) {
  EdgeList order = edges;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<EdgeList> batches;
  for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(batch_size)) {
    const auto e = std::min(order.size(), b + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return batches;
}

// Patience bookkeeping on validation Recall@20.
struct EarlyStopper {
  int patience;
  double best = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int wait = 0;

  // Returns true when the metric improved.
  bool update(double value, int epoch) {
    if (value > best) {
      best = value;
      best_epoch = epoch;
      wait = 0;
      return true;
    }
    ++wait;
    return false;
  }
  bool exhausted() const { return wait >= patience; }
};

void check_params_match(const InteractionGraph& graph, const ModelParams& params,
                        const HyperParams& hyper) {
  if (params.user_emb.rows() != graph.num_users || params.item_emb.rows() != graph.num_items) {
    throw ShapeError("checkpoint has " + std::to_string(params.user_emb.rows()) + " users / " +
                     std::to_string(params.item_emb.rows()) + " items, graph has " +
                     std::to_string(graph.num_users) + " / " + std::to_string(graph.num_items));
  }
  if (params.dim() != hyper.dim) {
    throw ShapeError("checkpoint dim " + std::to_string(params.dim()) + " != configured dim " +
                     std::to_string(hyper.dim));
  }
  for (const auto& [m, feats] : graph.modality_features) {
    auto it = params.proj.find(m);
    if (it == params.proj.end() || it->second.cols() != feats.cols()) {
      throw ShapeError("checkpoint projection for modality '" + m + "' does not match features");
    }
  }
}

RunResult fit_from_scratch(const InteractionGraph& graph, const DatasetSplit& split,
                           const EdgeList& edges, const TrainConfig& config) {
  const auto start = Clock::now();
  const HyperParams& hyper = config.hyper;
  hyper.validate();
  if (edges.empty()) throw ConfigError("no training interactions");

  const Recommender net(graph, edges, hyper.layers);
  const auto positives = items_by_user(graph.num_users, edges);
  const SeedStreams streams(config.seed);
  Rng batch_rng = streams.stream("batches");
  Rng neg_rng = streams.stream("negatives");

  RunResult result;
  ModelParams params = init_params(graph, hyper, config.seed);
  result.params = params;
  Adam adam(params, hyper.lr);
  EarlyStopper stopper{hyper.patience};
  result.stop_reason = "max_epochs";

  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    int steps = 0;
    for (const EdgeList& chunk : shuffled_batches(edges, hyper.batch_size, batch_rng)) {
      const TripleBatch triples =
          make_triples(chunk, hyper.neg_per_pos, graph.num_items, positives, neg_rng);
      const ForwardPass pass = net.forward(params);
      LossReport rep = preserve_loss(net, params, pass, triples, nodes_of(triples), hyper);
      require_finite(rep, "training");
      adam.step(params, rep.grads);
      loss_sum += rep.combined;
      ++steps;
    }
    const ForwardPass pass = net.forward(params);
    EpochLog log{epoch, loss_sum / std::max(steps, 1),
                 user_metrics(pass.state, split.valid, kStopK, edges, "valid", config.threads).recall,
                 0.0};
    result.history.push_back(log);
    if (config.on_epoch) config.on_epoch(log);
    result.epochs_run = epoch;
    if (stopper.update(log.valid_recall, epoch)) result.params = params;
    if (stopper.exhausted()) {
      result.stop_reason = "patience";
      break;
    }
  }
  result.best_epoch = stopper.best_epoch;
  result.best_valid_recall = stopper.best;
  result.wall_time = seconds_since(start);
  return result;
}

enum class Objective { kCombined, kReverseOnly, kPreserveOnly };

RunResult unlearn_loop(const InteractionGraph& graph, const DatasetSplit& split,
                       const Partition& partition, const ModelParams& initial,
                       const TrainConfig& config, const ModelParams* reference,
                       Objective objective) {
  const auto start = Clock::now();
  const HyperParams& hyper = config.hyper;
  hyper.validate();
  if (partition.forget.empty() && objective != Objective::kPreserveOnly) {
    throw ConfigError("forget set is empty; nothing to unlearn");
  }
  if (partition.retain.empty() && objective != Objective::kReverseOnly) {
    throw ConfigError("retain set is empty");
  }
  check_params_match(graph, initial, hyper);

  // Forgotten interactions are nullified: the convolution only sees D_r.
  const Recommender net(graph, partition.retain, hyper.layers);
  const auto train_pos = items_by_user(graph.num_users, split.train);
  const SeedStreams streams(config.seed);
  Rng batch_rng = streams.stream("batches");
  Rng neg_rng = streams.stream("negatives");
  Rng forget_batch_rng = streams.stream("forget_batches");
  Rng forget_neg_rng = streams.stream("forget_negatives");

  std::vector<ProbeUser> probe;
  std::optional<PropagatedState> reference_state;
  if (reference != nullptr && !partition.forget.empty()) {
    check_params_match(graph, *reference, hyper);
    probe = make_forget_probe(split, partition, config.seed);
    reference_state = net.forward(*reference).state;
  }

  RunResult result;
  result.params = initial;
  ModelParams params = initial;
  Adam adam(params, hyper.lr);
  EarlyStopper stopper{hyper.patience};
  result.stop_reason = "max_epochs";
  const bool uses_retain = objective != Objective::kReverseOnly;
  const bool uses_forget = objective != Objective::kPreserveOnly;

  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    std::vector<EdgeList> retain_batches, forget_batches;
    if (uses_retain) retain_batches = shuffled_batches(partition.retain, hyper.batch_size, batch_rng);
    if (uses_forget) {
      forget_batches = shuffled_batches(partition.forget, hyper.batch_size, forget_batch_rng);
    }
    const std::size_t steps = uses_retain ? retain_batches.size() : forget_batches.size();
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const ForwardPass pass = net.forward(params);
      LossReport rep;
      TripleBatch retain_triples, forget_triples;
      if (uses_retain) {
        retain_triples = make_triples(retain_batches[s], hyper.neg_per_pos, graph.num_items,
                                      train_pos, neg_rng);
      }
      if (uses_forget) {
        forget_triples = make_triples(forget_batches[s % forget_batches.size()],
                                      hyper.neg_per_pos, graph.num_items, train_pos,
                                      forget_neg_rng);
      }
      switch (objective) {
        case Objective::kPreserveOnly:
          rep = preserve_loss(net, params, pass, retain_triples, nodes_of(retain_triples), hyper);
          break;
        case Objective::kReverseOnly:
          rep = reverse_bpr_loss(net, params, pass, forget_triples);
          break;
        case Objective::kCombined:
          rep = unlearning_loss(net, params, pass, retain_triples, nodes_of(retain_triples),
                                forget_triples, nodes_of(forget_triples), hyper);
          break;
      }
      require_finite(rep, "unlearning");
      adam.step(params, rep.grads);
      loss_sum += rep.combined;
    }

    const ForwardPass pass = net.forward(params);
    EpochLog log{epoch, loss_sum / static_cast<double>(std::max<std::size_t>(steps, 1)),
                 user_metrics(pass.state, split.valid, kStopK, partition.retain, "valid",
                              config.threads)
                     .recall,
                 partition.forget.empty() ? 0.5 : forget_auc(pass.state, split, partition)};
    result.history.push_back(log);
    if (config.on_epoch) config.on_epoch(log);
    if (reference_state && !probe.empty()) {
      result.divergence_curve.emplace_back(epoch,
                                           bpr_divergence(pass.state, *reference_state, probe));
    }
    result.epochs_run = epoch;
    if (stopper.update(log.valid_recall, epoch)) result.params = params;
    if (uses_forget && config.stop_at_chance && log.forget_auc <= 0.5) {
      result.params = params;
      result.stop_reason = "forget_at_chance";
      break;
    }
    if (stopper.exhausted()) {
      result.stop_reason = "patience";
      break;
    }
  }
  result.best_epoch = stopper.best_epoch;
  result.best_valid_recall = stopper.best;
  result.wall_time = seconds_since(start);
  return result;
}

void require_mode(const TrainConfig& config, Mode expected) {
  if (config.mode != expected) {
    throw ConfigError(std::string("expected mode ") + to_string(expected) + ", got " +
                      to_string(config.mode));
  }
}

}  // namespace

RunResult train(const InteractionGraph& graph, const DatasetSplit& split,
                const TrainConfig& config) {
  require_mode(config, Mode::kTrain);
  return fit_from_scratch(graph, split, split.train, config);
}

RunResult retrain_gold(const InteractionGraph& graph, const DatasetSplit& split,
                       const Partition& partition, const TrainConfig& config) {
  require_mode(config, Mode::kGold);
  if (partition.retain.empty()) throw ConfigError("retain set is empty");
  return fit_from_scratch(graph, split, partition.retain, config);
}

RunResult unlearn_mmrecun(const InteractionGraph& graph, const DatasetSplit& split,
                          const Partition& partition, const ModelParams& initial,
                          const TrainConfig& config, const ModelParams* reference) {
  require_mode(config, Mode::kMmrecun);
  return unlearn_loop(graph, split, partition, initial, config, reference, Objective::kCombined);
}

RunResult unlearn_amun(const InteractionGraph& graph, const DatasetSplit& split,
                       const Partition& partition, const ModelParams& initial,
                       const TrainConfig& config, const ModelParams* reference) {
  require_mode(config, Mode::kAmun);
  return unlearn_loop(graph, split, partition, initial, config, reference,
                      Objective::kReverseOnly);
}

RunResult fine_tune_retain(const InteractionGraph& graph, const DatasetSplit& split,
                           const Partition& partition, const ModelParams& initial,
                           const TrainConfig& config) {
  return unlearn_loop(graph, split, partition, initial, config, nullptr,
                      Objective::kPreserveOnly);
}

}  // namespace mmrecun
