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
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmrecun/graph.hpp"
#include "mmrecun/losses.hpp"
#include "mmrecun/model.hpp"
#include "mmrecun/rng.hpp"

namespace mmrecun {

enum class Mode { kTrain, kGold, kAmun, kMmrecun };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
class Adam {
 public:
  Adam(const ModelParams& like, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(ModelParams& params, const ModelParams& grads);
  int steps_taken() const { return t_; }

 private:
  ModelParams m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;          // mean objective over the epoch's steps
  double valid_recall = 0.0;  // Recall@20 on the validation edges
  double forget_auc = 0.0;    // unlearning runs only
};

struct TrainConfig {
  HyperParams hyper;
  std::uint64_t seed = 0;
  Mode mode = Mode::kTrain;
  int threads = 1;
  // Opt-in: unlearning runs also stop, keeping the current state, once forget
  // interactions rank no better than unobserved items (forget AUC <= 0.5).
  bool stop_at_chance = false;
  std::function<void(const EpochLog&)> on_epoch;
};

struct RunResult {
  ModelParams params;
  int epochs_run = 0;
  double wall_time = 0.0;  // seconds
  std::vector<std::pair<int, double>> divergence_curve;  // (epoch, beta)
  std::string stop_reason;
  int best_epoch = 0;
  double best_valid_recall = 0.0;
  std::vector<EpochLog> history;
};

inline constexpr int kStopK = 20;
inline constexpr int kProbeNegatives = 100;

// `count` distinct items drawn uniformly from [0, num_items) minus the sorted
// `exclusions`; all candidates when fewer than `count` remain.
std::vector<std::int32_t> sample_negatives(std::int32_t num_items, int count,
                                           const std::vector<std::int32_t>& exclusions, Rng& rng);

// One positive per edge, `neg_per_pos` negatives each, none of which is a
// positive in `positives_by_user`.
TripleBatch make_triples(const EdgeList& edges, int neg_per_pos, std::int32_t num_items,
                         const std::vector<std::vector<std::int32_t>>& positives_by_user,
                         Rng& rng);

// Full objective (BPR + contrastive + L2) on the train edges; returns the
// best-validation checkpoint.
RunResult train(const InteractionGraph& graph, const DatasetSplit& split,
                const TrainConfig& config);

// `train` from scratch with the retain edges in place of the train edges.
RunResult retrain_gold(const InteractionGraph& graph, const DatasetSplit& split,
                       const Partition& partition, const TrainConfig& config);

// Steps on alpha * preserve + (1 - alpha) * impair, starting from `initial`,
// and returns the best-validation checkpoint (`initial` if no epoch ran).
// When `reference` is given, the BPR divergence to it on the forget probe is
// logged after every epoch.
RunResult unlearn_mmrecun(const InteractionGraph& graph, const DatasetSplit& split,
                          const Partition& partition, const ModelParams& initial,
                          const TrainConfig& config, const ModelParams* reference = nullptr);

// Reverse-BPR steps on the forget edges only.
RunResult unlearn_amun(const InteractionGraph& graph, const DatasetSplit& split,
                       const Partition& partition, const ModelParams& initial,
                       const TrainConfig& config, const ModelParams* reference = nullptr);

// Preserve-only steps on the retain edges from `initial`: the alpha = 1
// limit of unlearn_mmrecun.
RunResult fine_tune_retain(const InteractionGraph& graph, const DatasetSplit& split,
                           const Partition& partition, const ModelParams& initial,
                           const TrainConfig& config);

// Forget probe: each user of the forget set with its forget items as
// positives and kProbeNegatives non-train items as negatives.
std::vector<ProbeUser> make_forget_probe(const DatasetSplit& split, const Partition& partition,
                                         std::uint64_t seed);

// Mean over forget edges of the fraction of the user's non-train items that
// score below the forgotten item (ties count one half). 0.5 is chance.
double forget_auc(const PropagatedState& state, const DatasetSplit& split,
                  const Partition& partition);

}  // namespace mmrecun
