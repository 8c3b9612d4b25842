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

#include <map>
#include <string>
#include <vector>

#include "mmrecun/graph.hpp"
#include "mmrecun/model.hpp"

namespace mmrecun {

struct RankingMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double ndcg = 0.0;
  double map = 0.0;

  bool operator==(const RankingMetrics&) const = default;
};

enum class View { kUserCentric, kItemCentric };

const char* to_string(View v);
View view_from_string(const std::string& s);

// Top-`k` lists for every user in `users` (others left empty), masking each
// user's items in `mask`. Work is split across `threads` workers; the
// result does not depend on the thread count.
std::vector<std::vector<std::int32_t>> rank_users(const PropagatedState& state,
                                                  const std::vector<std::int32_t>& users, int k,
                                                  const EdgeList& mask, int threads = 1);

// Macro-average over users with nonempty relevance in `eval_edges`.
// `set_name` only labels the error raised when no user qualifies.
RankingMetrics user_metrics(const PropagatedState& state, const EdgeList& eval_edges, int k,
                            const EdgeList& mask, const std::string& set_name = "eval",
                            int threads = 1);

// Macro-average over items with at least one relevant user. Each relevant
// user's list is scored as a retrieval of that one item: recall counts
// users whose top-K contains it, NDCG and AP average 1/log2(r+1) and 1/r
// over relevant users (0 when absent), precision is min(hits, K) / K.
RankingMetrics item_metrics(const PropagatedState& state, const EdgeList& eval_edges, int k,
                            const EdgeList& mask, const std::string& set_name = "eval",
                            int threads = 1);

// Same metrics computed from precomputed rankings (lists at least k long
// where enough candidates exist).
RankingMetrics user_metrics_from_rankings(const std::vector<std::vector<std::int32_t>>& rankings,
                                          const EdgeList& eval_edges, int k,
                                          const std::string& set_name);
RankingMetrics item_metrics_from_rankings(const std::vector<std::vector<std::int32_t>>& rankings,
                                          std::int32_t num_items, const EdgeList& eval_edges,
                                          int k, const std::string& set_name);

struct EvalReport {
  View view = View::kUserCentric;
  // set name ("valid", "test", "forget") -> K -> metrics
  std::map<std::string, std::map<int, RankingMetrics>> sets;

  bool operator==(const EvalReport&) const = default;
};

// Valid and test always; forget when a partition is given. Candidates are
// masked with the retained train edges (all train edges without a partition).
EvalReport evaluate(const PropagatedState& state, const DatasetSplit& split,
                    const Partition* partition, const std::vector<int>& ks, View view,
                    int threads = 1);

// `{view, sets: {name: {K: {recall, precision, ndcg, map}}}}`, 6 decimals.
std::string to_json(const EvalReport& report);
EvalReport parse_eval_report(const std::string& json_text);

// Absolute metric gaps to the gold model: forget -> eps_f, test -> eps_t,
// valid -> eps_v.
struct PropertyGaps {
  View view = View::kUserCentric;
  std::map<int, RankingMetrics> forget;
  std::map<int, RankingMetrics> test;
  std::map<int, RankingMetrics> valid;
};

PropertyGaps property_gaps(const EvalReport& unlearned, const EvalReport& gold);
std::string to_json(const PropertyGaps& gaps);

}  // namespace mmrecun
