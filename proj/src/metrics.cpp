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
#include "mmrecun/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "mmrecun/errors.hpp"

namespace mmrecun {

const char* to_string(View v) {
  return v == View::kUserCentric ? "user_centric" : "item_centric";
}

View view_from_string(const std::string& s) {
  if (s == "user_centric" || s == "user") return View::kUserCentric;
  if (s == "item_centric" || s == "item") return View::kItemCentric;
  throw ConfigError("unknown view '" + s + "'");
}

std::vector<std::vector<std::int32_t>> rank_users(const PropagatedState& state,
                                                  const std::vector<std::int32_t>& users, int k,
                                                  const EdgeList& mask, int threads) {
  std::vector<std::vector<std::int32_t>> out(static_cast<std::size_t>(state.user_final.rows()));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) out[users[j]] = recommend_topk(state, users[j], k, mask);
  };
  const std::size_t n = users.size();
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  for (auto& t : pool) t.join();
  return out;
}

namespace {

std::vector<std::int32_t> distinct_users(const EdgeList& edges) {
  std::vector<std::int32_t> users;
  for (const Edge& e : edges)
    if (users.empty() || users.back() != e.user) users.push_back(e.user);
  return users;
}

double log2_discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

}  // namespace

RankingMetrics user_metrics_from_rankings(const std::vector<std::vector<std::int32_t>>& rankings,
                                          const EdgeList& eval_edges, int k,
                                          const std::string& set_name) {
  if (k < 1) throw DomainError("K must be >= 1");
  RankingMetrics sum;
  std::size_t qualifying = 0;
  auto it = eval_edges.begin();
  while (it != eval_edges.end()) {
    const std::int32_t u = it->user;
    std::vector<std::int32_t> relevant;
    for (; it != eval_edges.end() && it->user == u; ++it) relevant.push_back(it->item);
    const auto& list = rankings[u];
    const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), list.size());

    std::size_t hits = 0;
    double dcg = 0.0, ap = 0.0;
    for (std::size_t r = 0; r < depth; ++r) {
      if (std::binary_search(relevant.begin(), relevant.end(), list[r])) {
        ++hits;
        dcg += log2_discount(r + 1);
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    const std::size_t ideal = std::min<std::size_t>(relevant.size(), static_cast<std::size_t>(k));
    double idcg = 0.0;
    for (std::size_t r = 0; r < ideal; ++r) idcg += log2_discount(r + 1);

    sum.recall += static_cast<double>(hits) / static_cast<double>(relevant.size());
    sum.precision += static_cast<double>(hits) / static_cast<double>(k);
    sum.ndcg += dcg / idcg;
    sum.map += ap / static_cast<double>(ideal);
    ++qualifying;
  }
  if (qualifying == 0) throw DomainError("no user has relevant items in set '" + set_name + "'");
  const auto n = static_cast<double>(qualifying);
  return {sum.recall / n, sum.precision / n, sum.ndcg / n, sum.map / n};
}

RankingMetrics item_metrics_from_rankings(const std::vector<std::vector<std::int32_t>>& rankings,
                                          std::int32_t num_items, const EdgeList& eval_edges,
                                          int k, const std::string& set_name) {
  if (k < 1) throw DomainError("K must be >= 1");
  const auto relevant_users = users_by_item(num_items, eval_edges);
  RankingMetrics sum;
  std::size_t qualifying = 0;
  for (std::int32_t i = 0; i < num_items; ++i) {
    const auto& users = relevant_users[i];
    if (users.empty()) continue;
    std::size_t hits = 0;
    double dcg = 0.0, ap = 0.0;
    for (auto u : users) {
      const auto& list = rankings[u];
      const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), list.size());
      for (std::size_t r = 0; r < depth; ++r) {
        if (list[r] == i) {
          ++hits;
          dcg += log2_discount(r + 1);
          ap += 1.0 / static_cast<double>(r + 1);
          break;
        }
      }
    }
    const auto n = static_cast<double>(users.size());
    sum.recall += static_cast<double>(hits) / n;
    // At most K rank slots can hold the item.
    sum.precision += static_cast<double>(std::min<std::size_t>(hits, static_cast<std::size_t>(k))) /
                     static_cast<double>(k);
    sum.ndcg += dcg / n;
    sum.map += ap / n;
    ++qualifying;
  }
  if (qualifying == 0) throw DomainError("no item has relevant users in set '" + set_name + "'");
  const auto n = static_cast<double>(qualifying);
  return {sum.recall / n, sum.precision / n, sum.ndcg / n, sum.map / n};
}

RankingMetrics user_metrics(const PropagatedState& state, const EdgeList& eval_edges, int k,
                            const EdgeList& mask, const std::string& set_name, int threads) {
  if (k < 1) throw DomainError("K must be >= 1");
  return user_metrics_from_rankings(rank_users(state, distinct_users(eval_edges), k, mask, threads),
                                    eval_edges, k, set_name);
}

RankingMetrics item_metrics(const PropagatedState& state, const EdgeList& eval_edges, int k,
                            const EdgeList& mask, const std::string& set_name, int threads) {
  if (k < 1) throw DomainError("K must be >= 1");
  return item_metrics_from_rankings(rank_users(state, distinct_users(eval_edges), k, mask, threads),
                                    static_cast<std::int32_t>(state.item_final.rows()), eval_edges,
                                    k, set_name);
}

EvalReport evaluate(const PropagatedState& state, const DatasetSplit& split,
                    const Partition* partition, const std::vector<int>& ks, View view,
                    int threads) {
  if (ks.empty()) throw DomainError("evaluate: no K values");
  const EdgeList& mask = partition != nullptr ? partition->retain : split.train;
  const int max_k = *std::max_element(ks.begin(), ks.end());
  if (max_k < 1) throw DomainError("K must be >= 1");

  std::vector<std::pair<std::string, const EdgeList*>> sets{{"valid", &split.valid},
                                                            {"test", &split.test}};
  if (partition != nullptr) sets.emplace_back("forget", &partition->forget);

  EvalReport report;
  report.view = view;
  for (const auto& [name, edges] : sets) {
    const auto rankings = rank_users(state, distinct_users(*edges), max_k, mask, threads);
    auto& per_k = report.sets[name];
    for (int k : ks) {
      per_k[k] = view == View::kUserCentric
                     ? user_metrics_from_rankings(rankings, *edges, k, name)
                     : item_metrics_from_rankings(rankings, split.num_items, *edges, k, name);
    }
  }
  return report;
}

namespace {

void append_metrics_json(std::ostringstream& out, const std::map<int, RankingMetrics>& per_k) {
  out << '{';
  bool first = true;
  for (const auto& [k, m] : per_k) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "\"%d\": {\"recall\": %.6f, \"precision\": %.6f, \"ndcg\": %.6f, \"map\": %.6f}",
                  k, m.recall, m.precision, m.ndcg, m.map);
    out << (first ? "" : ", ") << buf;
    first = false;
  }
  out << '}';
}

void append_sets_json(std::ostringstream& out,
                      const std::vector<std::pair<std::string, const std::map<int, RankingMetrics>*>>& sets) {
  out << '{';
  bool first = true;
  for (const auto& [name, per_k] : sets) {
    out << (first ? "" : ", ") << '"' << name << "\": ";
    append_metrics_json(out, *per_k);
    first = false;
  }
  out << '}';
}

}  // namespace

std::string to_json(const EvalReport& report) {
  std::ostringstream out;
  out << "{\"view\": \"" << to_string(report.view) << "\", \"sets\": ";
  std::vector<std::pair<std::string, const std::map<int, RankingMetrics>*>> sets;
  for (const char* name : {"valid", "test", "forget"}) {
    auto it = report.sets.find(name);
    if (it != report.sets.end()) sets.emplace_back(name, &it->second);
  }
  append_sets_json(out, sets);
  out << "}\n";
  return out.str();
}

EvalReport parse_eval_report(const std::string& json_text) {
  EvalReport report;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    report.view = view_from_string(doc.at("view").get<std::string>());
    for (const auto& [name, per_k] : doc.at("sets").items()) {
      auto& dst = report.sets[name];
      for (const auto& [k, m] : per_k.items()) {
        dst[std::stoi(k)] = {m.at("recall").get<double>(), m.at("precision").get<double>(),
                             m.at("ndcg").get<double>(), m.at("map").get<double>()};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("eval report: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("eval report: K keys must be integers");
  }
  return report;
}

PropertyGaps property_gaps(const EvalReport& unlearned, const EvalReport& gold) {
  if (unlearned.view != gold.view) throw ShapeError("property_gaps: reports use different views");
  auto shape = [](const EvalReport& r) {
    std::vector<std::pair<std::string, std::vector<int>>> s;
    for (const auto& [name, per_k] : r.sets) {
      std::vector<int> ks;
      for (const auto& kv : per_k) ks.push_back(kv.first);
      s.emplace_back(name, ks);
    }
    return s;
  };
  if (shape(unlearned) != shape(gold)) {
    throw ShapeError("property_gaps: reports cover different sets or K values");
  }
  PropertyGaps gaps;
  gaps.view = unlearned.view;
  for (const auto& [name, per_k] : unlearned.sets) {
    std::map<int, RankingMetrics>* dst = name == "forget" ? &gaps.forget
                                         : name == "test" ? &gaps.test
                                         : name == "valid" ? &gaps.valid
                                                           : nullptr;
    if (dst == nullptr) throw ShapeError("property_gaps: unknown set '" + name + "'");
    for (const auto& [k, m] : per_k) {
      const RankingMetrics& g = gold.sets.at(name).at(k);
      (*dst)[k] = {std::abs(m.recall - g.recall), std::abs(m.precision - g.precision),
                   std::abs(m.ndcg - g.ndcg), std::abs(m.map - g.map)};
    }
  }
  return gaps;
}

std::string to_json(const PropertyGaps& gaps) {
  std::ostringstream out;
  out << "{\"view\": \"" << to_string(gaps.view) << "\", \"gaps\": ";
  std::vector<std::pair<std::string, const std::map<int, RankingMetrics>*>> sets;
  if (!gaps.forget.empty()) sets.emplace_back("eps_f", &gaps.forget);
  sets.emplace_back("eps_t", &gaps.test);
  sets.emplace_back("eps_v", &gaps.valid);
  append_sets_json(out, sets);
  out << "}\n";
  return out.str();
}

}  // namespace mmrecun
