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
#include "mmrecun/synth.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "mmrecun/errors.hpp"
#include "mmrecun/rng.hpp"

namespace mmrecun {

namespace {

std::string modality_name(int m, int total) {
  if (total <= 2) return m == 0 ? "visual" : "textual";
  return "m" + std::to_string(m);
}

}  // namespace

InteractionGraph generate_synthetic(const SynthOptions& o) {
  if (o.users < 1 || o.items < 1) throw ConfigError("synth: need at least one user and item");
  if (!(o.density > 0.0 && o.density <= 1.0)) throw ConfigError("synth: density must be in (0, 1]");
  if (o.groups < 1) throw ConfigError("synth: groups must be >= 1");
  if (o.modalities < 0) throw ConfigError("synth: modalities must be >= 0");
  if (!(o.affinity >= 1.0)) throw ConfigError("synth: affinity must be >= 1");

  const SeedStreams streams(o.seed);
  Rng rng = streams.stream("synth/edges");
  std::uniform_int_distribution<int> group(0, o.groups - 1);
  std::vector<int> user_group(o.users), item_group(o.items);
  for (auto& g : user_group) g = group(rng);
  for (auto& g : item_group) g = group(rng);

  std::vector<long> users_in(o.groups, 0), items_in(o.groups, 0);
  for (int g : user_group) ++users_in[g];
  for (int g : item_group) ++items_in[g];
  double within = 0.0;
  for (int g = 0; g < o.groups; ++g) within += static_cast<double>(users_in[g] * items_in[g]);
  within /= static_cast<double>(o.users) * static_cast<double>(o.items);

  const double p_out = o.density / (o.affinity * within + (1.0 - within));
  const double p_in = o.affinity * p_out;
  if (p_in > 1.0) {
    throw ConfigError("synth: density " + std::to_string(o.density) +
                      " is infeasible with affinity " + std::to_string(o.affinity));
  }

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::vector<int>> by_user(o.users);
  std::vector<int> item_degree(o.items, 0);
  for (int u = 0; u < o.users; ++u) {
    for (int i = 0; i < o.items; ++i) {
      if (coin(rng) < (user_group[u] == item_group[i] ? p_in : p_out)) {
        by_user[u].push_back(i);
        ++item_degree[i];
      }
    }
  }
  // Every node needs at least one interaction to exist in the CSV.
  auto pick_from_group = [&](const std::vector<int>& groups_of, int g, int n) {
    std::vector<int> pool;
    for (int k = 0; k < n; ++k)
      if (groups_of[k] == g) pool.push_back(k);
    if (pool.empty()) {
      pool.resize(n);
      for (int k = 0; k < n; ++k) pool[k] = k;
    }
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  };
  for (int u = 0; u < o.users; ++u) {
    if (by_user[u].empty()) {
      const int i = pick_from_group(item_group, user_group[u], o.items);
      by_user[u].push_back(i);
      ++item_degree[i];
    }
  }
  for (int i = 0; i < o.items; ++i) {
    if (item_degree[i] == 0) {
      const int u = pick_from_group(user_group, item_group[i], o.users);
      by_user[u].push_back(i);
      std::sort(by_user[u].begin(), by_user[u].end());
      ++item_degree[i];
    }
  }

  // Rows are written user-major in ascending generator order, so item
  // indices follow first appearance in that order.
  InteractionGraph g;
  g.num_users = o.users;
  g.num_items = o.items;
  std::vector<int> item_index(o.items, -1);
  std::vector<int> original_item;
  for (int u = 0; u < o.users; ++u) {
    g.user_ids.push_back("u" + std::to_string(u));
    for (int i : by_user[u]) {
      if (item_index[i] < 0) {
        item_index[i] = static_cast<int>(original_item.size());
        original_item.push_back(i);
        g.item_ids.push_back("i" + std::to_string(i));
      }
      g.edges.push_back({u, item_index[i]});
    }
  }
  normalize_edges(g.edges);

  Rng feat_rng = streams.stream("synth/features");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int m = 0; m < o.modalities; ++m) {
    const int dim = std::max(4, o.feature_dim - 8 * m);
    Eigen::MatrixXd centroids(o.groups, dim);
    for (Eigen::Index k = 0; k < centroids.size(); ++k) centroids.data()[k] = normal(feat_rng);
    Eigen::MatrixXd feats(o.items, dim);
    for (int idx = 0; idx < o.items; ++idx) {
      const int i = original_item[idx];
      for (int c = 0; c < dim; ++c) {
        feats(idx, c) = centroids(item_group[i], c) + o.feature_noise * normal(feat_rng);
      }
    }
    // Round through float32 so the in-memory graph equals a reload.
    feats = feats.cast<float>().cast<double>();
    g.modality_features.emplace(modality_name(m, o.modalities), std::move(feats));
  }
  return g;
}

void write_synthetic_dataset(const InteractionGraph& graph, const SynthOptions& o,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "interactions.csv");
    if (!csv) throw FileError("cannot write " + (dir / "interactions.csv").string());
    csv << "user_id,item_id\n";
    for (const Edge& e : graph.edges) {
      csv << graph.user_ids[e.user] << ',' << graph.item_ids[e.item] << '\n';
    }
  }
  nlohmann::ordered_json manifest;
  manifest["interactions"] = "interactions.csv";
  manifest["num_users"] = graph.num_users;
  manifest["num_items"] = graph.num_items;
  manifest["num_edges"] = graph.edges.size();
  manifest["density"] = o.density;
  manifest["groups"] = o.groups;
  manifest["affinity"] = o.affinity;
  manifest["seed"] = o.seed;
  manifest["features"] = nlohmann::ordered_json::object();
  for (const auto& [name, feats] : graph.modality_features) {
    write_mmft(dir / (name + ".mmft"), feats);
    manifest["features"][name] = name + ".mmft";
  }
  {
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  std::ofstream cfg(dir / "experiment.cfg");
  cfg << "# generated by `mmrecun synth`\n";
  cfg << "interactions = " << (dir / "interactions.csv").string() << '\n';
  for (const auto& [name, feats] : graph.modality_features) {
    cfg << "feature." << name << " = " << (dir / (name + ".mmft")).string() << '\n';
  }
  cfg << "seed = " << o.seed << '\n';
}

}  // namespace mmrecun
