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

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mmrecun {

struct Edge {
  std::int32_t user = 0;
  std::int32_t item = 0;

  auto operator<=>(const Edge&) const = default;
};

// Sorted by (user, item), no duplicates. Every function that accepts an
// EdgeList assumes this order; use normalize_edges() on anything built by hand.
using EdgeList = std::vector<Edge>;

void normalize_edges(EdgeList& edges);
bool contains_edge(const EdgeList& sorted_edges, Edge e);
EdgeList edge_difference(const EdgeList& a, const EdgeList& b);
EdgeList edge_union(const EdgeList& a, const EdgeList& b);

// Per-user adjacency lists (item indices ascending) over an edge list.
std::vector<std::vector<std::int32_t>> items_by_user(std::int32_t num_users,
                                                     const EdgeList& edges);
std::vector<std::vector<std::int32_t>> users_by_item(std::int32_t num_items,
                                                     const EdgeList& edges);

// Implicit-feedback interaction data plus frozen per-modality item features.
struct InteractionGraph {
  std::int32_t num_users = 0;
  std::int32_t num_items = 0;
  EdgeList edges;
  // modality id -> num_items x d_m
  std::map<std::string, Eigen::MatrixXd> modality_features;
  // External ids by dense index.
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  std::map<std::string, int> modality_dims() const;
  // Throws DimensionError / DomainError when an invariant is broken.
  void validate() const;
};

// Reads the interaction CSV (`user_id,item_id[,timestamp]`) and the MMFT
// feature files. Indices are assigned by first appearance; duplicate rows
// collapse to one edge.
InteractionGraph load_interactions(
    const std::filesystem::path& path,
    const std::map<std::string, std::filesystem::path>& feature_paths);

// MMFT: "MMFT", u32 rows, u32 cols, rows*cols float32, all little-endian.
Eigen::MatrixXd read_mmft(const std::filesystem::path& path);
void write_mmft(const std::filesystem::path& path, const Eigen::MatrixXd& m);

struct DatasetSplit {
  std::int32_t num_users = 0;
  std::int32_t num_items = 0;
  EdgeList train;
  EdgeList valid;
  EdgeList test;
};

// Per-user 8:1:1 split. Users with n >= 3 edges send max(1, floor(n/10))
// edges to each of valid and test; users with fewer keep everything in
// train.
DatasetSplit split_dataset(const InteractionGraph& graph, std::uint64_t seed);

enum class ForgetKind { kInteraction, kUserPreference, kBiasedItem, kAccount, kLicense };

const char* to_string(ForgetKind kind);
ForgetKind forget_kind_from_string(const std::string& s);
bool is_user_kind(ForgetKind kind);
bool is_item_kind(ForgetKind kind);
bool is_edge_kind(ForgetKind kind);

struct ForgetSpec {
  ForgetKind kind = ForgetKind::kInteraction;
  EdgeList edges;                  // interaction / user_preference
  std::vector<std::int32_t> nodes;  // user indices (account) or item indices
};

// JSON `{"kind": ..., "edges": [["u","i"],...], "users": [...], "items": [...]}`
// with external ids resolved against `graph`.
ForgetSpec load_forget_spec(const std::filesystem::path& path,
                            const InteractionGraph& graph);
ForgetSpec parse_forget_spec(const std::string& json_text,
                             const InteractionGraph& graph);

struct Partition {
  EdgeList retain;
  EdgeList forget;
};

// Forget = listed edges plus every train edge incident to a listed node.
Partition mark_forget(const DatasetSplit& split, const ForgetSpec& spec);

// Symmetric normalized bipartite adjacency over num_users + num_items nodes;
// items occupy rows [num_users, num_users + num_items).
struct NormAdj {
  std::int32_t num_users = 0;
  std::int32_t num_items = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;

  std::int32_t num_nodes() const { return num_users + num_items; }
};

NormAdj build_normalized_adjacency(std::int32_t num_users, std::int32_t num_items,
                                   const EdgeList& edges);

}  // namespace mmrecun
