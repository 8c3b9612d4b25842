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
#include "mmrecun/graph.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mmrecun/errors.hpp"
#include "mmrecun/rng.hpp"

namespace mmrecun {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

void normalize_edges(EdgeList& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

bool contains_edge(const EdgeList& sorted_edges, Edge e) {
  return std::binary_search(sorted_edges.begin(), sorted_edges.end(), e);
}

EdgeList edge_difference(const EdgeList& a, const EdgeList& b) {
  EdgeList out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

EdgeList edge_union(const EdgeList& a, const EdgeList& b) {
  EdgeList out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<std::vector<std::int32_t>> items_by_user(std::int32_t num_users,
                                                     const EdgeList& edges) {
  std::vector<std::vector<std::int32_t>> out(num_users);
  for (const Edge& e : edges) out[e.user].push_back(e.item);
  return out;
}

std::vector<std::vector<std::int32_t>> users_by_item(std::int32_t num_items,
                                                     const EdgeList& edges) {
  std::vector<std::vector<std::int32_t>> out(num_items);
  for (const Edge& e : edges) out[e.item].push_back(e.user);
  return out;
}

std::map<std::string, int> InteractionGraph::modality_dims() const {
  std::map<std::string, int> dims;
  for (const auto& [name, feats] : modality_features) dims[name] = static_cast<int>(feats.cols());
  return dims;
}

void InteractionGraph::validate() const {
  for (const Edge& e : edges) {
    if (e.user < 0 || e.user >= num_users || e.item < 0 || e.item >= num_items) {
      throw DomainError("edge (" + std::to_string(e.user) + "," + std::to_string(e.item) +
                        ") out of range");
    }
  }
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw DomainError("edge list must be sorted and unique");
  }
  for (const auto& [name, feats] : modality_features) {
    if (feats.rows() != num_items) {
      throw DimensionError("modality '" + name + "' has " + std::to_string(feats.rows()) +
                           " rows, expected " + std::to_string(num_items));
    }
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError("truncated file " + path.string());
  }
  return value;
}

}  // namespace

InteractionGraph load_interactions(
    const std::filesystem::path& path,
    const std::map<std::string, std::filesystem::path>& feature_paths) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open interaction file " + path.string());

  InteractionGraph g;
  std::unordered_map<std::string, std::int32_t> user_index, item_index;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      // Tolerate a UTF-8 byte order mark.
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      auto header = split_csv_line(line);
      if (header.size() < 2 || header.size() > 3 || trim(header[0]) != "user_id" ||
          trim(header[1]) != "item_id" || (header.size() == 3 && trim(header[2]) != "timestamp")) {
        throw ParseError("expected header user_id,item_id[,timestamp]", line_no);
      }
      header_seen = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError("expected 2 or 3 fields, got " + std::to_string(fields.size()), line_no);
    }
    std::string user = trim(fields[0]);
    std::string item = trim(fields[1]);
    if (user.empty() || item.empty()) throw ParseError("empty id", line_no);

    auto [uit, unew] = user_index.try_emplace(user, static_cast<std::int32_t>(g.user_ids.size()));
    if (unew) g.user_ids.push_back(user);
    auto [iit, inew] = item_index.try_emplace(item, static_cast<std::int32_t>(g.item_ids.size()));
    if (inew) g.item_ids.push_back(item);
    g.edges.push_back({uit->second, iit->second});
  }
  if (!header_seen) throw ParseError("empty interaction file " + path.string());

  g.num_users = static_cast<std::int32_t>(g.user_ids.size());
  g.num_items = static_cast<std::int32_t>(g.item_ids.size());
  normalize_edges(g.edges);

  for (const auto& [name, fpath] : feature_paths) {
    Eigen::MatrixXd feats = read_mmft(fpath);
    if (feats.rows() != g.num_items) {
      throw DimensionError("feature file " + fpath.string() + " has " +
                           std::to_string(feats.rows()) + " rows but the graph has " +
                           std::to_string(g.num_items) + " items");
    }
    g.modality_features.emplace(name, std::move(feats));
  }
  return g;
}

Eigen::MatrixXd read_mmft(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open feature file " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "MMFT", 4) != 0) {
    throw ParseError("bad MMFT magic in " + path.string());
  }
  auto rows = read_le<std::uint32_t>(in, path);
  auto cols = read_le<std::uint32_t>(in, path);
  std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
  if (!buf.empty() &&
      !in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw ParseError("truncated MMFT payload in " + path.string());
  }
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c)
      m(r, c) = static_cast<double>(buf[static_cast<std::size_t>(r) * cols + c]);
  return m;
}

void write_mmft(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  out.write("MMFT", 4);
  std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float v = static_cast<float>(m(r, c));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
}

DatasetSplit split_dataset(const InteractionGraph& graph, std::uint64_t seed) {
  DatasetSplit split;
  split.num_users = graph.num_users;
  split.num_items = graph.num_items;
  Rng rng = SeedStreams(seed).stream("split");

  auto by_user = items_by_user(graph.num_users, graph.edges);
  for (std::int32_t u = 0; u < graph.num_users; ++u) {
    auto& items = by_user[u];
    const std::size_t n = items.size();
    if (n < 3) {
      for (auto i : items) split.train.push_back({u, i});
      continue;
    }
    std::shuffle(items.begin(), items.end(), rng);
    const std::size_t held = std::max<std::size_t>(1, n / 10);
    for (std::size_t k = 0; k < n; ++k) {
      Edge e{u, items[k]};
      if (k < held) {
        split.test.push_back(e);
      } else if (k < 2 * held) {
        split.valid.push_back(e);
      } else {
        split.train.push_back(e);
      }
    }
  }
  normalize_edges(split.train);
  normalize_edges(split.valid);
  normalize_edges(split.test);
  return split;
}

const char* to_string(ForgetKind kind) {
  switch (kind) {
    case ForgetKind::kInteraction: return "interaction";
    case ForgetKind::kUserPreference: return "user_preference";
    case ForgetKind::kBiasedItem: return "biased_item";
    case ForgetKind::kAccount: return "account";
    case ForgetKind::kLicense: return "license";
  }
  return "?";
}

ForgetKind forget_kind_from_string(const std::string& s) {
  for (auto k : {ForgetKind::kInteraction, ForgetKind::kUserPreference, ForgetKind::kBiasedItem,
                 ForgetKind::kAccount, ForgetKind::kLicense}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown forget kind '" + s + "'");
}

bool is_user_kind(ForgetKind kind) { return kind == ForgetKind::kAccount; }
bool is_item_kind(ForgetKind kind) {
  return kind == ForgetKind::kBiasedItem || kind == ForgetKind::kLicense;
}
bool is_edge_kind(ForgetKind kind) {
  return kind == ForgetKind::kInteraction || kind == ForgetKind::kUserPreference;
}

ForgetSpec parse_forget_spec(const std::string& json_text, const InteractionGraph& graph) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("forget spec: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("kind")) {
    throw ParseError("forget spec must be an object with a \"kind\" field");
  }
  ForgetSpec spec;
  spec.kind = forget_kind_from_string(doc.at("kind").get<std::string>());

  std::unordered_map<std::string, std::int32_t> uidx, iidx;
  for (std::int32_t u = 0; u < graph.num_users; ++u) uidx.emplace(graph.user_ids[u], u);
  for (std::int32_t i = 0; i < graph.num_items; ++i) iidx.emplace(graph.item_ids[i], i);
  auto lookup = [](const auto& index, const std::string& id, const char* what) {
    auto it = index.find(id);
    if (it == index.end()) throw NotFoundError(std::string("unknown ") + what + " id '" + id + "'");
    return it->second;
  };

  auto list = [&](const char* key) {
    return doc.contains(key) ? doc.at(key) : nlohmann::json::array();
  };
  const auto edges = list("edges");
  const auto users = list("users");
  const auto items = list("items");
  try {
    if (is_edge_kind(spec.kind)) {
      if (!users.empty() || !items.empty()) {
        throw ConfigError(std::string(to_string(spec.kind)) + " requests take \"edges\" only");
      }
      for (const auto& pair : edges) {
        if (!pair.is_array() || pair.size() != 2) throw ParseError("edges must be [user, item] pairs");
        spec.edges.push_back({lookup(uidx, pair[0].get<std::string>(), "user"),
                              lookup(iidx, pair[1].get<std::string>(), "item")});
      }
      normalize_edges(spec.edges);
    } else if (is_user_kind(spec.kind)) {
      if (!edges.empty() || !items.empty()) throw ConfigError("account requests take \"users\" only");
      for (const auto& id : users) spec.nodes.push_back(lookup(uidx, id.get<std::string>(), "user"));
    } else {
      if (!edges.empty() || !users.empty()) {
        throw ConfigError(std::string(to_string(spec.kind)) + " requests take \"items\" only");
      }
      for (const auto& id : items) spec.nodes.push_back(lookup(iidx, id.get<std::string>(), "item"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("forget spec: ") + e.what());
  }
  std::sort(spec.nodes.begin(), spec.nodes.end());
  spec.nodes.erase(std::unique(spec.nodes.begin(), spec.nodes.end()), spec.nodes.end());
  return spec;
}

ForgetSpec load_forget_spec(const std::filesystem::path& path, const InteractionGraph& graph) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open forget spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_forget_spec(ss.str(), graph);
}

Partition mark_forget(const DatasetSplit& split, const ForgetSpec& spec) {
  Partition p;
  if (is_edge_kind(spec.kind)) {
    if (spec.edges.empty()) throw ConfigError("forget spec has no target edges");
    for (const Edge& e : spec.edges) {
      if (!contains_edge(split.train, e)) {
        throw NotFoundError("forget edge (" + std::to_string(e.user) + "," +
                            std::to_string(e.item) + ") is not a training interaction");
      }
    }
    p.forget = spec.edges;
    normalize_edges(p.forget);
  } else {
    if (spec.nodes.empty()) throw ConfigError("forget spec has no target nodes");
    const bool users = is_user_kind(spec.kind);
    const std::int32_t bound = users ? split.num_users : split.num_items;
    std::vector<char> marked(static_cast<std::size_t>(bound), 0);
    for (auto n : spec.nodes) {
      if (n < 0 || n >= bound) {
        throw NotFoundError(std::string(users ? "user" : "item") + " index " + std::to_string(n) +
                            " out of range");
      }
      marked[n] = 1;
    }
    for (const Edge& e : split.train) {
      if (marked[users ? e.user : e.item]) p.forget.push_back(e);
    }
  }
  p.retain = edge_difference(split.train, p.forget);
  return p;
}

NormAdj build_normalized_adjacency(std::int32_t num_users, std::int32_t num_items,
                                   const EdgeList& edges) {
  NormAdj adj;
  adj.num_users = num_users;
  adj.num_items = num_items;
  std::vector<double> degree(static_cast<std::size_t>(num_users + num_items), 0.0);
  for (const Edge& e : edges) {
    degree[e.user] += 1.0;
    degree[num_users + e.item] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    const std::int32_t a = e.user;
    const std::int32_t b = num_users + e.item;
    const double w = 1.0 / std::sqrt(degree[a] * degree[b]);
    triplets.emplace_back(a, b, w);
    triplets.emplace_back(b, a, w);
  }
  adj.matrix.resize(num_users + num_items, num_users + num_items);
  adj.matrix.setFromTriplets(triplets.begin(), triplets.end());
  adj.matrix.makeCompressed();
  return adj;
}

}  // namespace mmrecun
