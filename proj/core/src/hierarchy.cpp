// Copyright 2026 The hgt Authors.
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

#include "hgt/hierarchy.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "hgt/error.hpp"

namespace hgt {

std::vector<std::size_t> Taxonomy::level_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(names.size());
  for (const auto& level : names) sizes.push_back(level.size());
  return sizes;
}

std::size_t Taxonomy::node_count() const {
  std::size_t total = 0;
  for (const auto& level : names) total += level.size();
  return total;
}

void Taxonomy::validate() const {
  if (names.empty()) throw ValidationError("taxonomy has no levels");
  if (parent_of.size() != names.size()) {
    throw ValidationError("parent table covers " + std::to_string(parent_of.size()) +
                          " levels, expected " + std::to_string(names.size()));
  }
  for (std::size_t level = 0; level < names.size(); ++level) {
    if (names[level].empty()) {
      throw ValidationError("level " + std::to_string(level + 1) + " has no classes");
    }
    std::vector<std::string_view> sorted(names[level].begin(), names[level].end());
    std::sort(sorted.begin(), sorted.end());
    if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end()) {
      throw ValidationError("duplicate class name '" + std::string(*dup) + "' on level " +
                            std::to_string(level + 1));
    }
    if (level == 0) {
      if (!parent_of[0].empty()) throw ValidationError("level 1 nodes cannot have parents");
      continue;
    }
    if (parent_of[level].size() != names[level].size()) {
      throw ValidationError("parent table size mismatch on level " + std::to_string(level + 1));
    }
    for (std::size_t p : parent_of[level]) {
      if (p >= names[level - 1].size()) {
        throw ValidationError("parent index out of range on level " + std::to_string(level + 1));
      }
    }
  }
  for (std::size_t level = 0; level + 1 < names.size(); ++level) {
    std::vector<bool> has_child(names[level].size(), false);
    for (std::size_t p : parent_of[level + 1]) has_child[p] = true;
    for (std::size_t i = 0; i < has_child.size(); ++i) {
      if (!has_child[i]) {
        throw ValidationError("class '" + names[level][i] + "' on level " +
                              std::to_string(level + 1) + " has no children");
      }
    }
  }
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      parts.push_back(line.substr(pos));
      break;
    }
    parts.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

bool parse_uint(std::string_view s, std::size_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct RawNode {
  std::size_t level;
  std::string name;
  std::string parent;
  std::size_t line;
};

}  // namespace

Taxonomy parse_taxonomy(std::string_view text) {
  std::size_t declared_levels = 0;
  bool llm = false;
  std::vector<RawNode> nodes;

  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      if (body.starts_with("levels")) {
        std::size_t h = 0;
        if (!parse_uint(body.substr(6), h) || h == 0) {
          throw ParseError("line " + std::to_string(line_no) + ": malformed #levels header");
        }
        if (declared_levels != 0) {
          throw ParseError("line " + std::to_string(line_no) + ": duplicate #levels header");
        }
        declared_levels = h;
      } else if (body.starts_with("source")) {
        std::string_view value = trim(body.substr(6));
        if (value == "llm") {
          llm = true;
        } else if (value != "ground_truth" && value != "gt") {
          throw ParseError("line " + std::to_string(line_no) + ": unknown #source '" +
                           std::string(value) + "'");
        }
      }
      continue;
    }
    if (declared_levels == 0) {
      throw ParseError("line " + std::to_string(line_no) + ": node before #levels header");
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    std::size_t level = 0;
    if (!parse_uint(fields[0], level)) {
      throw ParseError("line " + std::to_string(line_no) + ": level is not an integer");
    }
    const std::string_view name = trim(fields[1]);
    const std::string_view parent = trim(fields[2]);
    if (name.empty() || parent.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty name or parent field");
    }
    nodes.push_back({level, std::string(name), std::string(parent), line_no});
  }
  if (declared_levels == 0) throw ParseError("missing #levels header");

  Taxonomy t;
  t.source = llm ? TaxonomySource::llm_generated : TaxonomySource::ground_truth;
  t.names.resize(declared_levels);
  t.parent_of.resize(declared_levels);
  std::vector<std::map<std::string, std::size_t, std::less<>>> index(declared_levels);

  for (const RawNode& n : nodes) {
    if (n.level < 1 || n.level > declared_levels) {
      throw ValidationError("line " + std::to_string(n.line) + ": level " + std::to_string(n.level) +
                            " outside 1.." + std::to_string(declared_levels));
    }
    const std::size_t level = n.level - 1;
    auto [it, inserted] = index[level].emplace(n.name, t.names[level].size());
    if (!inserted) {
      throw ValidationError("line " + std::to_string(n.line) + ": duplicate class name '" + n.name +
                            "' on level " + std::to_string(n.level));
    }
    t.names[level].push_back(n.name);
  }
  for (const RawNode& n : nodes) {
    const std::size_t level = n.level - 1;
    if (level == 0) {
      if (n.parent != "-") {
        throw ValidationError("line " + std::to_string(n.line) + ": level-1 class '" + n.name +
                              "' must use '-' as parent");
      }
      continue;
    }
    auto it = index[level - 1].find(n.parent);
    if (it == index[level - 1].end()) {
      throw ValidationError("line " + std::to_string(n.line) + ": orphan class '" + n.name +
                            "' references unknown parent '" + n.parent + "' on level " +
                            std::to_string(n.level - 1));
    }
    t.parent_of[level].push_back(it->second);
  }
  t.validate();
  return t;
}

std::string serialize_taxonomy(const Taxonomy& t) {
  std::ostringstream out;
  out << "#levels " << t.levels() << '\n';
  if (t.source == TaxonomySource::llm_generated) out << "#source llm\n";
  for (std::size_t level = 0; level < t.levels(); ++level) {
    for (std::size_t i = 0; i < t.names[level].size(); ++i) {
      out << (level + 1) << '\t' << t.names[level][i] << '\t'
          << (level == 0 ? std::string("-") : t.names[level - 1][t.parent_of[level][i]]) << '\n';
    }
  }
  return out.str();
}

Taxonomy load_taxonomy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open taxonomy file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_taxonomy(buf.str());
}

void save_taxonomy(const std::string& path, const Taxonomy& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write taxonomy file '" + path + "'");
  out << serialize_taxonomy(t);
  if (!out) throw IOError("write failed for '" + path + "'");
}

Adjacency Adjacency::from_edges(std::size_t node_count,
                                const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Adjacency a(node_count);
  for (auto [u, v] : edges) {
    if (u >= node_count || v >= node_count) throw ValidationError("edge endpoint out of range");
    if (u == v) throw ValidationError("self-loops are not stored in the adjacency");
    a.neighbors_[u].push_back(v);
    a.neighbors_[v].push_back(u);
  }
  for (auto& list : a.neighbors_) {
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
      throw ValidationError("duplicate edge");
    }
  }
  a.edge_count_ = edges.size();
  return a;
}

bool Adjacency::connected(std::size_t a, std::size_t b) const {
  const auto& list = neighbors_.at(a);
  return std::binary_search(list.begin(), list.end(), b);
}

std::vector<std::uint8_t> Adjacency::dense() const {
  const std::size_t n = node_count();
  std::vector<std::uint8_t> out(n * n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u : neighbors_[v]) out[v * n + u] = 1;
  }
  return out;
}

HierGraph build_graph(const Taxonomy& t) {
  t.validate();
  HierGraph g;
  std::size_t start = 0;
  for (std::size_t level = 0; level < t.levels(); ++level) {
    g.level_ranges.push_back({start, t.level_size(level)});
    start += t.level_size(level);
  }
  const std::size_t k = start;
  g.level_of.resize(k);
  g.parent.assign(k, HierGraph::npos);
  g.children.resize(k);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(k);
  for (std::size_t level = 0; level < t.levels(); ++level) {
    for (std::size_t i = 0; i < t.level_size(level); ++i) {
      const std::size_t node = g.node_id(level, i);
      g.level_of[node] = level;
      if (level == 0) continue;
      const std::size_t parent = g.node_id(level - 1, t.parent_of[level][i]);
      g.parent[node] = parent;
      g.children[parent].push_back(node);
      edges.emplace_back(parent, node);
    }
  }
  g.adjacency = Adjacency::from_edges(k, edges);
  return g;
}

LevelRange level_slice(const HierGraph& g, std::size_t level) {
  if (level >= g.levels()) {
    throw IndexError("level " + std::to_string(level) + " out of range for a " +
                     std::to_string(g.levels()) + "-level hierarchy");
  }
  return g.level_ranges[level];
}

std::vector<std::uint32_t> ancestor_path(const HierGraph& g, std::size_t leaf_index) {
  const LevelRange& leaves = g.leaf_range();
  if (leaf_index >= leaves.size) throw IndexError("leaf index out of range");
  std::vector<std::uint32_t> path(g.levels());
  std::size_t node = leaves.start + leaf_index;
  for (std::size_t level = g.levels(); level-- > 0;) {
    path[level] = static_cast<std::uint32_t>(node - g.level_ranges[level].start);
    node = g.parent[node];
  }
  return path;
}

}  // namespace hgt
