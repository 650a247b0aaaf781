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

// Class taxonomies and the hierarchy graph built from them.
//
// A taxonomy has h levels, coarse (level 0) to fine (level h-1). Every node
// below level 0 has exactly one parent on the level above, and every node
// above the last level has at least one child, so all leaves sit on the last
// level. Flattened node ids are level-major, file order within a level.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hgt {

enum class TaxonomySource { ground_truth, llm_generated };

struct Taxonomy {
  // names[level][i]: class name of the i-th node on `level`.
  std::vector<std::vector<std::string>> names;
  // parent_of[level][i]: index on level-1 of the parent; empty for level 0.
  std::vector<std::vector<std::size_t>> parent_of;
  TaxonomySource source = TaxonomySource::ground_truth;

  std::size_t levels() const { return names.size(); }
  std::size_t level_size(std::size_t level) const { return names.at(level).size(); }
  std::vector<std::size_t> level_sizes() const;
  std::size_t node_count() const;

  // Throws ValidationError when any structural invariant is broken.
  void validate() const;

  friend bool operator==(const Taxonomy&, const Taxonomy&) = default;
};

// Parses the line-oriented taxonomy format:
//
//   #levels <h>
//   #source llm            (optional)
//   <level>\t<name>\t<parent-name or ->
//
// Levels in the file are 1-based. Other lines starting with '#' are comments.
Taxonomy parse_taxonomy(std::string_view text);
std::string serialize_taxonomy(const Taxonomy& t);

Taxonomy load_taxonomy(const std::string& path);
void save_taxonomy(const std::string& path, const Taxonomy& t);

// Undirected simple graph stored as sorted neighbor lists.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(std::size_t node_count) : neighbors_(node_count) {}

  // Builds from an undirected edge list. Rejects self-loops, duplicate edges
  // and out-of-range endpoints (ValidationError).
  static Adjacency from_edges(std::size_t node_count,
                              const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t node_count() const { return neighbors_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return neighbors_[v]; }
  std::size_t degree(std::size_t v) const { return neighbors_[v].size(); }
  bool connected(std::size_t a, std::size_t b) const;

  // Dense 0/1 matrix, row-major, node_count^2 entries.
  std::vector<std::uint8_t> dense() const;

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
  std::size_t edge_count_ = 0;
};

struct LevelRange {
  std::size_t start = 0;
  std::size_t size = 0;
  std::size_t end() const { return start + size; }
  friend bool operator==(const LevelRange&, const LevelRange&) = default;
};

// The taxonomy as a graph over all K nodes with parent-child edges only.
struct HierGraph {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Adjacency adjacency;
  std::vector<std::size_t> level_of;       // node -> level
  std::vector<LevelRange> level_ranges;    // level -> contiguous node range
  std::vector<std::size_t> parent;         // node -> parent node, npos on level 0
  std::vector<std::vector<std::size_t>> children;

  std::size_t node_count() const { return level_of.size(); }
  std::size_t levels() const { return level_ranges.size(); }
  std::size_t node_id(std::size_t level, std::size_t index) const {
    return level_ranges[level].start + index;
  }
  const LevelRange& leaf_range() const { return level_ranges.back(); }
};

HierGraph build_graph(const Taxonomy& t);

// Node range of `level` (0-based). Throws IndexError if level >= h.
LevelRange level_slice(const HierGraph& g, std::size_t level);

// Ancestor chain of a leaf as per-level indices (level 0 first, the leaf last).
std::vector<std::uint32_t> ancestor_path(const HierGraph& g, std::size_t leaf_index);

}  // namespace hgt
