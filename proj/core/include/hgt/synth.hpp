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

// Seeded synthetic hierarchy data: Gaussian class clusters aligned with a
// generated taxonomy, plus a noisy text table for every node.
//
//   level-1 means     unit vectors, uniformly random directions
//   child mean        parent mean + offset * eps,        eps ~ N(0, I/D)
//   spatial row       leaf mean + sigma * n,             n ~ N(0, I)
//   text row (leaf)   node mean + text_noise * eta,      eta ~ N(0, I/D)
//   text row (inner)  node mean + coarse_text_noise * eta
//
// sigma is a per-coordinate standard deviation. N(0, I/D) has unit expected
// squared norm, so offset and the text noise scales are on the scale of the
// unit-norm level-1 means. Leaf text is noisier than coarse text, mirroring a
// text encoder that knows broad categories better than fine-grained names.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hgt/embedding_store.hpp"
#include "hgt/hierarchy.hpp"
#include "hgt/trainer.hpp"

namespace hgt {

struct SynthSpec {
  std::vector<std::size_t> branching = {4, 3};  // level-1 count, then children per node
  std::size_t dim = 16;
  std::size_t train_per_leaf = 40;
  std::size_t test_per_leaf = 20;
  std::size_t patches = 4;  // spatial rows per image
  double sigma = 0.35;
  double offset = 0.5;
  double text_noise = 1.5;
  double coarse_text_noise = 0.2;
  std::uint64_t seed = 0;

  std::size_t levels() const { return branching.size(); }
  void validate() const;
};

// Taxonomy with names "l<level>_<index>".
Taxonomy synth_taxonomy(const std::vector<std::size_t>& branching);

Dataset synthesize(const SynthSpec& spec);

// Writes taxonomy.tsv, text.hgeb, train.hgeb and test.hgeb into `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
// Reads the layout produced by write_dataset; `taxonomy` overrides the
// directory's taxonomy.tsv when non-empty.
Dataset read_dataset(const std::filesystem::path& taxonomy, const std::filesystem::path& dir);

}  // namespace hgt
