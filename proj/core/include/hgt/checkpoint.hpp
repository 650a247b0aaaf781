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

// HGCK checkpoint files.
//
//   "HGCK" | u32 version=1 | u32 block_count
//   block_count x { u32 name_len | name | u32 ndims | ndims x u32 dim | f32 payload }
//   u32 CRC-32 of every preceding byte
//
// Blocks: every parameter block of ModelState, "prototypes", "prototype_counts"
// and "step".

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hgt/linalg.hpp"
#include "hgt/trainer.hpp"

namespace hgt {

struct NamedBlock {
  std::string name;
  Matrix value;
};

void write_checkpoint(std::ostream& out, const std::vector<NamedBlock>& blocks);
std::vector<NamedBlock> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ModelState& s);

// Fills `target` (whose shapes come from the run configuration) from the file.
// Throws ShapeError when a block is missing or its dimensions disagree, and
// FormatError on a bad magic, version or checksum.
void load_checkpoint(const std::filesystem::path& path, ModelState& target);

}  // namespace hgt
