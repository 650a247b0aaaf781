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

// Text tables, per-image feature maps, class prototypes, and the HGEB binary
// embedding format.
//
// HGEB layout (little-endian):
//   "HGEB" | u32 version=1 | u32 kind | u32 count | u32 D | payload
//   kind 0 (text table):     count*D f32, row-major
//   kind 1 (image records):  count x { u32 M | h x u32 label_path | M*D f32 }
//
// Global image features are never stored; they are recomputed at load.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hgt/hierarchy.hpp"
#include "hgt/linalg.hpp"

namespace hgt {

// Frozen per-node text embeddings plus the learnable prompt offsets added to
// them before normalization. Rows follow HierGraph node order.
struct TextTable {
  Matrix base;
  Matrix prompt_offsets;

  explicit TextTable(Matrix base_rows);
  TextTable(Matrix base_rows, Matrix offsets);

  std::size_t rows() const { return static_cast<std::size_t>(base.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(base.cols()); }

  // L2-normalize(base + prompt_offsets). Throws NormalizationError on a zero row.
  Matrix prompted() const;
};

struct ImageFeatures {
  Matrix spatial;                         // (M + v) x D
  RowVector global;                       // mean of spatial rows
  std::vector<std::uint32_t> label_path;  // per-level ground-truth index

  ImageFeatures() = default;
  ImageFeatures(Matrix spatial_rows, std::vector<std::uint32_t> labels);

  std::size_t width() const { return static_cast<std::size_t>(spatial.cols()); }
};

struct PrototypeTable {
  Matrix values;                    // K x D
  std::vector<std::size_t> counts;  // images contributing to each node
};

// Arithmetic mean over rows. Throws EmptyInputError when there are none.
RowVector pool(const Matrix& spatial);

// Leaf prototypes are means of member images' global features; every inner
// node is the mean of its children's prototypes. Throws EmptyClassError naming
// every leaf without images.
PrototypeTable compute_prototypes(std::span<const ImageFeatures> images, const Taxonomy& t,
                                  const HierGraph& g);

// Same, from an explicit N x D matrix of global features and per-row leaf index.
PrototypeTable prototypes_from_globals(const Matrix& globals,
                                       std::span<const std::uint32_t> leaf_labels,
                                       const Taxonomy& t, const HierGraph& g);

// Appends the visual prompt rows and recomputes the global feature.
ImageFeatures apply_prompts(const ImageFeatures& image, const Matrix& prompt_rows);
// Text side: L2-normalized base + offsets.
Matrix apply_prompts(const TextTable& text);

enum class EmbeddingKind : std::uint32_t { text_table = 0, image_records = 1 };

struct EmbeddingHeader {
  EmbeddingKind kind = EmbeddingKind::text_table;
  std::uint32_t version = 1;
  std::uint32_t count = 0;
  std::uint32_t width = 0;
};

struct EmbeddingFile {
  EmbeddingHeader header;
  Matrix table;                       // kind 0
  std::vector<ImageFeatures> images;  // kind 1
};

// `levels` is the label-path length of image records (ignored for text tables).
EmbeddingFile read_embeddings(std::istream& in, std::size_t levels);
EmbeddingFile load_embeddings(const std::filesystem::path& path, std::size_t levels);

Matrix load_text_table(const std::filesystem::path& path);
std::vector<ImageFeatures> load_image_records(const std::filesystem::path& path, std::size_t levels);

void write_text_table(std::ostream& out, const Matrix& table);
void write_image_records(std::ostream& out, std::span<const ImageFeatures> images,
                         std::size_t width);
void save_text_table(const std::filesystem::path& path, const Matrix& table);
void save_image_records(const std::filesystem::path& path, std::span<const ImageFeatures> images,
                        std::size_t width);

}  // namespace hgt
