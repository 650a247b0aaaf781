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

#include "hgt/embedding_store.hpp"

#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "hgt/error.hpp"

namespace hgt {

namespace {
constexpr char kMagic[4] = {'H', 'G', 'E', 'B'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

TextTable::TextTable(Matrix base_rows)
    : base(std::move(base_rows)), prompt_offsets(Matrix::Zero(base.rows(), base.cols())) {}

TextTable::TextTable(Matrix base_rows, Matrix offsets)
    : base(std::move(base_rows)), prompt_offsets(std::move(offsets)) {
  if (prompt_offsets.rows() != base.rows() || prompt_offsets.cols() != base.cols()) {
    throw ShapeError("prompt offsets must match the text table shape");
  }
}

Matrix TextTable::prompted() const { return normalize_rows(base + prompt_offsets); }

ImageFeatures::ImageFeatures(Matrix spatial_rows, std::vector<std::uint32_t> labels)
    : spatial(std::move(spatial_rows)), global(pool(spatial)), label_path(std::move(labels)) {}

RowVector pool(const Matrix& spatial) {
  if (spatial.rows() == 0) throw EmptyInputError("cannot pool an empty feature map");
  return spatial.colwise().sum() / static_cast<double>(spatial.rows());
}

PrototypeTable prototypes_from_globals(const Matrix& globals,
                                       std::span<const std::uint32_t> leaf_labels,
                                       const Taxonomy& t, const HierGraph& g) {
  if (static_cast<std::size_t>(globals.rows()) != leaf_labels.size()) {
    throw ShapeError("one leaf label per global feature is required");
  }
  const LevelRange leaves = g.leaf_range();
  const std::size_t k = g.node_count();
  PrototypeTable out;
  out.values = Matrix::Zero(static_cast<Eigen::Index>(k), globals.cols());
  out.counts.assign(k, 0);

  for (Eigen::Index r = 0; r < globals.rows(); ++r) {
    const std::uint32_t leaf = leaf_labels[static_cast<std::size_t>(r)];
    if (leaf >= leaves.size) throw DataError("leaf label " + std::to_string(leaf) + " out of range");
    out.values.row(static_cast<Eigen::Index>(leaves.start + leaf)) += globals.row(r);
    ++out.counts[leaves.start + leaf];
  }

  std::string empty;
  for (std::size_t i = 0; i < leaves.size; ++i) {
    const std::size_t node = leaves.start + i;
    if (out.counts[node] == 0) {
      if (!empty.empty()) empty += ", ";
      empty += t.names.back()[i];
      continue;
    }
    out.values.row(static_cast<Eigen::Index>(node)) /= static_cast<double>(out.counts[node]);
  }
  if (!empty.empty()) throw EmptyClassError("classes without training images: " + empty);

  for (std::size_t level = g.levels() - 1; level-- > 0;) {
    const LevelRange r = g.level_ranges[level];
    for (std::size_t node = r.start; node < r.end(); ++node) {
      const auto& kids = g.children[node];
      RowVector acc = RowVector::Zero(globals.cols());
      for (std::size_t c : kids) {
        acc += out.values.row(static_cast<Eigen::Index>(c));
        out.counts[node] += out.counts[c];
      }
      out.values.row(static_cast<Eigen::Index>(node)) = acc / static_cast<double>(kids.size());
    }
  }
  return out;
}

PrototypeTable compute_prototypes(std::span<const ImageFeatures> images, const Taxonomy& t,
                                  const HierGraph& g) {
  const std::size_t d = images.empty() ? 0 : images.front().width();
  Matrix globals(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(d));
  std::vector<std::uint32_t> leaves(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].width() != d) throw ShapeError("images disagree on feature width");
    if (images[i].label_path.size() != g.levels()) {
      throw DataError("label path length does not match the hierarchy depth");
    }
    globals.row(static_cast<Eigen::Index>(i)) = images[i].global;
    leaves[i] = images[i].label_path.back();
  }
  return prototypes_from_globals(globals, leaves, t, g);
}

ImageFeatures apply_prompts(const ImageFeatures& image, const Matrix& prompt_rows) {
  if (prompt_rows.rows() > 0 && prompt_rows.cols() != image.spatial.cols()) {
    throw ShapeError("visual prompt width does not match the feature map");
  }
  Matrix spatial(image.spatial.rows() + prompt_rows.rows(), image.spatial.cols());
  spatial.topRows(image.spatial.rows()) = image.spatial;
  spatial.bottomRows(prompt_rows.rows()) = prompt_rows;
  return ImageFeatures(std::move(spatial), image.label_path);
}

Matrix apply_prompts(const TextTable& text) { return text.prompted(); }

EmbeddingFile read_embeddings(std::istream& in, std::size_t levels) {
  const std::string bytes = detail::slurp(in);
  detail::Reader<ShapeError> r(bytes, bytes.size());
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw FormatError("missing HGEB magic");
  }
  if (bytes.size() < 20) throw FormatError("truncated HGEB header");
  r.raw(4, "magic");
  EmbeddingFile f;
  f.header.version = r.u32("version");
  if (f.header.version != kVersion) {
    throw FormatError("unsupported HGEB version " + std::to_string(f.header.version));
  }
  const std::uint32_t kind = r.u32("kind");
  if (kind > 1) throw FormatError("unknown HGEB kind " + std::to_string(kind));
  f.header.kind = static_cast<EmbeddingKind>(kind);
  f.header.count = r.u32("count");
  f.header.width = r.u32("width");
  const auto d = static_cast<Eigen::Index>(f.header.width);
  if (d == 0) throw ShapeError("embedding width must be positive");

  if (f.header.kind == EmbeddingKind::text_table) {
    const std::size_t expected = std::size_t{f.header.count} * f.header.width * 4;
    if (r.remaining() != expected) {
      throw ShapeError("text table payload has " + std::to_string(r.remaining()) +
                       " bytes, header implies " + std::to_string(expected));
    }
    f.table.resize(f.header.count, d);
    for (Eigen::Index i = 0; i < f.table.size(); ++i) f.table.data()[i] = r.f32("table");
    return f;
  }

  f.images.reserve(f.header.count);
  for (std::uint32_t n = 0; n < f.header.count; ++n) {
    const std::uint32_t m = r.u32("record row count");
    if (m == 0) throw FormatError("image record " + std::to_string(n) + " has no rows");
    std::vector<std::uint32_t> labels(levels);
    for (auto& l : labels) l = r.u32("label path");
    r.need(std::size_t{m} * f.header.width * 4, "spatial rows");
    Matrix spatial(m, d);
    for (Eigen::Index i = 0; i < spatial.size(); ++i) spatial.data()[i] = r.f32("spatial rows");
    f.images.emplace_back(std::move(spatial), std::move(labels));
  }
  if (r.remaining() != 0) {
    throw ShapeError(std::to_string(r.remaining()) + " trailing bytes after the last image record");
  }
  return f;
}

EmbeddingFile load_embeddings(const std::filesystem::path& path, std::size_t levels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open embedding file '" + path.string() + "'");
  return read_embeddings(in, levels);
}

Matrix load_text_table(const std::filesystem::path& path) {
  EmbeddingFile f = load_embeddings(path, 0);
  if (f.header.kind != EmbeddingKind::text_table) {
    throw FormatError("'" + path.string() + "' is not a text table");
  }
  return std::move(f.table);
}

std::vector<ImageFeatures> load_image_records(const std::filesystem::path& path,
                                              std::size_t levels) {
  EmbeddingFile f = load_embeddings(path, levels);
  if (f.header.kind != EmbeddingKind::image_records) {
    throw FormatError("'" + path.string() + "' is not an image record stream");
  }
  return std::move(f.images);
}

namespace {

std::string header_bytes(EmbeddingKind kind, std::size_t count, std::size_t width) {
  std::string buf(kMagic, 4);
  detail::put_u32(buf, kVersion);
  detail::put_u32(buf, static_cast<std::uint32_t>(kind));
  detail::put_u32(buf, static_cast<std::uint32_t>(count));
  detail::put_u32(buf, static_cast<std::uint32_t>(width));
  return buf;
}

void flush(std::ostream& out, const std::string& buf) {
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IOError("embedding write failed");
}

}  // namespace

void write_text_table(std::ostream& out, const Matrix& table) {
  std::string buf = header_bytes(EmbeddingKind::text_table, table.rows(), table.cols());
  for (Eigen::Index i = 0; i < table.size(); ++i) detail::put_f32(buf, table.data()[i]);
  flush(out, buf);
}

void write_image_records(std::ostream& out, std::span<const ImageFeatures> images,
                         std::size_t width) {
  std::string buf = header_bytes(EmbeddingKind::image_records, images.size(), width);
  for (const ImageFeatures& img : images) {
    if (img.width() != width) throw ShapeError("image record width mismatch");
    detail::put_u32(buf, static_cast<std::uint32_t>(img.spatial.rows()));
    for (std::uint32_t l : img.label_path) detail::put_u32(buf, l);
    for (Eigen::Index i = 0; i < img.spatial.size(); ++i) detail::put_f32(buf, img.spatial.data()[i]);
  }
  flush(out, buf);
}

void save_text_table(const std::filesystem::path& path, const Matrix& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  write_text_table(out, table);
}

void save_image_records(const std::filesystem::path& path, std::span<const ImageFeatures> images,
                        std::size_t width) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  write_image_records(out, images, width);
}

}  // namespace hgt
