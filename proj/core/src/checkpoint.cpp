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

#include "hgt/checkpoint.hpp"

#include <zlib.h>

#include <fstream>
#include <map>

#include "binary_io.hpp"
#include "hgt/error.hpp"

namespace hgt {

namespace {

constexpr char kMagic[4] = {'H', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t crc32_of(const std::string& bytes, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

std::vector<NamedBlock> collect(const ModelState& s) {
  ModelState m = s;
  std::vector<NamedBlock> blocks;
  for (const BlockRef& b : all_blocks(m)) blocks.push_back({b.name, *b.value});
  blocks.push_back({"prototypes", s.prototypes.values});
  Matrix counts(1, static_cast<Eigen::Index>(s.prototypes.counts.size()));
  for (std::size_t i = 0; i < s.prototypes.counts.size(); ++i) {
    counts(0, static_cast<Eigen::Index>(i)) = static_cast<double>(s.prototypes.counts[i]);
  }
  blocks.push_back({"prototype_counts", counts});
  // Split so each half stays exact in f32.
  Matrix step(1, 2);
  step(0, 0) = static_cast<double>(s.step >> 16);
  step(0, 1) = static_cast<double>(s.step & 0xFFFFu);
  blocks.push_back({"step", step});
  return blocks;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::vector<NamedBlock>& blocks) {
  std::string buf(kMagic, 4);
  detail::put_u32(buf, kVersion);
  detail::put_u32(buf, static_cast<std::uint32_t>(blocks.size()));
  for (const NamedBlock& b : blocks) {
    detail::put_u32(buf, static_cast<std::uint32_t>(b.name.size()));
    buf += b.name;
    detail::put_u32(buf, 2);
    detail::put_u32(buf, static_cast<std::uint32_t>(b.value.rows()));
    detail::put_u32(buf, static_cast<std::uint32_t>(b.value.cols()));
    for (Eigen::Index i = 0; i < b.value.size(); ++i) detail::put_f32(buf, b.value.data()[i]);
  }
  detail::put_u32(buf, crc32_of(buf, buf.size()));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IOError("checkpoint write failed");
}

std::vector<NamedBlock> read_checkpoint(std::istream& in) {
  const std::string bytes = detail::slurp(in);
  if (bytes.size() < 16 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw FormatError("missing HGCK magic");
  }
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t stored =
      detail::decode_u32(reinterpret_cast<const unsigned char*>(bytes.data() + body));
  if (stored != crc32_of(bytes, body)) throw FormatError("checkpoint CRC mismatch");

  detail::Reader<FormatError> r(bytes, body);
  r.raw(4, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) throw FormatError("unsupported HGCK version " + std::to_string(version));
  const std::uint32_t count = r.u32("block count");
  std::vector<NamedBlock> blocks;
  for (std::uint32_t n = 0; n < count; ++n) {
    NamedBlock b;
    const std::uint32_t len = r.u32("name length");
    b.name = r.raw(len, "block name");
    const std::uint32_t ndims = r.u32("dimension count");
    std::vector<std::uint32_t> dims(ndims);
    std::size_t total = 1;
    for (auto& d : dims) {
      d = r.u32("dimension");
      total *= d;
    }
    Eigen::Index rows = 1, cols = 1;
    if (ndims == 1) {
      cols = dims[0];
    } else if (ndims == 2) {
      rows = dims[0];
      cols = dims[1];
    } else if (ndims != 0) {
      throw FormatError("block '" + b.name + "' has " + std::to_string(ndims) + " dimensions");
    }
    r.need(total * 4, "block payload");
    b.value.resize(rows, cols);
    for (Eigen::Index i = 0; i < b.value.size(); ++i) b.value.data()[i] = r.f32("block payload");
    blocks.push_back(std::move(b));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes before checkpoint CRC");
  return blocks;
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, collect(s));
}

void load_checkpoint(const std::filesystem::path& path, ModelState& target) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open checkpoint '" + path.string() + "'");
  std::map<std::string, Matrix> by_name;
  for (NamedBlock& b : read_checkpoint(in)) by_name[b.name] = std::move(b.value);

  auto take = [&](const std::string& name, Matrix& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ShapeError("checkpoint has no block '" + name + "'");
    if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols()) {
      throw ShapeError("checkpoint block '" + name + "' is " + std::to_string(it->second.rows()) +
                       "x" + std::to_string(it->second.cols()) + ", model expects " +
                       std::to_string(dst.rows()) + "x" + std::to_string(dst.cols()));
    }
    dst = std::move(it->second);
    by_name.erase(it);
  };

  for (const BlockRef& b : all_blocks(target)) take(b.name, *b.value);
  take("prototypes", target.prototypes.values);
  Matrix counts(1, static_cast<Eigen::Index>(target.prototypes.values.rows()));
  take("prototype_counts", counts);
  target.prototypes.counts.resize(static_cast<std::size_t>(counts.cols()));
  for (Eigen::Index i = 0; i < counts.cols(); ++i) {
    target.prototypes.counts[static_cast<std::size_t>(i)] = static_cast<std::size_t>(counts(0, i));
  }
  Matrix step(1, 2);
  take("step", step);
  target.step = (static_cast<std::uint64_t>(step(0, 0)) << 16) |
                static_cast<std::uint64_t>(step(0, 1));
  if (!by_name.empty()) {
    throw ShapeError("checkpoint block '" + by_name.begin()->first +
                     "' does not exist in this model");
  }
}

}  // namespace hgt
