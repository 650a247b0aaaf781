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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "hgt/embedding_store.hpp"
#include "hgt/error.hpp"
#include "support/oracles.hpp"

using namespace hgt;

namespace {

// Hand-assembled HGEB bytes, independent of the library writer.
struct Bytes {
  std::string s;
  Bytes& u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    return *this;
  }
  Bytes& f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    return u32(v);
  }
  Bytes& raw(const char* t) {
    s += t;
    return *this;
  }
};

Bytes header(std::uint32_t kind, std::uint32_t count, std::uint32_t d) {
  Bytes b;
  b.raw("HGEB").u32(1).u32(kind).u32(count).u32(d);
  return b;
}

EmbeddingFile read(const std::string& bytes, std::size_t levels = 2) {
  std::istringstream in(bytes);
  return read_embeddings(in, levels);
}

const Taxonomy kTwoByTwo = [] {
  Taxonomy t;
  t.names = {{"p", "q"}, {"a", "b", "c", "d"}};
  t.parent_of = {{}, {0, 0, 1, 1}};
  return t;
}();

ImageFeatures image(std::initializer_list<double> row, std::uint32_t parent, std::uint32_t leaf) {
  Matrix m(1, static_cast<Eigen::Index>(row.size()));
  Eigen::Index i = 0;
  for (double v : row) m(0, i++) = v;
  return ImageFeatures(m, {parent, leaf});
}

}  // namespace

TEST_SUITE("embedding_store") {
  TEST_CASE("text table of 5x4") {
    Bytes b = header(0, 5, 4);
    for (int i = 0; i < 20; ++i) b.f32(static_cast<float>(i) * 0.5f);
    const EmbeddingFile f = read(b.s);
    CHECK(f.header.kind == EmbeddingKind::text_table);
    REQUIRE(f.table.rows() == 5);
    REQUIRE(f.table.cols() == 4);
    CHECK(f.table(4, 3) == 9.5);
    CHECK(f.table(1, 0) == 2.0);
  }

  TEST_CASE("truncated and oversized payloads") {
    Bytes b = header(0, 5, 4);
    for (int i = 0; i < 19; ++i) b.f32(1.0f);
    CHECK_THROWS_AS(read(b.s), ShapeError);
    b.f32(1.0f).f32(1.0f);
    CHECK_THROWS_AS(read(b.s), ShapeError);

    Bytes rec = header(1, 2, 2);
    rec.u32(1).u32(0).u32(1).f32(1).f32(2);
    CHECK_THROWS_AS(read(rec.s), ShapeError);
  }

  TEST_CASE("header errors") {
    CHECK_THROWS_AS(read("HGEX\x01\0\0\0"), FormatError);
    CHECK_THROWS_AS(read(""), FormatError);
    CHECK_THROWS_AS(read("HGEB\x01\0\0\0"), FormatError);
    Bytes v2;
    v2.raw("HGEB").u32(2).u32(0).u32(0).u32(4);
    CHECK_THROWS_AS(read(v2.s), FormatError);
    CHECK_THROWS_AS(read(header(7, 0, 4).s), FormatError);
    Bytes empty_record = header(1, 1, 2);
    empty_record.u32(0).u32(0).u32(0);
    CHECK_THROWS_AS(read(empty_record.s), FormatError);
  }

  TEST_CASE("backbone width 512 is accepted") {
    Bytes b = header(0, 2, 512);
    for (int i = 0; i < 1024; ++i) b.f32(0.25f);
    const EmbeddingFile f = read(b.s);
    CHECK(f.table.cols() == 512);
  }

  TEST_CASE("image records recompute the global feature") {
    Bytes b = header(1, 2, 2);
    b.u32(2).u32(1).u32(3).f32(2).f32(0).f32(0).f32(2);
    b.u32(1).u32(0).u32(0).f32(-1).f32(4);
    const EmbeddingFile f = read(b.s);
    REQUIRE(f.images.size() == 2);
    CHECK(f.images[0].label_path == std::vector<std::uint32_t>{1, 3});
    CHECK(f.images[0].global(0) == 1.0);
    CHECK(f.images[0].global(1) == 1.0);
    CHECK(f.images[1].spatial.rows() == 1);
  }

  TEST_CASE("write/read round trip is bit exact") {
    std::mt19937_64 rng(3);
    Matrix table = oracle::random_matrix(rng, 6, 5);
    round_to_float(table);
    std::stringstream ts;
    write_text_table(ts, table);
    CHECK(read(ts.str()).table == table);

    std::vector<ImageFeatures> images;
    for (std::uint32_t i = 0; i < 4; ++i) {
      Matrix sp = oracle::random_matrix(rng, 1 + i, 5);
      round_to_float(sp);
      images.emplace_back(sp, std::vector<std::uint32_t>{i % 2, i});
    }
    std::stringstream is;
    write_image_records(is, images, 5);
    const EmbeddingFile f = read(is.str());
    REQUIRE(f.images.size() == images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
      CHECK(f.images[i].spatial == images[i].spatial);
      CHECK(f.images[i].label_path == images[i].label_path);
    }

    const auto dir = std::filesystem::temp_directory_path();
    save_text_table(dir / "hgt_text_rt.hgeb", table);
    CHECK(load_text_table(dir / "hgt_text_rt.hgeb") == table);
    save_image_records(dir / "hgt_img_rt.hgeb", images, 5);
    CHECK(load_image_records(dir / "hgt_img_rt.hgeb", 2).size() == 4);
    CHECK_THROWS_AS(load_image_records(dir / "hgt_text_rt.hgeb", 2), FormatError);
    std::filesystem::remove(dir / "hgt_text_rt.hgeb");
    std::filesystem::remove(dir / "hgt_img_rt.hgeb");
    CHECK_THROWS_AS(load_text_table(dir / "hgt_no_such_file.hgeb"), IOError);
  }

  TEST_CASE("pool") {
    Matrix m(2, 2);
    m << 2, 0, 0, 2;
    CHECK(pool(m) == RowVector::Ones(2));
    CHECK(pool(m.topRows(1)) == m.row(0));
    const RowVector r = (RowVector(3) << 0.25, -0.75, 3.5).finished();
    Matrix same = r.replicate(100, 1);
    CHECK(pool(same) == r);
    CHECK_THROWS_AS(pool(Matrix(0, 3)), EmptyInputError);

    std::mt19937_64 rng(4);
    Matrix x = oracle::random_matrix(rng, 7, 3);
    Matrix rev = x.colwise().reverse();
    CHECK((pool(x) - pool(rev)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("prototypes: two-point mean, child mean and singleton") {
    const HierGraph g = build_graph(kTwoByTwo);
    const std::vector<ImageFeatures> images = {
        image({1, 0}, 0, 0), image({0, 1}, 0, 0),  // leaf a
        image({0, 1}, 0, 1),                       // leaf b
        image({3, 3}, 1, 2), image({1, -1}, 1, 3)};
    const PrototypeTable p = compute_prototypes(images, kTwoByTwo, g);
    CHECK(p.values.row(2) == (RowVector(2) << 0.5, 0.5).finished());
    CHECK(p.values.row(3) == images[2].global);
    CHECK(p.values.row(0) == (RowVector(2) << 0.25, 0.75).finished());
    CHECK(p.values.row(1) == (RowVector(2) << 2.0, 1.0).finished());
    CHECK(p.counts == std::vector<std::size_t>{3, 2, 2, 1, 1, 1});
  }

  TEST_CASE("prototypes: empty classes are named") {
    const HierGraph g = build_graph(kTwoByTwo);
    const std::vector<ImageFeatures> images = {image({1, 0}, 0, 0), image({1, 0}, 1, 2)};
    try {
      compute_prototypes(images, kTwoByTwo, g);
      FAIL("expected EmptyClassError");
    } catch (const EmptyClassError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("b") != std::string::npos);
      CHECK(msg.find("d") != std::string::npos);
    }
  }

  TEST_CASE("prototypes: order invariance and the bottom-up oracle") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const Taxonomy t = oracle::random_taxonomy(rng, 2 + trial % 3);
      const hgt::Dataset data = oracle::random_dataset(rng, t, 3, 1 + trial % 3, 2);
      const PrototypeTable p = compute_prototypes(data.train, t, data.graph);

      std::vector<ImageFeatures> shuffled = data.train;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const PrototypeTable q = compute_prototypes(shuffled, t, data.graph);
      CHECK((p.values - q.values).cwiseAbs().maxCoeff() < 1e-14);

      // Recursive oracle: a node's prototype is the mean of its children,
      // bottoming out at leaf means computed by direct scan.
      const HierGraph& g = data.graph;
      std::function<RowVector(std::size_t)> proto = [&](std::size_t node) -> RowVector {
        if (g.children[node].empty()) {
          RowVector acc = RowVector::Zero(3);
          double n = 0.0;
          for (const ImageFeatures& img : data.train) {
            if (g.leaf_range().start + img.label_path.back() == node) {
              acc += img.global;
              n += 1.0;
            }
          }
          return acc / n;
        }
        RowVector acc = RowVector::Zero(3);
        for (std::size_t c : g.children[node]) acc += proto(c);
        return acc / static_cast<double>(g.children[node].size());
      };
      for (std::size_t node = 0; node < g.node_count(); ++node) {
        CHECK((p.values.row(static_cast<Eigen::Index>(node)) - proto(node)).cwiseAbs().maxCoeff() < 1e-14);
      }
    }
  }

  TEST_CASE("apply_prompts") {
    std::mt19937_64 rng(6);
    const Matrix base = normalize_rows(oracle::random_matrix(rng, 4, 3));
    const TextTable text(base);
    CHECK((apply_prompts(text) - base).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(apply_prompts(TextTable(base, -base)), NormalizationError);
    CHECK_THROWS_AS(TextTable(base, Matrix::Zero(3, 3)), ShapeError);

    const ImageFeatures img(oracle::random_matrix(rng, 6, 3), {0, 0});
    const ImageFeatures prompted = apply_prompts(img, Matrix::Zero(4, 3));
    CHECK(prompted.spatial.rows() == 10);
    CHECK((prompted.global - img.global * (6.0 / 10.0)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(prompted.label_path == img.label_path);
    CHECK_THROWS_AS(apply_prompts(img, Matrix::Zero(4, 2)), ShapeError);
  }
}
