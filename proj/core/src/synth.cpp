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

#include "hgt/synth.hpp"

#include <cmath>
#include <random>

#include "hgt/error.hpp"

namespace hgt {

void SynthSpec::validate() const {
  if (branching.size() < 2) throw ConfigError("synthetic data needs at least 2 levels");
  for (std::size_t b : branching) {
    if (b < 2) throw ConfigError("every branching factor must be >= 2");
  }
  if (dim == 0 || patches == 0) throw ConfigError("dim and patches must be positive");
  if (train_per_leaf == 0) throw ConfigError("train_per_leaf must be positive");
  if (sigma < 0.0 || offset < 0.0 || text_noise < 0.0 || coarse_text_noise < 0.0) {
    throw ConfigError("noise scales must be nonnegative");
  }
}

Taxonomy synth_taxonomy(const std::vector<std::size_t>& branching) {
  Taxonomy t;
  t.names.resize(branching.size());
  t.parent_of.resize(branching.size());
  std::size_t count = branching.front();
  for (std::size_t i = 0; i < count; ++i) t.names[0].push_back("l1_" + std::to_string(i));
  for (std::size_t level = 1; level < branching.size(); ++level) {
    std::size_t idx = 0;
    for (std::size_t p = 0; p < t.names[level - 1].size(); ++p) {
      for (std::size_t c = 0; c < branching[level]; ++c) {
        t.names[level].push_back("l" + std::to_string(level + 1) + "_" + std::to_string(idx++));
        t.parent_of[level].push_back(p);
      }
    }
  }
  t.validate();
  return t;
}

Dataset synthesize(const SynthSpec& spec) {
  spec.validate();
  Dataset data;
  data.taxonomy = synth_taxonomy(spec.branching);
  data.graph = build_graph(data.taxonomy);
  const HierGraph& g = data.graph;
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const auto k = static_cast<Eigen::Index>(g.node_count());

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.dim));
  auto gaussian = [&] {
    RowVector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng) * scale;
    return v;
  };

  Matrix means(k, d);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const auto r = static_cast<Eigen::Index>(node);
    if (g.level_of[node] == 0) {
      RowVector v = gaussian();
      means.row(r) = v / v.norm();
    } else {
      means.row(r) = means.row(static_cast<Eigen::Index>(g.parent[node])) + spec.offset * gaussian();
    }
  }

  data.text_base.resize(k, d);
  for (Eigen::Index r = 0; r < k; ++r) {
    const bool leaf = g.level_of[static_cast<std::size_t>(r)] + 1 == g.levels();
    data.text_base.row(r) = means.row(r) + (leaf ? spec.text_noise : spec.coarse_text_noise) * gaussian();
  }
  round_to_float(data.text_base);

  // gaussian() has per-coordinate std 1/sqrt(D); spatial noise uses sigma per coordinate.
  const double unit_scale = std::sqrt(static_cast<double>(spec.dim));
  const LevelRange leaves = g.leaf_range();
  auto make_split = [&](std::size_t per_leaf, std::vector<ImageFeatures>& out) {
    for (std::size_t leaf = 0; leaf < leaves.size; ++leaf) {
      const RowVector mean = means.row(static_cast<Eigen::Index>(leaves.start + leaf));
      for (std::size_t n = 0; n < per_leaf; ++n) {
        Matrix spatial(static_cast<Eigen::Index>(spec.patches), d);
        for (Eigen::Index r = 0; r < spatial.rows(); ++r) {
          spatial.row(r) = mean + spec.sigma * unit_scale * gaussian();
        }
        round_to_float(spatial);
        out.emplace_back(std::move(spatial), ancestor_path(g, leaf));
      }
    }
  };
  make_split(spec.train_per_leaf, data.train);
  make_split(spec.test_per_leaf, data.test);
  return data;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOError("cannot create '" + dir.string() + "': " + ec.message());
  save_taxonomy((dir / "taxonomy.tsv").string(), data.taxonomy);
  save_text_table(dir / "text.hgeb", data.text_base);
  save_image_records(dir / "train.hgeb", data.train, data.width());
  save_image_records(dir / "test.hgeb", data.test, data.width());
}

Dataset read_dataset(const std::filesystem::path& taxonomy, const std::filesystem::path& dir) {
  Dataset data;
  data.taxonomy = load_taxonomy((taxonomy.empty() ? dir / "taxonomy.tsv" : taxonomy).string());
  data.graph = build_graph(data.taxonomy);
  data.text_base = load_text_table(dir / "text.hgeb");
  const std::size_t h = data.taxonomy.levels();
  data.train = load_image_records(dir / "train.hgeb", h);
  if (std::filesystem::exists(dir / "test.hgeb")) data.test = load_image_records(dir / "test.hgeb", h);
  data.validate();
  return data;
}

}  // namespace hgt
