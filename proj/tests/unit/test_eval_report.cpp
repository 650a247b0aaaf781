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

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "hgt/error.hpp"
#include "hgt/eval_report.hpp"
#include "support/oracles.hpp"

using namespace hgt;

namespace {

Taxonomy two_by_two() {
  Taxonomy t;
  t.names = {{"P1", "P2"}, {"l1", "l2", "l3", "l4"}};
  t.parent_of = {{}, {0, 0, 1, 1}};
  return t;
}

Dataset tiny_dataset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Taxonomy t = oracle::random_taxonomy(rng, 3, 2, 2);
  return oracle::random_dataset(rng, t, 4, 2, 3);
}

TrainConfig tiny_config() {
  TrainConfig cfg = TrainConfig::defaults(3);
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.lr0 = 0.05;
  cfg.visual_prompt_rows = 2;
  cfg.text_encoder.depth = 2;
  cfg.visual_encoder.depth = 2;
  return cfg;
}

}  // namespace

TEST_SUITE("eval_report") {
  TEST_CASE("top1 examples") {
    const std::vector<LabelPath> labels = {{0, 1}, {1, 3}};
    CHECK(top1_per_level(labels, labels) == std::vector<double>{1.0, 1.0});
    const std::vector<LabelPath> half = {{0, 2}, {0, 3}};
    CHECK(top1_per_level(half, labels) == std::vector<double>{0.5, 0.5});

    CHECK_THROWS_AS(top1_per_level({{0, 1}}, labels), ShapeError);
    CHECK_THROWS_AS(top1_per_level({{0}, {1, 3}}, labels), ShapeError);
    CHECK_THROWS_AS(top1_per_level({}, {}), ShapeError);
  }

  TEST_CASE("top1 matches a counting oracle and ignores sample order") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::uint32_t> pick(0, 3);
    std::vector<LabelPath> pred(100), labels(100);
    for (std::size_t n = 0; n < 100; ++n) {
      for (int i = 0; i < 3; ++i) {
        pred[n].push_back(pick(rng));
        labels[n].push_back(pick(rng));
      }
    }
    const auto acc = top1_per_level(pred, labels);
    for (std::size_t i = 0; i < 3; ++i) {
      int hits = 0;
      for (std::size_t n = 0; n < 100; ++n) {
        if (pred[n][i] == labels[n][i]) ++hits;
      }
      CHECK(acc[i] == hits / 100.0);
    }

    std::vector<std::size_t> order(100);
    for (std::size_t i = 0; i < 100; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<LabelPath> p2, l2;
    for (std::size_t i : order) {
      p2.push_back(pred[i]);
      l2.push_back(labels[i]);
    }
    CHECK(top1_per_level(p2, l2) == acc);
  }

  TEST_CASE("consistency examples") {
    const Taxonomy t = two_by_two();
    CHECK(consistency({{0, 0}, {0, 1}, {1, 2}, {1, 3}}, t) == 1.0);
    CHECK(consistency({{0, 2}}, t) == 0.0);
    CHECK(consistency({{0, 0}, {1, 0}}, t) == 0.5);
    CHECK(consistency({{0, 9}}, t) == 0.0);
    CHECK(consistency({{0}}, t) == 0.0);

    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      const Taxonomy r = oracle::random_taxonomy(rng, 3);
      const HierGraph g = build_graph(r);
      std::vector<LabelPath> chains;
      for (std::size_t leaf = 0; leaf < g.leaf_range().size; ++leaf) {
        chains.push_back(ancestor_path(g, leaf));
      }
      CHECK(consistency(chains, r) == 1.0);
    }
  }

  TEST_CASE("consistency of marginalization predictions matches a chain walk") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Dataset data = tiny_dataset(seed);
      TrainConfig cfg = tiny_config();
      cfg.loss.strategy = LogitStrategy::marginalization;
      cfg.loss.logit_scale = 1.0;
      ModelState s = init_state(data, cfg);
      std::mt19937_64 rng(seed + 100);
      for (BlockRef b : all_blocks(s)) {
        *b.value += oracle::random_matrix(rng, b.value->rows(), b.value->cols(), 0.5);
      }
      const auto pred = predict(s, data, data.test, cfg);
      const HierGraph& g = data.graph;
      std::size_t ok = 0;
      for (const LabelPath& p : pred) {
        std::size_t node = g.level_ranges.back().start + p.back();
        bool chain = true;
        for (std::size_t level = g.levels() - 1; level-- > 0;) {
          node = g.parent[node];
          chain = chain && node == g.level_ranges[level].start + p[level];
        }
        ok += chain;
      }
      CHECK(consistency(pred, data.taxonomy) == static_cast<double>(ok) / pred.size());

      const EvalResult r = evaluate(s, data, data.test, cfg);
      CHECK(r.n_samples == data.test.size());
      CHECK(r.per_level_top1.size() == 3);
      for (double a : r.per_level_top1) CHECK((a >= 0.0 && a <= 1.0));
    }
  }

  TEST_CASE("multi-label predictions follow per-level argmax") {
    const Dataset data = tiny_dataset(7);
    const TrainConfig cfg = tiny_config();
    const ModelState s = init_state(data, cfg);
    const auto pred = predict(s, data, data.test, cfg);
    for (std::size_t n = 0; n < pred.size(); ++n) {
      const RowVector scores = forward(s, data.test[n], data, cfg).scores;
      for (std::size_t level = 0; level < data.graph.levels(); ++level) {
        const LevelRange r = data.graph.level_ranges[level];
        Eigen::Index best = 0;
        scores.segment(static_cast<Eigen::Index>(r.start), static_cast<Eigen::Index>(r.size)).maxCoeff(&best);
        CHECK(pred[n][level] == static_cast<std::uint32_t>(best));
      }
    }
    CHECK_THROWS_AS(evaluate(s, data, {}, cfg), DataError);
  }

  TEST_CASE("sweep settings") {
    const TrainConfig base = tiny_config();
    const auto depth = sweep_settings(SweepAxis::depth, base);
    REQUIRE(depth.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(depth[i].config.text_encoder.depth == i + 1);
      CHECK(depth[i].config.visual_encoder.depth == i + 1);
    }
    const auto variant = sweep_settings(SweepAxis::variant, base);
    REQUIRE(variant.size() == 3);
    CHECK(variant[0].config.text_encoder.variant == EncoderVariant::gcn);
    CHECK(variant[1].config.text_encoder.variant == EncoderVariant::gat);
    CHECK(variant[2].config.visual_encoder.variant == EncoderVariant::sage);

    const auto toggles = sweep_settings(SweepAxis::toggles, base);
    REQUIRE(toggles.size() == 9);
    std::set<std::string> distinct;
    for (const auto& s : toggles) distinct.insert(s.config.toggles.bits());
    CHECK(distinct.size() == 9);
    CHECK(toggles.front().config.toggles == Toggles::all_off());
    CHECK(toggles.back().config.toggles == Toggles::all_on());

    CHECK(parse_axis("variant") == SweepAxis::variant);
    CHECK(to_string(SweepAxis::toggles) == "toggles");
    CHECK_THROWS_AS(parse_axis("width"), ConfigError);
  }

  TEST_CASE("sweep output is deterministic and well formed") {
    const Dataset data = tiny_dataset(3);
    const TrainConfig base = tiny_config();
    const auto a = sweep(SweepAxis::depth, base, data);
    const auto b = sweep(SweepAxis::depth, base, data);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].setting == b[i].setting);
      CHECK(a[i].result.per_level_top1 == b[i].result.per_level_top1);
      CHECK(a[i].result.consistency_rate == b[i].result.consistency_rate);
      CHECK(a[i].seed == base.seed);
    }

    std::ostringstream csv;
    write_csv(csv, a);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "setting,level,top1,consistency,n,seed,wall_time_s");
    std::size_t rows = 0;
    std::set<std::string> settings;
    while (std::getline(lines, line)) {
      ++rows;
      CHECK(std::count(line.begin(), line.end(), ',') == 6);
      settings.insert(line.substr(0, line.find(',')));
    }
    CHECK(rows == 5 * 3);
    CHECK(settings.size() == 5);

    const std::string table = format_table(a);
    CHECK(std::count(table.begin(), table.end(), '\n') == 6);
    CHECK(table.find("depth=5") != std::string::npos);
    CHECK(table.rfind("setting", 0) == 0);
  }
}
