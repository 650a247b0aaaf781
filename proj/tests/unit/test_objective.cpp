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
#include <cmath>
#include <random>

#include "hgt/error.hpp"
#include "hgt/objective.hpp"
#include "support/oracles.hpp"

using namespace hgt;

namespace {

// P1 -> {l1, l2}, P2 -> {l3, l4}
HierGraph two_by_two() {
  Taxonomy t;
  t.names = {{"P1", "P2"}, {"l1", "l2", "l3", "l4"}};
  t.parent_of = {{}, {0, 0, 1, 1}};
  return build_graph(t);
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_SUITE("objective") {
  TEST_CASE("partition") {
    LogitsBundle b;
    b.scores = (RowVector(5) << 1, 2, 3, 4, 5).finished();
    b.level_ranges = {{0, 2}, {2, 3}};
    const auto parts = partition(b);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0] == vec({1, 2}));
    CHECK(parts[1] == vec({3, 4, 5}));

    b.level_ranges = {{0, 5}};
    CHECK(partition(b).size() == 1);

    const RowVector wide = RowVector::LinSpaced(120, 0.0, 1.0);
    const std::vector<LevelRange> cifar = {{0, 20}, {20, 100}};
    const auto p2 = partition(wide, cifar);
    CHECK(p2[0].size() == 20);
    CHECK(p2[1].size() == 100);
    CHECK(p2[1](0) == wide(20));

    const std::vector<LevelRange> short_ranges = {{0, 2}, {2, 2}};
    CHECK_THROWS_AS(partition(b.scores, short_ranges), ShapeError);
    const std::vector<LevelRange> gap = {{0, 2}, {3, 2}};
    CHECK_THROWS_AS(partition(b.scores, gap), ShapeError);
  }

  TEST_CASE("multi-label probabilities") {
    const auto p = multi_label_probs({Vector::Constant(4, 0.3), vec({std::log(3.0), 0.0})});
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(p[0](i) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p[1](0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p[1](1) == doctest::Approx(0.25).epsilon(1e-15));

    const Vector l1 = vec({0.2, -1.0}), l2 = vec({3.0, 1.0, -2.0});
    const auto a = multi_label_probs({l1, l2});
    const auto b = multi_label_probs({l1, vec({-2.0, 3.0, 1.0})});
    CHECK(a[0] == b[0]);
  }

  TEST_CASE("marginalize") {
    const HierGraph g = two_by_two();
    const auto p = marginalize(vec({0.3, 0.2, 0.4, 0.1}), g);
    CHECK(p[0](0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[0](1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[1] == vec({0.3, 0.2, 0.4, 0.1}));

    const auto one = marginalize(vec({0, 0, 1, 0}), g);
    CHECK(one[0] == vec({0, 1}));

    CHECK_THROWS_AS(marginalize(vec({0.5, 0.5, 0.5, -0.5}), g), ProbError);
    CHECK_THROWS_AS(marginalize(vec({0.5, 0.6, 0, 0}), g), ProbError);
    CHECK_THROWS_AS(marginalize(vec({0.5, 0.5}), g), ProbError);
    CHECK_THROWS_AS(marginalize(vec({NAN, 1, 0, 0}), g), ProbError);
  }

  TEST_CASE("marginalize matches descendant enumeration on random trees") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const HierGraph g = build_graph(oracle::random_taxonomy(rng, 3, 3, 3));
      const auto n = static_cast<Eigen::Index>(g.leaf_range().size);
      const Vector leaf = softmax(Vector(oracle::random_matrix(rng, n, 1, 3.0)));
      const auto got = marginalize(leaf, g);
      const auto ref = oracle::marginalize(leaf, g);
      for (std::size_t level = 0; level < g.levels(); ++level) {
        CHECK((got[level] - ref[level]).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(got[level].sum() - 1.0) <= 1e-12);
      }
      // A parent carries at least as much mass as any of its children.
      for (std::size_t node = 0; node < g.node_count(); ++node) {
        if (g.parent[node] == HierGraph::npos) continue;
        const std::size_t lv = g.level_of[node], pv = g.level_of[g.parent[node]];
        CHECK(got[pv](static_cast<Eigen::Index>(g.parent[node] - g.level_ranges[pv].start)) >=
              got[lv](static_cast<Eigen::Index>(node - g.level_ranges[lv].start)));
      }
      // Monotone along the argmax leaf's ancestor chain.
      Eigen::Index best = 0;
      leaf.maxCoeff(&best);
      const auto path = ancestor_path(g, static_cast<std::size_t>(best));
      for (std::size_t level = 0; level < g.levels(); ++level) {
        CHECK(got[level](path[level]) >= leaf(best));
      }
    }
  }

  TEST_CASE("hier_loss values") {
    const HierGraph g = two_by_two();
    LossConfig cfg = LossConfig::defaults(2);
    CHECK(cfg.level_weights == std::vector<double>{1.0, 2.0});
    cfg.logit_scale = 1.0;

    const std::vector<std::uint32_t> path = {1, 2};
    const LossResult flat = hier_loss(RowVector::Zero(6), g, path, cfg);
    CHECK(flat.per_level[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(flat.per_level[1] == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(flat.loss == doctest::Approx(std::log(2.0) + 2.0 * std::log(4.0)).epsilon(1e-15));

    std::mt19937_64 rng(4);
    const RowVector scores = oracle::random_matrix(rng, 1, 6);
    const LossResult r = hier_loss(scores, g, path, cfg);
    const Vector c = oracle::softmax(scores.head(2).transpose());
    const Vector f = oracle::softmax(scores.tail(4).transpose());
    CHECK(r.loss == doctest::Approx(-std::log(c(1)) - 2.0 * std::log(f(2))).epsilon(1e-13));

    LossConfig marg = cfg;
    marg.strategy = LogitStrategy::marginalization;
    const LossResult m = hier_loss(scores, g, path, marg);
    CHECK(m.loss == doctest::Approx(-std::log(f(2) + f(3)) - 2.0 * std::log(f(2))).epsilon(1e-13));
    CHECK(m.grad.head(2) == RowVector::Zero(2));
  }

  TEST_CASE("hier_loss errors") {
    const HierGraph g = two_by_two();
    LossConfig cfg = LossConfig::defaults(2);
    const std::vector<std::uint32_t> broken = {0, 3}, short_path = {0}, far = {0, 9};
    CHECK_THROWS_AS(hier_loss(RowVector::Zero(6), g, broken, cfg), DataError);
    CHECK_THROWS_AS(hier_loss(RowVector::Zero(6), g, short_path, cfg), DataError);
    CHECK_THROWS_AS(hier_loss(RowVector::Zero(6), g, far, cfg), DataError);
    cfg.level_weights = {1.0, 0.0};
    const std::vector<std::uint32_t> ok = {0, 1};
    CHECK_THROWS_AS(hier_loss(RowVector::Zero(6), g, ok, cfg), ConfigError);

    LossConfig marg = LossConfig::defaults(2);
    marg.strategy = LogitStrategy::marginalization;
    const RowVector extreme = (RowVector(6) << 0, 0, 10, -50, -50, -50).finished();
    const std::vector<std::uint32_t> other = {1, 3};
    CHECK_THROWS_AS(hier_loss(extreme, g, other, marg), ProbError);
  }

  TEST_CASE("hier_loss gradients match finite differences") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const HierGraph g = build_graph(oracle::random_taxonomy(rng, 2 + trial % 2));
      std::uniform_int_distribution<std::size_t> pick(0, g.leaf_range().size - 1);
      const auto path = ancestor_path(g, pick(rng));
      for (LogitStrategy strategy : {LogitStrategy::multi_label, LogitStrategy::marginalization}) {
        LossConfig cfg = LossConfig::defaults(g.levels());
        cfg.strategy = strategy;
        cfg.logit_scale = trial % 2 ? 1.0 : 10.0;
        Matrix scores = oracle::random_matrix(rng, 1, static_cast<Eigen::Index>(g.node_count()));
        const Matrix analytic = hier_loss(RowVector(scores), g, path, cfg).grad;
        const Matrix numeric = oracle::numeric_gradient(
            scores, [&] { return hier_loss(RowVector(scores), g, path, cfg).loss; }, 1e-5);
        CHECK(oracle::max_rel_error(analytic, numeric) < 1e-4);
      }
    }
  }

  TEST_CASE("shift invariance and weight scaling") {
    std::mt19937_64 rng(6);
    const HierGraph g = two_by_two();
    const std::vector<std::uint32_t> path = {0, 1};
    LossConfig cfg = LossConfig::defaults(2);
    cfg.logit_scale = 3.0;
    const RowVector s = oracle::random_matrix(rng, 1, 6);
    RowVector shifted = s;
    shifted.tail(4).array() += 0.7;
    const LossResult a = hier_loss(s, g, path, cfg), b = hier_loss(shifted, g, path, cfg);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-13));

    LossConfig heavy = cfg;
    for (double& w : heavy.level_weights) w *= 2.5;
    const LossResult c = hier_loss(s, g, path, heavy);
    CHECK(c.loss == doctest::Approx(2.5 * a.loss).epsilon(1e-13));
    CHECK((c.grad - 2.5 * a.grad).cwiseAbs().maxCoeff() < 1e-13);
  }

  TEST_CASE("predictions") {
    const HierGraph g = two_by_two();
    const RowVector s = (RowVector(6) << 0.9, 0.1, 0.0, 0.2, 0.5, 0.4).finished();
    CHECK(predict_levels(s, g, LogitStrategy::multi_label, 1.0) == std::vector<std::uint32_t>{0, 2});
    // Leaves l3 + l4 outweigh l1 + l2, so the marginal parent is P2.
    CHECK(predict_levels(s, g, LogitStrategy::marginalization, 1.0) == std::vector<std::uint32_t>{1, 2});
    const auto probs = level_probabilities(s, g, LogitStrategy::marginalization, 1.0);
    CHECK(std::abs(probs[0].sum() - 1.0) <= 1e-12);
  }
}
