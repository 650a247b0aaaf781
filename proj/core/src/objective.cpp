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

#include "hgt/objective.hpp"

#include <algorithm>
#include <cmath>

#include "hgt/error.hpp"

namespace hgt {

LossConfig LossConfig::defaults(std::size_t levels) {
  LossConfig cfg;
  cfg.level_weights.assign(levels, 1.0);
  if (levels > 0) cfg.level_weights.back() = 2.0;
  return cfg;
}

void LossConfig::validate(std::size_t levels) const {
  if (level_weights.size() != levels) {
    throw ConfigError("expected " + std::to_string(levels) + " level weights, got " +
                      std::to_string(level_weights.size()));
  }
  for (double w : level_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("level weights must be positive");
  }
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) {
    throw ConfigError("logit scale must be positive");
  }
}

std::vector<Vector> partition(const RowVector& scores, std::span<const LevelRange> ranges) {
  std::size_t total = 0;
  for (const LevelRange& r : ranges) {
    if (r.start != total) throw ShapeError("level ranges are not contiguous");
    total += r.size;
  }
  if (total != static_cast<std::size_t>(scores.size())) {
    throw ShapeError("score vector has length " + std::to_string(scores.size()) +
                     ", level ranges cover " + std::to_string(total));
  }
  std::vector<Vector> out;
  out.reserve(ranges.size());
  for (const LevelRange& r : ranges) {
    out.emplace_back(scores.segment(static_cast<Eigen::Index>(r.start),
                                    static_cast<Eigen::Index>(r.size)).transpose());
  }
  return out;
}

std::vector<Vector> partition(const LogitsBundle& bundle) {
  return partition(bundle.scores, bundle.level_ranges);
}

std::vector<Vector> multi_label_probs(const std::vector<Vector>& per_level, double scale) {
  std::vector<Vector> out;
  out.reserve(per_level.size());
  for (const Vector& s : per_level) out.push_back(softmax(s, scale));
  return out;
}

std::vector<Vector> marginalize(const Vector& leaf_probs, const HierGraph& g) {
  const LevelRange leaves = g.leaf_range();
  if (static_cast<std::size_t>(leaf_probs.size()) != leaves.size) {
    throw ProbError("leaf distribution has " + std::to_string(leaf_probs.size()) +
                    " entries, hierarchy has " + std::to_string(leaves.size) + " leaves");
  }
  if (!leaf_probs.allFinite() || (leaf_probs.array() < 0.0).any()) {
    throw ProbError("leaf probabilities must be finite and nonnegative");
  }
  if (std::abs(leaf_probs.sum() - 1.0) > 1e-9) {
    throw ProbError("leaf probabilities sum to " + std::to_string(leaf_probs.sum()));
  }
  std::vector<Vector> out(g.levels());
  out.back() = leaf_probs;
  for (std::size_t level = g.levels() - 1; level-- > 0;) {
    const LevelRange r = g.level_ranges[level];
    const LevelRange below = g.level_ranges[level + 1];
    Vector p = Vector::Zero(static_cast<Eigen::Index>(r.size));
    for (std::size_t node = r.start; node < r.end(); ++node) {
      for (std::size_t c : g.children[node]) {
        p(static_cast<Eigen::Index>(node - r.start)) +=
            out[level + 1](static_cast<Eigen::Index>(c - below.start));
      }
    }
    out[level] = std::move(p);
  }
  return out;
}

std::vector<Vector> level_probabilities(const RowVector& scores, const HierGraph& g,
                                        LogitStrategy strategy, double scale) {
  const std::vector<Vector> levels = partition(scores, g.level_ranges);
  if (strategy == LogitStrategy::multi_label) return multi_label_probs(levels, scale);
  return marginalize(softmax(levels.back(), scale), g);
}

std::vector<std::uint32_t> predict_levels(const RowVector& scores, const HierGraph& g,
                                          LogitStrategy strategy, double scale) {
  std::vector<std::uint32_t> pred;
  if (strategy == LogitStrategy::multi_label) {
    // Softmax is monotone, so argmax of raw scores per level suffices.
    for (const Vector& s : partition(scores, g.level_ranges)) {
      Eigen::Index idx = 0;
      s.maxCoeff(&idx);
      pred.push_back(static_cast<std::uint32_t>(idx));
    }
    return pred;
  }
  for (const Vector& p : level_probabilities(scores, g, strategy, scale)) {
    Eigen::Index idx = 0;
    p.maxCoeff(&idx);
    pred.push_back(static_cast<std::uint32_t>(idx));
  }
  return pred;
}

namespace {

void check_label_path(const HierGraph& g, std::span<const std::uint32_t> path) {
  if (path.size() != g.levels()) {
    throw DataError("label path has " + std::to_string(path.size()) + " entries for a " +
                    std::to_string(g.levels()) + "-level hierarchy");
  }
  for (std::size_t level = 0; level < path.size(); ++level) {
    if (path[level] >= g.level_ranges[level].size) {
      throw DataError("label " + std::to_string(path[level]) + " out of range on level " +
                      std::to_string(level + 1));
    }
    if (level > 0) {
      const std::size_t node = g.node_id(level, path[level]);
      if (g.parent[node] != g.node_id(level - 1, path[level - 1])) {
        throw DataError("label path is not a chain of the hierarchy at level " +
                        std::to_string(level + 1));
      }
    }
  }
}

}  // namespace

LossResult hier_loss(const RowVector& scores, const HierGraph& g,
                     std::span<const std::uint32_t> label_path, const LossConfig& cfg) {
  cfg.validate(g.levels());
  check_label_path(g, label_path);
  const std::vector<Vector> levels = partition(scores, g.level_ranges);
  const double s = cfg.logit_scale;

  LossResult out;
  out.grad = RowVector::Zero(scores.size());
  out.per_level.resize(g.levels());

  if (cfg.strategy == LogitStrategy::multi_label) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const Vector z = s * levels[i];
      const double ce = log_sum_exp(z) - z(label_path[i]);
      out.per_level[i] = ce;
      out.loss += cfg.level_weights[i] * ce;
      Vector d = softmax(z);
      d(label_path[i]) -= 1.0;
      out.grad.segment(static_cast<Eigen::Index>(g.level_ranges[i].start), d.size()) =
          (cfg.level_weights[i] * s) * d.transpose();
    }
    return out;
  }

  // Marginalization: only the leaf slice carries scores.
  const Vector leaf = softmax(levels.back(), s);
  const std::vector<Vector> probs = marginalize(leaf, g);
  const LevelRange leaves = g.leaf_range();
  Vector d_leaf = Vector::Zero(leaf.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i](label_path[i]);
    if (!(p > 0.0)) {
      throw ProbError("ground-truth probability underflows to zero on level " +
                      std::to_string(i + 1));
    }
    out.per_level[i] = -std::log(p);
    out.loss += cfg.level_weights[i] * out.per_level[i];
    // d(-w log p)/d leaf_l = -w / p for every leaf below the ground-truth node.
    const std::size_t gt = g.node_id(i, label_path[i]);
    for (std::size_t l = 0; l < leaves.size; ++l) {
      std::size_t node = leaves.start + l;
      while (g.level_of[node] > i) node = g.parent[node];
      if (node == gt) d_leaf(static_cast<Eigen::Index>(l)) -= cfg.level_weights[i] / p;
    }
  }
  const double inner = leaf.dot(d_leaf);
  const Vector dz = s * leaf.cwiseProduct((d_leaf.array() - inner).matrix());
  out.grad.segment(static_cast<Eigen::Index>(leaves.start), dz.size()) = dz.transpose();
  return out;
}

}  // namespace hgt
