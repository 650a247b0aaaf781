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

// Per-level logit partitioning, the two supported probability strategies,
// and the weighted multi-level cross-entropy.
//
// Cross-entropy is taken over scale * scores, where `logit_scale` plays the
// role of the fixed CLIP temperature (scores are cosine similarities in
// [-1, 1]; without a scale the softmax stays close to uniform).

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hgt/fusion.hpp"
#include "hgt/hierarchy.hpp"
#include "hgt/linalg.hpp"

namespace hgt {

struct LossConfig {
  std::vector<double> level_weights;  // one positive weight per level
  LogitStrategy strategy = LogitStrategy::multi_label;
  double logit_scale = 100.0;

  // w = [1, ..., 1, 2].
  static LossConfig defaults(std::size_t levels);
  void validate(std::size_t levels) const;
};

std::vector<Vector> partition(const LogitsBundle& bundle);
std::vector<Vector> partition(const RowVector& scores, std::span<const LevelRange> ranges);

// Independent softmax per level over scale * scores.
std::vector<Vector> multi_label_probs(const std::vector<Vector>& per_level, double scale = 1.0);

// Probability of every node on every level obtained by summing the leaf
// distribution over each node's descendants. Throws ProbError when
// `leaf_probs` is not a distribution.
std::vector<Vector> marginalize(const Vector& leaf_probs, const HierGraph& g);

// Per-level probabilities under the configured strategy.
std::vector<Vector> level_probabilities(const RowVector& scores, const HierGraph& g,
                                        LogitStrategy strategy, double scale);

// Per-level argmax predictions (index within each level).
std::vector<std::uint32_t> predict_levels(const RowVector& scores, const HierGraph& g,
                                          LogitStrategy strategy, double scale);

struct LossResult {
  double loss = 0.0;
  RowVector grad;  // dL/d scores, length K
  std::vector<double> per_level;
};

// sum_i w_i * CE(label_path[i], level i). Throws DataError for an invalid label
// path and ProbError when the marginalized probability of a ground-truth node
// underflows to zero.
LossResult hier_loss(const RowVector& scores, const HierGraph& g,
                     std::span<const std::uint32_t> label_path, const LossConfig& cfg);

}  // namespace hgt
