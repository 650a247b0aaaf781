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

// Prototype attention fusion and the weighted logit combination.
//
// Given a prompted spatial map S ((M+v) x D) and graph-encoded prototypes P
// (K x D, unit rows):
//
//   psi   = normalize_rows(S) P^T                   attention map, (M+v) x K
//   F     = softmax_rows(psi / alpha) P             fused map, (M+v) x D
//   f_hat = normalize(mean_rows(F))
//
//   scores = lambda1 * f_tilde T^T + lambda2 * f_hat T^T
//
// with f_tilde the normalized prompted global feature and T the unit-row
// (graph-encoded) text table.

#pragma once

#include <vector>

#include "hgt/hierarchy.hpp"
#include "hgt/linalg.hpp"

namespace hgt {

enum class LogitStrategy { multi_label, marginalization };

std::string to_string(LogitStrategy s);
LogitStrategy parse_strategy(const std::string& s);

struct FusionConfig {
  double alpha = 0.25;
  double lambda1 = 1.0;
  double lambda2 = 0.2;

  // alpha = 1/sqrt(D), lambda1 = 1, lambda2 = 0.2.
  static FusionConfig defaults(std::size_t width);
  void validate() const;
};

struct LogitsBundle {
  RowVector scores;
  std::vector<LevelRange> level_ranges;
  LogitStrategy strategy = LogitStrategy::multi_label;
};

// psi = spatial * protos^T. Both inputs are expected to be row-normalized by
// the caller.
Matrix attention_map(const Matrix& spatial, const Matrix& protos);

// softmax_rows(psi / alpha) * protos.
Matrix attend(const Matrix& psi, const Matrix& protos, double alpha);

// Plain similarity logits f * T^T.
RowVector similarity_logits(const RowVector& feature, const Matrix& text);

RowVector combine_logits(const RowVector& global_prompted, const RowVector& global_fused,
                         const Matrix& text_hat, const FusionConfig& cfg);

// Differentiable fused global feature f_hat(S, P).
struct FusionTrace {
  Matrix spatial_unit;  // normalize_rows(S)
  Vector spatial_norms;
  Matrix weights;       // softmax_rows(psi / alpha)
  RowVector pooled;     // mean_rows(F)
  double pooled_norm = 0.0;
  RowVector fused_global;
};

RowVector fuse(const Matrix& spatial, const Matrix& protos, double alpha,
               FusionTrace* trace = nullptr);

struct FusionGradient {
  Matrix spatial;
  Matrix protos;
};

// Backpropagates dL/d f_hat through fuse().
FusionGradient fuse_backward(const FusionTrace& trace, const Matrix& protos, double alpha,
                             const RowVector& d_fused_global);

}  // namespace hgt
