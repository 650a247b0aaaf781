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

#include "hgt/fusion.hpp"

#include <cmath>

#include "hgt/embedding_store.hpp"
#include "hgt/error.hpp"

namespace hgt {

std::string to_string(LogitStrategy s) {
  return s == LogitStrategy::multi_label ? "multi_label" : "marginalization";
}

LogitStrategy parse_strategy(const std::string& s) {
  if (s == "multi_label") return LogitStrategy::multi_label;
  if (s == "marginalization") return LogitStrategy::marginalization;
  throw ConfigError("unknown logit strategy '" + s + "' (expected multi_label or marginalization)");
}

FusionConfig FusionConfig::defaults(std::size_t width) {
  FusionConfig cfg;
  cfg.alpha = 1.0 / std::sqrt(static_cast<double>(width));
  return cfg;
}

void FusionConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1 and lambda2 must be >= 0");
}

Matrix attention_map(const Matrix& spatial, const Matrix& protos) {
  if (spatial.cols() != protos.cols()) {
    throw ShapeError("spatial width " + std::to_string(spatial.cols()) +
                     " does not match prototype width " + std::to_string(protos.cols()));
  }
  return spatial * protos.transpose();
}

Matrix attend(const Matrix& psi, const Matrix& protos, double alpha) {
  if (psi.cols() != protos.rows()) {
    throw ShapeError("attention map has " + std::to_string(psi.cols()) + " columns for " +
                     std::to_string(protos.rows()) + " prototypes");
  }
  return row_softmax(psi, alpha) * protos;
}

RowVector similarity_logits(const RowVector& feature, const Matrix& text) {
  if (feature.cols() != text.cols()) throw ShapeError("feature width does not match text table");
  return feature * text.transpose();
}

RowVector combine_logits(const RowVector& global_prompted, const RowVector& global_fused,
                         const Matrix& text_hat, const FusionConfig& cfg) {
  RowVector scores = cfg.lambda1 * similarity_logits(global_prompted, text_hat);
  if (cfg.lambda2 != 0.0) scores += cfg.lambda2 * similarity_logits(global_fused, text_hat);
  return scores;
}

RowVector fuse(const Matrix& spatial, const Matrix& protos, double alpha, FusionTrace* trace) {
  FusionTrace local;
  FusionTrace& t = trace ? *trace : local;
  t.spatial_unit = normalize_rows(spatial, &t.spatial_norms);
  const Matrix psi = attention_map(t.spatial_unit, protos);
  t.weights = row_softmax(psi, alpha);
  t.pooled = pool(t.weights * protos);
  t.fused_global = normalize(t.pooled, &t.pooled_norm);
  return t.fused_global;
}

FusionGradient fuse_backward(const FusionTrace& t, const Matrix& protos, double alpha,
                             const RowVector& d_fused_global) {
  const Eigen::Index rows = t.weights.rows();
  const RowVector d_pooled = normalize_backward(t.fused_global, t.pooled_norm, d_fused_global);
  // Every fused row receives d_pooled / rows; the outer products below use that.
  const RowVector d_row = d_pooled / static_cast<double>(rows);

  FusionGradient g;
  // dF = 1 d_row, so dW = 1 (d_row P^T) and dP += W^T 1 d_row.
  const RowVector dw_row = d_row * protos.transpose();  // 1 x K, same for every row
  g.protos = t.weights.colwise().sum().transpose() * d_row;

  Matrix d_psi(rows, t.weights.cols());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double inner = t.weights.row(r).dot(dw_row);
    d_psi.row(r) = t.weights.row(r).cwiseProduct(dw_row.array().matrix() -
                                                 RowVector::Constant(dw_row.size(), inner)) /
                   alpha;
  }
  g.protos += d_psi.transpose() * t.spatial_unit;
  const Matrix d_unit = d_psi * protos;
  g.spatial = normalize_rows_backward(t.spatial_unit, t.spatial_norms, d_unit);
  return g;
}

}  // namespace hgt
