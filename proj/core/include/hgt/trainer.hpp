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

// End-to-end model: forward pipeline, analytic backward, SGD with cosine
// annealing, training loop, and the finite-difference gradient check.
//
// Forward for one image (stages are skipped when their toggle is off):
//
//   T~  = normalize_rows(base + offsets)             TP (else base only)
//   T^  = normalize_rows(encode_t(T~))               TG
//   S~  = [S ; visual_prompt]                        VP
//   P^  = normalize_rows(encode_v(prototypes))       VG (else raw prototypes)
//   f~  = normalize(pool(S~))
//   f^  = fuse(S~, P^, alpha)                        only when lambda2 != 0
//   scores = lambda1 f~ T^^T + lambda2 f^ T^^T
//
// Prototypes are constants between refreshes; no gradient flows into them.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgt/embedding_store.hpp"
#include "hgt/fusion.hpp"
#include "hgt/graph_encoder.hpp"
#include "hgt/hierarchy.hpp"
#include "hgt/objective.hpp"

namespace hgt {

struct Toggles {
  bool text_prompt = true;    // TP
  bool text_graph = true;     // TG
  bool visual_prompt = true;  // VP
  bool visual_graph = true;   // VG

  static Toggles all_on() { return {}; }
  static Toggles all_off() { return {false, false, false, false}; }

  // "TP,TG,VP,VG" style list of enabled stages; "none" disables all.
  static Toggles parse(const std::string& s);
  std::string to_string() const;  // e.g. "TP,VP" or "none"
  std::string bits() const;       // e.g. "1010"

  friend bool operator==(const Toggles&, const Toggles&) = default;
};

struct TrainConfig {
  double lr0 = 3e-4;
  double lr_min = 0.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  Toggles toggles;
  EncoderInit text_encoder;
  EncoderInit visual_encoder;
  bool share_encoder = false;
  std::size_t visual_prompt_rows = 4;
  double prompt_init_std = 0.02;
  std::optional<double> alpha;  // defaults to 1/sqrt(D)
  double lambda1 = 1.0;
  double lambda2 = 0.2;
  LossConfig loss;

  // Defaults for an h-level hierarchy.
  static TrainConfig defaults(std::size_t levels);
  FusionConfig fusion(std::size_t width) const;
  void validate(std::size_t levels) const;
};

struct Dataset {
  Taxonomy taxonomy;
  HierGraph graph;
  Matrix text_base;  // K x D
  std::vector<ImageFeatures> train;
  std::vector<ImageFeatures> test;

  std::size_t width() const { return static_cast<std::size_t>(text_base.cols()); }
  // Throws DataError / ShapeError if the pieces disagree.
  void validate() const;
};

struct ModelState {
  Matrix text_offsets;   // K x D
  Matrix visual_prompt;  // v x D
  EncoderParams text_encoder;
  EncoderParams visual_encoder;
  PrototypeTable prototypes;
  std::uint64_t step = 0;
};

// Named views of the parameter blocks. `trainable_blocks` lists only the
// blocks the configured pipeline actually uses.
struct BlockRef {
  std::string name;
  Matrix* value;
};
std::vector<BlockRef> all_blocks(ModelState& s);
std::vector<BlockRef> trainable_blocks(ModelState& s, const TrainConfig& cfg);

ModelState init_state(const Dataset& data, const TrainConfig& cfg);

// Recomputes prototypes from the training split's prompted global features.
void refresh_prototypes(ModelState& s, const Dataset& data, const TrainConfig& cfg);

// Per-batch tables: encoded text and prototypes plus their traces.
struct PreparedTables {
  Matrix text_prompted;
  Vector text_prompted_norms;
  Matrix text_encoded;
  EncoderTrace text_trace;
  Matrix text_hat;
  Vector text_hat_norms;

  Matrix proto_encoded;
  EncoderTrace proto_trace;
  Matrix proto_hat;
  Vector proto_hat_norms;
};

PreparedTables prepare_tables(const ModelState& s, const Dataset& data, const TrainConfig& cfg);

struct SampleTrace {
  Matrix spatial;  // S~
  RowVector pooled;
  double pooled_norm = 0.0;
  RowVector global_prompted;  // f~
  bool fused = false;
  FusionTrace fusion;
};

RowVector forward_scores(const PreparedTables& tables, const ModelState& s,
                         const ImageFeatures& image, const TrainConfig& cfg,
                         SampleTrace* trace = nullptr);

LogitsBundle forward(const ModelState& s, const ImageFeatures& image, const Dataset& data,
                     const TrainConfig& cfg);

// Gradient in the same layout as ModelState (prototypes unused).
ModelState zero_gradient(const ModelState& s);

struct SampleGradient {
  Matrix text_hat;       // dL/dT^
  Matrix proto_hat;      // dL/dP^
  Matrix visual_prompt;  // dL/d prompt rows
};

SampleGradient backward_sample(const PreparedTables& tables, const ModelState& s,
                               const SampleTrace& trace, const RowVector& d_scores,
                               const TrainConfig& cfg);

// Pushes accumulated table gradients through normalization and the encoders.
void backward_tables(const PreparedTables& tables, const ModelState& s, const Dataset& data,
                     const TrainConfig& cfg, const Matrix& d_text_hat, const Matrix& d_proto_hat,
                     ModelState& grad);

struct BatchResult {
  double loss = 0.0;  // mean over the batch
  ModelState grad;
};

// Mean loss and gradient over `samples`. Per-sample work runs on cfg.threads
// workers; reductions use a fixed pairwise tree so the result does not depend
// on the thread count.
BatchResult loss_and_gradient(const ModelState& s, const Dataset& data,
                              std::span<const ImageFeatures> samples,
                              std::span<const std::size_t> indices, const TrainConfig& cfg);

double cosine_lr(std::size_t step, std::size_t total, double lr0, double lr_min);

// p <- p - lr * g over the trainable blocks. Throws ShapeError on mismatched
// shapes and NaNError if any updated parameter is non-finite.
void sgd_step(ModelState& s, ModelState& grad, double lr, const TrainConfig& cfg);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double wall_time_s = 0.0;
};

struct FitResult {
  ModelState state;
  std::vector<EpochMetrics> log;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

FitResult fit(const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct GradcheckBlock {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
  bool flagged = false;
};

struct GradcheckReport {
  std::vector<GradcheckBlock> blocks;
  bool ok() const;
};

struct GradcheckOptions {
  double step = 1e-4;
  double threshold = 1e-3;
  // Relative errors use max(|analytic|, |numeric|, floor) as denominator.
  // Central differences at step 1e-4 carry ~1e-12 of rounding noise, so
  // entries that are exactly zero need a floor well above that.
  double floor = 1e-6;
  // Test hook applied to the analytic gradient before comparison.
  std::function<void(ModelState&)> corrupt;
};

GradcheckReport gradcheck(const ModelState& s, const Dataset& data,
                          std::span<const ImageFeatures> samples, const TrainConfig& cfg,
                          const GradcheckOptions& opts = {});

}  // namespace hgt
