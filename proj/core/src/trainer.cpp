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

#include "hgt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "hgt/error.hpp"
#include "hgt/parallel.hpp"

namespace hgt {

Toggles Toggles::parse(const std::string& s) {
  Toggles t = all_off();
  if (s == "none" || s.empty()) return t;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "TP") t.text_prompt = true;
    else if (item == "TG") t.text_graph = true;
    else if (item == "VP") t.visual_prompt = true;
    else if (item == "VG") t.visual_graph = true;
    else if (item == "all") t = all_on();
    else throw ConfigError("unknown toggle '" + item + "' (expected TP, TG, VP, VG)");
  }
  return t;
}

std::string Toggles::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(text_prompt, "TP");
  add(text_graph, "TG");
  add(visual_prompt, "VP");
  add(visual_graph, "VG");
  return out.empty() ? "none" : out;
}

std::string Toggles::bits() const {
  std::string b;
  for (bool on : {text_prompt, text_graph, visual_prompt, visual_graph}) b += on ? '1' : '0';
  return b;
}

TrainConfig TrainConfig::defaults(std::size_t levels) {
  TrainConfig cfg;
  cfg.loss = LossConfig::defaults(levels);
  return cfg;
}

FusionConfig TrainConfig::fusion(std::size_t width) const {
  FusionConfig f = FusionConfig::defaults(width);
  if (alpha) f.alpha = *alpha;
  f.lambda1 = lambda1;
  f.lambda2 = lambda2;
  return f;
}

void TrainConfig::validate(std::size_t levels) const {
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw ConfigError("learning rate must be >= 0");
  if (lr_min < 0.0 || lr_min > lr0) throw ConfigError("lr_min must lie in [0, lr0]");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (text_encoder.depth < 1 || visual_encoder.depth < 1) throw ConfigError("depth must be >= 1");
  if (alpha && !(*alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda1 and lambda2 must be >= 0");
  loss.validate(levels);
}

void Dataset::validate() const {
  taxonomy.validate();
  if (graph.node_count() != taxonomy.node_count()) {
    throw DataError("graph does not match the taxonomy");
  }
  if (static_cast<std::size_t>(text_base.rows()) != graph.node_count()) {
    throw ShapeError("text table has " + std::to_string(text_base.rows()) + " rows for " +
                     std::to_string(graph.node_count()) + " hierarchy nodes");
  }
  const std::size_t d = width();
  for (const auto* split : {&train, &test}) {
    for (const ImageFeatures& img : *split) {
      if (img.width() != d) {
        throw ShapeError("image feature width " + std::to_string(img.width()) +
                         " does not match text width " + std::to_string(d));
      }
      if (img.label_path.size() != graph.levels()) {
        throw DataError("image label path length does not match the hierarchy depth");
      }
      for (std::size_t level = 0; level < graph.levels(); ++level) {
        if (img.label_path[level] >= graph.level_ranges[level].size) {
          throw DataError("image label out of range on level " + std::to_string(level + 1));
        }
      }
    }
  }
}

namespace {

void encoder_blocks(EncoderParams& p, const std::string& prefix, std::vector<BlockRef>& out) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    LayerParams& layer = p.layers[l];
    const std::string base = prefix + "." + std::to_string(l) + ".";
    out.push_back({base + "weight", &layer.weight});
    if (p.variant == EncoderVariant::sage) out.push_back({base + "neighbor_weight", &layer.neighbor_weight});
    if (p.variant == EncoderVariant::gat) out.push_back({base + "attention", &layer.attention});
  }
}

const EncoderParams& visual_params(const ModelState& s, const TrainConfig& cfg) {
  return cfg.share_encoder ? s.text_encoder : s.visual_encoder;
}

void add_into(EncoderParams& acc, const EncoderParams& g) {
  for (std::size_t l = 0; l < acc.layers.size(); ++l) {
    acc.layers[l].weight += g.layers[l].weight;
    if (acc.layers[l].neighbor_weight.size()) acc.layers[l].neighbor_weight += g.layers[l].neighbor_weight;
    if (acc.layers[l].attention.size()) acc.layers[l].attention += g.layers[l].attention;
  }
}

Matrix stack_prompt(const Matrix& spatial, const Matrix& prompt) {
  Matrix out(spatial.rows() + prompt.rows(), spatial.cols());
  out.topRows(spatial.rows()) = spatial;
  out.bottomRows(prompt.rows()) = prompt;
  return out;
}

}  // namespace

std::vector<BlockRef> all_blocks(ModelState& s) {
  std::vector<BlockRef> out;
  out.push_back({"text_offsets", &s.text_offsets});
  out.push_back({"visual_prompt", &s.visual_prompt});
  encoder_blocks(s.text_encoder, "text_encoder", out);
  encoder_blocks(s.visual_encoder, "visual_encoder", out);
  return out;
}

std::vector<BlockRef> trainable_blocks(ModelState& s, const TrainConfig& cfg) {
  std::vector<BlockRef> out;
  const Toggles& t = cfg.toggles;
  if (t.text_prompt) out.push_back({"text_offsets", &s.text_offsets});
  if (t.visual_prompt) out.push_back({"visual_prompt", &s.visual_prompt});
  if (t.text_graph || (cfg.share_encoder && t.visual_graph)) {
    encoder_blocks(s.text_encoder, "text_encoder", out);
  }
  if (t.visual_graph && !cfg.share_encoder) encoder_blocks(s.visual_encoder, "visual_encoder", out);
  return out;
}

ModelState init_state(const Dataset& data, const TrainConfig& cfg) {
  data.validate();
  cfg.validate(data.graph.levels());
  const auto k = static_cast<Eigen::Index>(data.graph.node_count());
  const auto d = static_cast<Eigen::Index>(data.width());
  std::mt19937_64 rng(cfg.seed);

  ModelState s;
  s.text_offsets = Matrix::Zero(k, d);
  s.visual_prompt.resize(static_cast<Eigen::Index>(cfg.visual_prompt_rows), d);
  std::normal_distribution<double> normal(0.0, cfg.prompt_init_std);
  for (Eigen::Index i = 0; i < s.visual_prompt.size(); ++i) s.visual_prompt.data()[i] = normal(rng);
  s.text_encoder = init_encoder(cfg.text_encoder, data.width(), rng);
  s.visual_encoder = init_encoder(cfg.visual_encoder, data.width(), rng);
  for (BlockRef b : all_blocks(s)) round_to_float(*b.value);
  refresh_prototypes(s, data, cfg);
  return s;
}

void refresh_prototypes(ModelState& s, const Dataset& data, const TrainConfig& cfg) {
  if (data.train.empty()) throw DataError("training split is empty");
  Matrix globals(static_cast<Eigen::Index>(data.train.size()), static_cast<Eigen::Index>(data.width()));
  std::vector<std::uint32_t> leaves(data.train.size());
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    const ImageFeatures& img = data.train[i];
    globals.row(static_cast<Eigen::Index>(i)) =
        cfg.toggles.visual_prompt ? pool(stack_prompt(img.spatial, s.visual_prompt)) : img.global;
    leaves[i] = img.label_path.back();
  }
  s.prototypes = prototypes_from_globals(globals, leaves, data.taxonomy, data.graph);
  round_to_float(s.prototypes.values);
}

PreparedTables prepare_tables(const ModelState& s, const Dataset& data, const TrainConfig& cfg) {
  PreparedTables t;
  const Adjacency& adj = data.graph.adjacency;
  t.text_prompted = cfg.toggles.text_prompt
                        ? normalize_rows(data.text_base + s.text_offsets, &t.text_prompted_norms)
                        : normalize_rows(data.text_base, &t.text_prompted_norms);
  if (cfg.toggles.text_graph) {
    t.text_encoded = encode(adj, t.text_prompted, s.text_encoder, &t.text_trace);
    t.text_hat = normalize_rows(t.text_encoded, &t.text_hat_norms);
  } else {
    t.text_hat = t.text_prompted;
  }
  if (cfg.lambda2 != 0.0) {
    if (cfg.toggles.visual_graph) {
      t.proto_encoded = encode(adj, s.prototypes.values, visual_params(s, cfg), &t.proto_trace);
      t.proto_hat = normalize_rows(t.proto_encoded, &t.proto_hat_norms);
    } else {
      t.proto_hat = normalize_rows(s.prototypes.values, &t.proto_hat_norms);
    }
  }
  return t;
}

RowVector forward_scores(const PreparedTables& tables, const ModelState& s,
                         const ImageFeatures& image, const TrainConfig& cfg, SampleTrace* trace) {
  SampleTrace local;
  SampleTrace& tr = trace ? *trace : local;
  const FusionConfig fc = cfg.fusion(static_cast<std::size_t>(image.spatial.cols()));
  tr.spatial = cfg.toggles.visual_prompt ? stack_prompt(image.spatial, s.visual_prompt) : image.spatial;
  tr.pooled = pool(tr.spatial);
  tr.global_prompted = normalize(tr.pooled, &tr.pooled_norm);
  RowVector fused;
  tr.fused = fc.lambda2 != 0.0;
  if (tr.fused) fused = fuse(tr.spatial, tables.proto_hat, fc.alpha, &tr.fusion);
  return combine_logits(tr.global_prompted, fused, tables.text_hat, fc);
}

LogitsBundle forward(const ModelState& s, const ImageFeatures& image, const Dataset& data,
                     const TrainConfig& cfg) {
  const PreparedTables tables = prepare_tables(s, data, cfg);
  LogitsBundle b;
  b.scores = forward_scores(tables, s, image, cfg);
  b.level_ranges = data.graph.level_ranges;
  b.strategy = cfg.loss.strategy;
  return b;
}

ModelState zero_gradient(const ModelState& s) {
  ModelState g;
  g.text_offsets = Matrix::Zero(s.text_offsets.rows(), s.text_offsets.cols());
  g.visual_prompt = Matrix::Zero(s.visual_prompt.rows(), s.visual_prompt.cols());
  g.text_encoder = s.text_encoder.zeros_like();
  g.visual_encoder = s.visual_encoder.zeros_like();
  return g;
}

SampleGradient backward_sample(const PreparedTables& tables, const ModelState& s,
                               const SampleTrace& tr, const RowVector& d_scores,
                               const TrainConfig& cfg) {
  const FusionConfig fc = cfg.fusion(static_cast<std::size_t>(tr.spatial.cols()));
  SampleGradient g;
  RowVector mix = fc.lambda1 * tr.global_prompted;
  if (tr.fused) mix += fc.lambda2 * tr.fusion.fused_global;
  g.text_hat = d_scores.transpose() * mix;

  const Eigen::Index rows = tr.spatial.rows();
  const RowVector d_prompted = fc.lambda1 * (d_scores * tables.text_hat);
  const RowVector d_pooled = normalize_backward(tr.global_prompted, tr.pooled_norm, d_prompted);
  Matrix d_spatial = (Vector::Ones(rows) * d_pooled) / static_cast<double>(rows);

  if (tr.fused) {
    const RowVector d_fused = fc.lambda2 * (d_scores * tables.text_hat);
    FusionGradient fg = fuse_backward(tr.fusion, tables.proto_hat, fc.alpha, d_fused);
    d_spatial += fg.spatial;
    g.proto_hat = std::move(fg.protos);
  } else {
    g.proto_hat = Matrix::Zero(s.prototypes.values.rows(), s.prototypes.values.cols());
  }
  if (cfg.toggles.visual_prompt) {
    g.visual_prompt = d_spatial.bottomRows(s.visual_prompt.rows());
  } else {
    g.visual_prompt = Matrix::Zero(s.visual_prompt.rows(), s.visual_prompt.cols());
  }
  return g;
}

void backward_tables(const PreparedTables& tables, const ModelState& s, const Dataset& data,
                     const TrainConfig& cfg, const Matrix& d_text_hat, const Matrix& d_proto_hat,
                     ModelState& grad) {
  const Adjacency& adj = data.graph.adjacency;
  Matrix d_prompted = d_text_hat;
  if (cfg.toggles.text_graph) {
    const Matrix d_enc = normalize_rows_backward(tables.text_hat, tables.text_hat_norms, d_text_hat);
    EncoderGradient eg = encoder_backward(adj, s.text_encoder, tables.text_trace, d_enc);
    add_into(grad.text_encoder, eg.params);
    d_prompted = std::move(eg.input);
  }
  if (cfg.toggles.text_prompt) {
    grad.text_offsets +=
        normalize_rows_backward(tables.text_prompted, tables.text_prompted_norms, d_prompted);
  }
  if (cfg.toggles.visual_graph && cfg.lambda2 != 0.0) {
    const Matrix d_enc = normalize_rows_backward(tables.proto_hat, tables.proto_hat_norms, d_proto_hat);
    EncoderGradient eg = encoder_backward(adj, visual_params(s, cfg), tables.proto_trace, d_enc);
    add_into(cfg.share_encoder ? grad.text_encoder : grad.visual_encoder, eg.params);
  }
}

BatchResult loss_and_gradient(const ModelState& s, const Dataset& data,
                              std::span<const ImageFeatures> samples,
                              std::span<const std::size_t> indices, const TrainConfig& cfg) {
  if (indices.empty()) throw DataError("empty batch");
  const PreparedTables tables = prepare_tables(s, data, cfg);
  const std::size_t n = indices.size();
  std::vector<double> losses(n);
  std::vector<Matrix> d_text(n), d_proto(n), d_prompt(n);

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const ImageFeatures& img = samples[indices[i]];
    SampleTrace tr;
    const RowVector scores = forward_scores(tables, s, img, cfg, &tr);
    const LossResult lr = hier_loss(scores, data.graph, img.label_path, cfg.loss);
    SampleGradient sg = backward_sample(tables, s, tr, lr.grad, cfg);
    losses[i] = lr.loss;
    d_text[i] = std::move(sg.text_hat);
    d_proto[i] = std::move(sg.proto_hat);
    d_prompt[i] = std::move(sg.visual_prompt);
  });

  const double inv = 1.0 / static_cast<double>(n);
  BatchResult out;
  out.loss = pairwise_sum(losses) * inv;
  out.grad = zero_gradient(s);
  const Matrix dt = pairwise_sum(d_text) * inv;
  const Matrix dp = pairwise_sum(d_proto) * inv;
  if (cfg.toggles.visual_prompt) out.grad.visual_prompt = pairwise_sum(d_prompt) * inv;
  backward_tables(tables, s, data, cfg, dt, dp, out.grad);
  return out;
}

double cosine_lr(std::size_t step, std::size_t total, double lr0, double lr_min) {
  if (total < 1) throw RangeError("cosine schedule needs total >= 1");
  if (step > total) {
    throw RangeError("step " + std::to_string(step) + " exceeds schedule length " +
                     std::to_string(total));
  }
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

void sgd_step(ModelState& s, ModelState& grad, double lr, const TrainConfig& cfg) {
  auto params = trainable_blocks(s, cfg);
  auto grads = trainable_blocks(grad, cfg);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i].value;
    const Matrix& g = *grads[i].value;
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw ShapeError("gradient for '" + params[i].name + "' has the wrong shape");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i].value;
    p -= lr * *grads[i].value;
    round_to_float(p);
    if (!p.allFinite()) throw NaNError("non-finite values in '" + params[i].name + "' after step");
  }
  ++s.step;
}

FitResult fit(const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (data.train.empty()) throw DataError("training split is empty");
  FitResult out;
  out.state = init_state(data, cfg);
  ModelState& s = out.state;

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr0, cfg.lr_min);
    refresh_prototypes(s, data, cfg);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    std::vector<double> batch_losses;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + b, end - b);
      BatchResult br = loss_and_gradient(s, data, data.train, idx, cfg);
      if (!std::isfinite(br.loss)) throw NaNError("non-finite loss in epoch " + std::to_string(epoch + 1));
      batch_losses.push_back(br.loss * static_cast<double>(idx.size()));
      sgd_step(s, br.grad, lr, cfg);
    }
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.lr = lr;
    m.loss = pairwise_sum(batch_losses) / static_cast<double>(order.size());
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.log.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  refresh_prototypes(s, data, cfg);
  return out;
}

bool GradcheckReport::ok() const {
  return std::none_of(blocks.begin(), blocks.end(), [](const GradcheckBlock& b) { return b.flagged; });
}

GradcheckReport gradcheck(const ModelState& s0, const Dataset& data,
                          std::span<const ImageFeatures> samples, const TrainConfig& cfg,
                          const GradcheckOptions& opts) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  ModelState s = s0;
  BatchResult analytic = loss_and_gradient(s, data, samples, idx, cfg);
  if (opts.corrupt) opts.corrupt(analytic.grad);

  auto loss_at = [&](const ModelState& state) {
    const PreparedTables tables = prepare_tables(state, data, cfg);
    std::vector<double> losses;
    for (const ImageFeatures& img : samples) {
      losses.push_back(hier_loss(forward_scores(tables, state, img, cfg), data.graph,
                                 img.label_path, cfg.loss).loss);
    }
    return pairwise_sum(losses) / static_cast<double>(losses.size());
  };

  GradcheckReport report;
  auto params = trainable_blocks(s, cfg);
  auto grads = trainable_blocks(analytic.grad, cfg);
  for (std::size_t b = 0; b < params.size(); ++b) {
    Matrix& p = *params[b].value;
    const Matrix& g = *grads[b].value;
    GradcheckBlock block;
    block.name = params[b].name;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + opts.step;
      const double up = loss_at(s);
      p.data()[i] = saved - opts.step;
      const double down = loss_at(s);
      p.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = g.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
      block.max_rel_error = std::max(block.max_rel_error, std::abs(a - numeric) / denom);
      block.max_abs_analytic = std::max(block.max_abs_analytic, std::abs(a));
    }
    block.flagged = block.max_rel_error > opts.threshold;
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace hgt
