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

#include "hgt/eval_report.hpp"

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hgt/error.hpp"
#include "hgt/objective.hpp"
#include "hgt/parallel.hpp"

namespace hgt {

std::vector<double> top1_per_level(const std::vector<LabelPath>& predictions,
                                   const std::vector<LabelPath>& labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError(std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ShapeError("no samples to score");
  const std::size_t h = labels.front().size();
  std::vector<std::size_t> hits(h, 0);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (predictions[n].size() != h || labels[n].size() != h) {
      throw ShapeError("prediction and label paths must have the same length");
    }
    for (std::size_t i = 0; i < h; ++i) hits[i] += predictions[n][i] == labels[n][i];
  }
  std::vector<double> acc(h);
  for (std::size_t i = 0; i < h; ++i) {
    acc[i] = static_cast<double>(hits[i]) / static_cast<double>(labels.size());
  }
  return acc;
}

double consistency(const std::vector<LabelPath>& predictions, const Taxonomy& t) {
  if (predictions.empty()) return 0.0;
  std::size_t ok = 0;
  for (const LabelPath& p : predictions) {
    bool chain = p.size() == t.levels();
    for (std::size_t i = 1; chain && i < p.size(); ++i) {
      chain = p[i] < t.level_size(i) && t.parent_of[i][p[i]] == p[i - 1];
    }
    ok += chain;
  }
  return static_cast<double>(ok) / static_cast<double>(predictions.size());
}

std::vector<LabelPath> predict(const ModelState& s, const Dataset& data,
                               const std::vector<ImageFeatures>& images, const TrainConfig& cfg) {
  const PreparedTables tables = prepare_tables(s, data, cfg);
  std::vector<LabelPath> out(images.size());
  parallel_for(images.size(), cfg.threads, [&](std::size_t i) {
    const RowVector scores = forward_scores(tables, s, images[i], cfg);
    out[i] = predict_levels(scores, data.graph, cfg.loss.strategy, cfg.loss.logit_scale);
  });
  return out;
}

EvalResult evaluate(const ModelState& s, const Dataset& data,
                    const std::vector<ImageFeatures>& images, const TrainConfig& cfg) {
  if (images.empty()) throw DataError("no images to evaluate");
  const std::vector<LabelPath> pred = predict(s, data, images, cfg);
  std::vector<LabelPath> labels;
  labels.reserve(images.size());
  for (const ImageFeatures& img : images) labels.push_back(img.label_path);
  EvalResult r;
  r.per_level_top1 = top1_per_level(pred, labels);
  r.consistency_rate = consistency(pred, data.taxonomy);
  r.n_samples = images.size();
  return r;
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::depth: return "depth";
    case SweepAxis::variant: return "variant";
    case SweepAxis::toggles: return "toggles";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "depth") return SweepAxis::depth;
  if (s == "variant") return SweepAxis::variant;
  if (s == "toggles") return SweepAxis::toggles;
  throw ConfigError("unknown sweep axis '" + s + "' (expected depth, variant or toggles)");
}

std::vector<SweepSetting> sweep_settings(SweepAxis axis, const TrainConfig& base) {
  std::vector<SweepSetting> out;
  switch (axis) {
    case SweepAxis::depth:
      for (std::size_t d = 1; d <= 5; ++d) {
        TrainConfig c = base;
        c.text_encoder.depth = d;
        c.visual_encoder.depth = d;
        out.push_back({"depth=" + std::to_string(d), c});
      }
      break;
    case SweepAxis::variant:
      for (EncoderVariant v : {EncoderVariant::gcn, EncoderVariant::gat, EncoderVariant::sage}) {
        TrainConfig c = base;
        c.text_encoder.variant = v;
        c.visual_encoder.variant = v;
        out.push_back({"variant=" + to_string(v), c});
      }
      break;
    case SweepAxis::toggles: {
      // Bits are TP TG VP VG: baseline, single stages, then combinations.
      constexpr const char* grid[] = {"0000", "1000", "0010", "1100", "0011",
                                      "1010", "1011", "1110", "1111"};
      for (const char* bits : grid) {
        TrainConfig c = base;
        c.toggles = {bits[0] == '1', bits[1] == '1', bits[2] == '1', bits[3] == '1'};
        out.push_back({std::string("toggles=") + bits, c});
      }
      break;
    }
  }
  return out;
}

std::vector<SweepRow> sweep(SweepAxis axis, const TrainConfig& base, const Dataset& data) {
  std::vector<SweepRow> rows;
  for (const SweepSetting& setting : sweep_settings(axis, base)) {
    const auto start = std::chrono::steady_clock::now();
    FitResult fitted = fit(data, setting.config);
    SweepRow row;
    row.setting = setting.name;
    row.result = evaluate(fitted.state, data, data.test, setting.config);
    row.seed = setting.config.seed;
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "setting,level,top1,consistency,n,seed,wall_time_s\n";
  for (const SweepRow& r : rows) {
    for (std::size_t i = 0; i < r.result.per_level_top1.size(); ++i) {
      out << r.setting << ',' << (i + 1) << ',' << fixed(r.result.per_level_top1[i], 6) << ','
          << fixed(r.result.consistency_rate, 6) << ',' << r.result.n_samples << ',' << r.seed
          << ',' << fixed(r.wall_time_s, 3) << '\n';
    }
  }
}

std::string format_table(const std::vector<SweepRow>& rows) {
  std::size_t width = 7;
  std::size_t levels = 0;
  for (const SweepRow& r : rows) {
    width = std::max(width, r.setting.size());
    levels = std::max(levels, r.result.per_level_top1.size());
  }
  std::ostringstream s;
  s << std::left << std::setw(static_cast<int>(width)) << "setting";
  for (std::size_t i = 0; i < levels; ++i) s << std::right << std::setw(9) << ("l" + std::to_string(i + 1));
  s << std::setw(13) << "consistency" << std::setw(7) << "n" << std::setw(10) << "time_s" << '\n';
  for (const SweepRow& r : rows) {
    s << std::left << std::setw(static_cast<int>(width)) << r.setting << std::right;
    for (double a : r.result.per_level_top1) s << std::setw(9) << fixed(100.0 * a, 2);
    s << std::setw(13) << fixed(100.0 * r.result.consistency_rate, 2) << std::setw(7)
      << r.result.n_samples << std::setw(10) << fixed(r.wall_time_s, 2) << '\n';
  }
  return s.str();
}

}  // namespace hgt
