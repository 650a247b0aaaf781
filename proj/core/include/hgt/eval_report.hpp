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

// Per-level accuracy, cross-level consistency, configuration sweeps and
// their CSV / plain-text reports.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hgt/hierarchy.hpp"
#include "hgt/trainer.hpp"

namespace hgt {

using LabelPath = std::vector<std::uint32_t>;

struct EvalResult {
  std::vector<double> per_level_top1;
  double consistency_rate = 0.0;
  std::size_t n_samples = 0;
};

// accuracy_i = mean over samples of [pred_i == label_i]. Throws ShapeError on
// mismatched sample counts or path lengths.
std::vector<double> top1_per_level(const std::vector<LabelPath>& predictions,
                                   const std::vector<LabelPath>& labels);

// Fraction of samples whose per-level predictions form a parent chain.
double consistency(const std::vector<LabelPath>& predictions, const Taxonomy& t);

// Per-level predictions for every image under the configured strategy.
std::vector<LabelPath> predict(const ModelState& s, const Dataset& data,
                               const std::vector<ImageFeatures>& images, const TrainConfig& cfg);

EvalResult evaluate(const ModelState& s, const Dataset& data,
                    const std::vector<ImageFeatures>& images, const TrainConfig& cfg);

enum class SweepAxis { depth, variant, toggles };

std::string to_string(SweepAxis a);
SweepAxis parse_axis(const std::string& s);

struct SweepSetting {
  std::string name;
  TrainConfig config;
};

// depth: 1..5; variant: gcn, gat, sage; toggles: the nine-row component grid.
std::vector<SweepSetting> sweep_settings(SweepAxis axis, const TrainConfig& base);

struct SweepRow {
  std::string setting;
  EvalResult result;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
};

// Trains and evaluates one model per setting with the base seed.
std::vector<SweepRow> sweep(SweepAxis axis, const TrainConfig& base, const Dataset& data);

// CSV with header setting,level,top1,consistency,n,seed,wall_time_s; one row
// per (setting, level), levels 1-based.
void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);
// Aligned plain-text table, one line per setting.
std::string format_table(const std::vector<SweepRow>& rows);

}  // namespace hgt
