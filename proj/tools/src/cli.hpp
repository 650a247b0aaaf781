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

// The `hgt` command line: option parsing and the five subcommands.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "hgt/eval_report.hpp"
#include "hgt/synth.hpp"
#include "hgt/trainer.hpp"

namespace hgt::cli {

enum class Command { synth, train, eval, sweep, gradcheck };

struct RunConfig {
  Command command = Command::train;
  std::filesystem::path taxonomy;
  std::filesystem::path embeddings;  // directory with text.hgeb, train.hgeb, test.hgeb
  std::filesystem::path checkpoint;
  std::filesystem::path out = "hgt_out";

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double lr = 3e-4;
  std::size_t epochs = 50;
  std::size_t batch = 64;
  double lambda1 = 1.0;
  double lambda2 = 0.2;
  std::optional<double> alpha;
  std::size_t depth = 3;
  std::string variant = "gat";
  std::string activation = "identity";
  std::string strategy = "multi_label";
  std::string toggles = "TP,TG,VP,VG";
  std::string level_weights;  // empty means 1,...,1,2
  double logit_scale = 100.0;
  std::size_t visual_prompts = 4;

  SynthSpec synth;
  SweepAxis axis = SweepAxis::depth;
  std::size_t gradcheck_samples = 4;
  double gradcheck_threshold = 1e-3;
};

// Resolves the flags into a validated training config for an h-level hierarchy.
TrainConfig train_config(const RunConfig& rc, std::size_t levels);

// `key = value` lines accepted back by --config.
std::string config_text(const RunConfig& rc);

// Synthesizes data when no --embeddings directory is given.
Dataset load_data(const RunConfig& rc);

int cmd_synth(const RunConfig& rc, std::ostream& out);
int cmd_train(const RunConfig& rc, std::ostream& out);
int cmd_eval(const RunConfig& rc, std::ostream& out);
int cmd_sweep(const RunConfig& rc, std::ostream& out);
int cmd_gradcheck(const RunConfig& rc, std::ostream& out);

// Full entry point. Returns the process exit code; errors go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hgt::cli
