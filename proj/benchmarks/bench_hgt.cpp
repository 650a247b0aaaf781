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

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "hgt/synth.hpp"
#include "hgt/trainer.hpp"

namespace {

using namespace hgt;

// Branching 4 x b gives K = 4 + 4b nodes.
Dataset bench_data(std::size_t fine_branching, std::size_t dim) {
  SynthSpec spec;
  spec.branching = {4, fine_branching};
  spec.dim = dim;
  spec.train_per_leaf = 10;
  spec.test_per_leaf = 2;
  return synthesize(spec);
}

void BM_Encode(benchmark::State& state) {
  const auto variant = static_cast<EncoderVariant>(state.range(0));
  const Dataset data = bench_data(static_cast<std::size_t>(state.range(1)), 64);
  EncoderInit init;
  init.variant = variant;
  std::mt19937_64 rng(0);
  const EncoderParams p = init_encoder(init, data.width(), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(data.graph.adjacency, data.text_base, p));
  }
  state.SetLabel(to_string(variant) + " K=" + std::to_string(data.graph.node_count()));
}
BENCHMARK(BM_Encode)->ArgsProduct({{0, 1, 2}, {3, 25}});

void BM_EncodeBackward(benchmark::State& state) {
  const auto variant = static_cast<EncoderVariant>(state.range(0));
  const Dataset data = bench_data(static_cast<std::size_t>(state.range(1)), 64);
  EncoderInit init;
  init.variant = variant;
  std::mt19937_64 rng(0);
  const EncoderParams p = init_encoder(init, data.width(), rng);
  EncoderTrace trace;
  const Matrix out = encode(data.graph.adjacency, data.text_base, p, &trace);
  const Matrix up = Matrix::Ones(out.rows(), out.cols());
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder_backward(data.graph.adjacency, p, trace, up));
  }
  state.SetLabel(to_string(variant) + " K=" + std::to_string(data.graph.node_count()));
}
BENCHMARK(BM_EncodeBackward)->ArgsProduct({{0, 1, 2}, {3, 25}});

void BM_ForwardScores(benchmark::State& state) {
  const Dataset data = bench_data(3, static_cast<std::size_t>(state.range(0)));
  const TrainConfig cfg = TrainConfig::defaults(2);
  const ModelState s = init_state(data, cfg);
  const PreparedTables tables = prepare_tables(s, data, cfg);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_scores(tables, s, data.train[i++ % data.train.size()], cfg));
  }
}
BENCHMARK(BM_ForwardScores)->Arg(16)->Arg(512);

void BM_BatchGradient(benchmark::State& state) {
  const Dataset data = bench_data(3, 16);
  TrainConfig cfg = TrainConfig::defaults(2);
  cfg.threads = static_cast<std::size_t>(state.range(0));
  const ModelState s = init_state(data, cfg);
  std::vector<std::size_t> idx(64);
  std::iota(idx.begin(), idx.end(), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradient(s, data, data.train, idx, cfg));
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_BatchGradient)->Arg(1)->Arg(2);

void BM_Epoch(benchmark::State& state) {
  SynthSpec spec;
  const Dataset data = synthesize(spec);
  TrainConfig cfg = TrainConfig::defaults(2);
  cfg.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(data, cfg));
  }
  state.SetLabel("synthetic defaults, 480 images");
}
BENCHMARK(BM_Epoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
