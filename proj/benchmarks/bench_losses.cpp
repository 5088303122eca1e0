// Copyright 2026 The icnn-metric Authors.
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

#include <vector>

#include "icnnmetric/encoder.hpp"
#include "icnnmetric/episodes.hpp"
#include "icnnmetric/icnn.hpp"
#include "icnnmetric/ops.hpp"
#include "icnnmetric/prototriplet.hpp"
#include "icnnmetric/trainer.hpp"

namespace {

using namespace icnn;

Tensor random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> v(n * d);
  for (double& x : v) x = rng.normal();
  return Tensor::matrix(n, d, std::move(v));
}

std::vector<std::size_t> round_robin(std::size_t n, std::size_t classes) {
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = i % classes;
  return y;
}

void BM_PairwiseSqDist(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_points(n, 64, 1);
  const Tensor b = random_points(n, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ops::pairwise_sq_dist(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PairwiseSqDist)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_IcnnScore(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_points(n, 32, 3);
  const auto y = round_robin(n, 5);
  IcnnConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(icnn_score(x, y, cfg).score);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IcnnScore)->RangeMultiplier(2)->Range(25, 200)->Complexity();

void BM_IcnnLossBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_points(n, 32, 4);
  const auto y = round_robin(n, 5);
  IcnnConfig cfg;
  for (auto _ : state) {
    Tape tape;
    const Tensor v = tape.variable(x);
    benchmark::DoNotOptimize(tape.backward(icnn_loss(v, y, cfg)).of(v));
  }
}
BENCHMARK(BM_IcnnLossBackward)->Arg(25)->Arg(100);

void BM_ProtoTripletBackward(benchmark::State& state) {
  const Tensor q = random_points(75, 32, 5);
  const auto qy = round_robin(75, 5);
  const Prototypes protos{random_points(5, 32, 6)};
  TripletConfig cfg;
  cfg.k_negatives = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    Tape tape;
    const Tensor v = tape.variable(q);
    benchmark::DoNotOptimize(tape.backward(task_proto_triplet(v, qy, protos, cfg)).of(v));
  }
}
BENCHMARK(BM_ProtoTripletBackward)->Arg(1)->Arg(4);

void BM_TrainStep(benchmark::State& state) {
  const LabeledDataset ds = split_classes(synth_gaussian(0, 10, 60, 32, 5.0, 1.0), 0, 5, 0, 5);
  TrainConfig cfg;
  cfg.episode = {5, 5, 15};
  cfg.combo = loss_combo_from_string("ce+pt+icnn");
  cfg.hidden = {};
  cfg.embed_dim = 128;
  const MlpEncoder enc = encoder_init(0, cfg.layer_dims(ds.dim));
  CounterRng rng(0);
  const Task task = sample_task(ds, Split::kTrain, cfg.episode, rng);
  for (auto _ : state) {
    Tape tape;
    const auto params = enc.bind(tape);
    const TaskLosses l = task_losses(enc, params, task, cfg);
    benchmark::DoNotOptimize(tape.backward(l.total).of(params[0]));
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
