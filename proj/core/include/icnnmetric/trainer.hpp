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

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icnnmetric/encoder.hpp"
#include "icnnmetric/episodes.hpp"
#include "icnnmetric/icnn.hpp"
#include "icnnmetric/prototriplet.hpp"

namespace icnn {

/// Enabled loss terms and their weights. A term participates iff its flag is
/// set; weights only scale enabled terms.
struct LossCombo {
  bool cross_entropy = true;
  bool proto_triplet = false;
  bool icnn = false;
  double weight_ce = 1.0;
  double weight_pt = 1.0;
  double weight_icnn = 1.0;
};

/// "ce", "pt", "icnn" joined by '+', in that order.
std::string to_string(const LossCombo& combo);
/// Parses a '+'-separated term list; throws ConfigError on unknown or
/// repeated terms.
LossCombo loss_combo_from_string(std::string_view s);

struct TrainConfig {
  EpisodeSpec episode;
  std::size_t epochs = 50;
  std::size_t tasks_per_epoch = 100;
  std::size_t val_tasks = 500;
  std::size_t eval_tasks = 1000;
  std::uint64_t seed = 0;
  LossCombo combo;
  IcnnConfig icnn;
  TripletConfig triplet;
  OptimizerConfig optimizer;
  std::size_t lr_step = 20;
  double lr_decay = 0.5;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t embed_dim = 32;
  std::size_t jobs = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// input_dim, hidden..., embed_dim
  std::vector<std::size_t> layer_dims(std::size_t input_dim) const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double loss_total = 0.0;
  double loss_ce = 0.0;
  double loss_pt = 0.0;
  double loss_icnn = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> val_ci;
  std::size_t icnn_warnings = 0;  // tasks whose ICNN term was degenerate
};

struct EvalResult {
  double mean = 0.0;
  double ci_half_width = 0.0;
  std::vector<double> per_task;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;  // 0 = the initial encoder
  std::optional<EvalResult> test;
  double wall_clock_seconds = 0.0;  // not serialized

  /// One record per epoch followed by one "final" record. Deterministic for a
  /// given config and seed.
  std::string to_jsonl() const;
};

/// Per-term losses of one task, all recorded on the encoder's tape.
struct TaskLosses {
  Tensor total;
  std::optional<Tensor> cross_entropy;
  std::optional<Tensor> proto_triplet;
  std::optional<Tensor> icnn;
  std::vector<std::string> warnings;
};

/// Encodes support and query in one batch and forms every enabled term.
TaskLosses task_losses(const MlpEncoder& enc, std::span<const Tensor> params,
                       const Task& task, const TrainConfig& config);

struct TrainResult {
  MlpEncoder encoder;  // best-validation checkpoint
  RunMetrics metrics;
};

/// Episodic training. Validation runs after every epoch when the dataset
/// has validation classes and val_tasks > 0; otherwise the final epoch is
/// kept. Does not evaluate on the test split.
TrainResult train(const LabeledDataset& ds, const TrainConfig& config);

/// 1.96 * population stddev / sqrt(n); 0 for n < 2.
double confidence_half_width(std::span<const double> values);

struct EvalOptions {
  Stream stream = Stream::kEvaluate;
  std::uint64_t epoch = 0;
  std::size_t jobs = 1;
};

/// Task i is drawn from CounterRng(seed, stream_id(stream, epoch), i), so the
/// task sequence depends only on the seed. Results are ordered by task
/// index regardless of jobs.
EvalResult evaluate(const MlpEncoder& enc, const LabeledDataset& ds, Split split,
                    const EpisodeSpec& spec, std::size_t n_tasks, std::uint64_t seed,
                    const EvalOptions& options = {});

/// Support and query embeddings of the evaluation tasks, in task order,
/// until `max_points` rows are written. Columns: task, role, id, class,
/// e0..e{D-1}.
void write_embeddings_csv(const MlpEncoder& enc, const LabeledDataset& ds, Split split,
                          const EpisodeSpec& spec, std::uint64_t seed,
                          std::size_t max_points, std::ostream& out);

/// train() followed by evaluate() on the test split.
TrainResult train_and_evaluate(const LabeledDataset& ds, const TrainConfig& config);

struct AblationSetting {
  std::string id;     // "i".."viii", "pt1".."pt4"
  std::string label;  // human-readable row name
  LossCombo combo;
  IcnnMode mode = IcnnMode::kFull;
};

/// The 8 ICNN settings followed by the 4 proto-triplet combinations.
std::vector<AblationSetting> ablation_settings();

struct AblationRow {
  AblationSetting setting;
  std::optional<RunMetrics> metrics;
  std::string error;  // non-empty when the run failed
};

/// Runs every setting with the base config's seed and dataset. A failing
/// setting is recorded and the grid continues.
std::vector<AblationRow> run_ablation_grid(const LabeledDataset& ds,
                                           const TrainConfig& base);

/// Header: id,setting,loss,icnn_mode,mean_acc,ci,best_epoch,status,error
void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out);

}  // namespace icnn
