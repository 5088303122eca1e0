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

#include "icnnmetric/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "icnnmetric/error.hpp"
#include "icnnmetric/ops.hpp"
#include "icnnmetric/protonet.hpp"
#include "icnnmetric/text.hpp"

namespace icnn {
namespace {

std::vector<std::size_t> iota(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out(end - begin);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

void require_split(const LabeledDataset& ds, Split split, const EpisodeSpec& spec) {
  const auto classes = ds.classes_in(split);
  if (classes.size() < spec.ways) {
    throw DataError(std::string(to_string(split)) + " split has " +
                    std::to_string(classes.size()) + " classes, episodes need " +
                    std::to_string(spec.ways));
  }
  for (std::size_t c : classes) {
    if (ds.class_index[c].size() < spec.shots + spec.queries) {
      throw DataError("class '" + ds.class_names[c] + "' has " +
                      std::to_string(ds.class_index[c].size()) + " rows, episodes need " +
                      std::to_string(spec.shots + spec.queries));
    }
  }
}

Tensor weighted(const Tensor& term, double weight) {
  return weight == 1.0 ? term : ops::scale(term, weight);
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string to_string(const LossCombo& combo) {
  std::string out;
  auto append = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  append(combo.cross_entropy, "ce");
  append(combo.proto_triplet, "pt");
  append(combo.icnn, "icnn");
  return out;
}

LossCombo loss_combo_from_string(std::string_view s) {
  LossCombo combo;
  combo.cross_entropy = false;
  for (std::string_view part : text::split(s, '+')) {
    part = text::trim(part);
    bool* flag = nullptr;
    if (part == "ce") flag = &combo.cross_entropy;
    else if (part == "pt") flag = &combo.proto_triplet;
    else if (part == "icnn") flag = &combo.icnn;
    if (flag == nullptr) {
      throw ConfigError("loss: unknown term '" + std::string(part) +
                        "' (expected ce, pt, icnn)");
    }
    if (*flag) throw ConfigError("loss: term '" + std::string(part) + "' repeated");
    *flag = true;
  }
  return combo;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (episode.ways < 2) fail("episode.ways must be at least 2");
  if (episode.shots == 0) fail("episode.shots must be positive");
  if (episode.queries == 0) fail("episode.queries must be positive");
  if (tasks_per_epoch == 0) fail("train.tasks_per_epoch must be positive");
  if (eval_tasks == 0) fail("train.eval_tasks must be positive");
  if (!combo.cross_entropy && !combo.proto_triplet && !combo.icnn) {
    fail("train.loss must enable at least one term");
  }
  const double weights[] = {combo.weight_ce, combo.weight_pt, combo.weight_icnn};
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail("train.weight_* must be finite and >= 0");
  }
  const double enabled = (combo.cross_entropy ? combo.weight_ce : 0.0) +
                         (combo.proto_triplet ? combo.weight_pt : 0.0) +
                         (combo.icnn ? combo.weight_icnn : 0.0);
  if (enabled <= 0.0) fail("train.weight_*: enabled terms are all weighted 0");
  if (triplet.margin < 0.0) fail("triplet.margin must be >= 0");
  if (combo.proto_triplet &&
      (triplet.k_negatives == 0 || triplet.k_negatives + 1 > episode.ways)) {
    fail("triplet.k_negatives must be in [1, ways-1]");
  }
  if (combo.icnn) icnn.validate();
  if (!(optimizer.learning_rate >= 0.0)) fail("optimizer.lr must be >= 0");
  if (lr_step == 0) fail("train.lr_step must be positive");
  if (!(lr_decay > 0.0)) fail("train.lr_decay must be positive");
  if (embed_dim == 0) fail("train.embed_dim must be positive");
  for (std::size_t h : hidden) {
    if (h == 0) fail("train.hidden: layer widths must be positive");
  }
  if (jobs == 0) fail("train.jobs must be positive");
}

std::vector<std::size_t> TrainConfig::layer_dims(std::size_t input_dim) const {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(embed_dim);
  return dims;
}

std::string RunMetrics::to_jsonl() const {
  std::string out;
  for (const EpochMetrics& e : epochs) {
    nlohmann::json rec = {
        {"record", "epoch"},
        {"epoch", e.epoch},
        {"learning_rate", e.learning_rate},
        {"loss_total", e.loss_total},
        {"loss_ce", e.loss_ce},
        {"loss_pt", e.loss_pt},
        {"loss_icnn", e.loss_icnn},
        {"val_accuracy", optional_number(e.val_accuracy)},
        {"val_ci", optional_number(e.val_ci)},
        {"icnn_warnings", e.icnn_warnings},
    };
    out += rec.dump();
    out += '\n';
  }
  nlohmann::json fin = {{"record", "final"}, {"best_epoch", best_epoch}};
  if (test) {
    fin["test_accuracy"] = test->mean;
    fin["test_ci"] = test->ci_half_width;
    fin["test_tasks"] = test->per_task.size();
  } else {
    fin["test_accuracy"] = nullptr;
    fin["test_ci"] = nullptr;
    fin["test_tasks"] = 0;
  }
  out += fin.dump();
  out += '\n';
  return out;
}

TaskLosses task_losses(const MlpEncoder& enc, std::span<const Tensor> params,
                       const Task& task, const TrainConfig& config) {
  const std::size_t ns = task.support_y.size();
  const std::size_t nq = task.query_y.size();
  const Tensor emb = encode(enc, params, ops::concat_rows(task.support_x, task.query_x));
  const auto support_rows = iota(0, ns);
  const auto query_rows = iota(ns, ns + nq);
  const Tensor support = ops::gather_rows(emb, support_rows);
  const Tensor query = ops::gather_rows(emb, query_rows);
  const Prototypes protos = compute_prototypes(support, task.support_y);

  TaskLosses out;
  std::optional<Tensor> total;
  auto accumulate = [&](const Tensor& term, double weight) {
    const Tensor w = weighted(term, weight);
    total = total ? ops::add(*total, w) : w;
  };
  const LossCombo& combo = config.combo;
  if (combo.cross_entropy) {
    out.cross_entropy = cross_entropy(classify(query, protos), task.query_y);
    accumulate(*out.cross_entropy, combo.weight_ce);
  }
  if (combo.proto_triplet) {
    out.proto_triplet = task_proto_triplet(query, task.query_y, protos, config.triplet);
    accumulate(*out.proto_triplet, combo.weight_pt);
  }
  if (combo.icnn) {
    IcnnTaskLoss icnn = icnn_task_loss(support, task.support_y, query, task.query_y,
                                       protos, config.icnn);
    out.icnn = icnn.loss;
    out.warnings = std::move(icnn.warnings);
    accumulate(*out.icnn, combo.weight_icnn);
  }
  out.total = *total;
  return out;
}

TrainResult train(const LabeledDataset& ds, const TrainConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  require_split(ds, Split::kTrain, config.episode);
  const bool validating = config.val_tasks > 0 && !ds.classes_in(Split::kVal).empty();
  if (validating) require_split(ds, Split::kVal, config.episode);

  MlpEncoder enc = encoder_init(config.seed, config.layer_dims(ds.dim));
  Optimizer opt(config.optimizer);
  TrainResult result{enc, {}};
  double best_val = -std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.optimizer.learning_rate *
                      std::pow(config.lr_decay, static_cast<double>((epoch - 1) / config.lr_step));
    opt.set_learning_rate(lr);
    EpochMetrics m;
    m.epoch = epoch;
    m.learning_rate = lr;
    for (std::size_t t = 0; t < config.tasks_per_epoch; ++t) {
      CounterRng rng(config.seed, stream_id(Stream::kTrain, epoch), t);
      const Task task = sample_task(ds, Split::kTrain, config.episode, rng);
      Tape tape;
      const std::vector<Tensor> params = enc.bind(tape);
      const TaskLosses losses = task_losses(enc, params, task, config);
      const Gradients grads = tape.backward(losses.total);
      std::vector<Tensor> g;
      g.reserve(params.size());
      for (const Tensor& p : params) g.push_back(grads.of(p));
      opt.apply_update(enc, g);

      m.loss_total += losses.total.item();
      if (losses.cross_entropy) m.loss_ce += losses.cross_entropy->item();
      if (losses.proto_triplet) m.loss_pt += losses.proto_triplet->item();
      if (losses.icnn) m.loss_icnn += losses.icnn->item();
      if (!losses.warnings.empty()) ++m.icnn_warnings;
    }
    const double n = static_cast<double>(config.tasks_per_epoch);
    m.loss_total /= n;
    m.loss_ce /= n;
    m.loss_pt /= n;
    m.loss_icnn /= n;

    if (validating) {
      const EvalResult val = evaluate(enc, ds, Split::kVal, config.episode, config.val_tasks,
                                      config.seed, {Stream::kValidate, epoch, config.jobs});
      m.val_accuracy = val.mean;
      m.val_ci = val.ci_half_width;
      if (val.mean > best_val) {
        best_val = val.mean;
        result.encoder = enc;
        result.metrics.best_epoch = epoch;
      }
    } else {
      result.encoder = enc;
      result.metrics.best_epoch = epoch;
    }
    result.metrics.epochs.push_back(m);
  }
  result.metrics.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

double confidence_half_width(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return 1.96 * std::sqrt(acc / n) / std::sqrt(n);
}

EvalResult evaluate(const MlpEncoder& enc, const LabeledDataset& ds, Split split,
                    const EpisodeSpec& spec, std::size_t n_tasks, std::uint64_t seed,
                    const EvalOptions& options) {
  if (n_tasks == 0) throw ConfigError("evaluate: task count must be positive");
  require_split(ds, split, spec);
  EvalResult result;
  result.per_task.assign(n_tasks, 0.0);
  const std::uint64_t stream = stream_id(options.stream, options.epoch);

  auto run_task = [&](std::size_t i) {
    CounterRng rng(seed, stream, i);
    const Task task = sample_task(ds, split, spec, rng);
    const Prototypes protos = compute_prototypes(encode(enc, task.support_x), task.support_y);
    result.per_task[i] = accuracy(classify(encode(enc, task.query_x), protos), task.query_y);
  };

  const std::size_t workers = std::min(std::max<std::size_t>(options.jobs, 1), n_tasks);
  if (workers == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < n_tasks && !failed; i = next++) run_task(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
        (void)w;
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  result.mean = std::accumulate(result.per_task.begin(), result.per_task.end(), 0.0) /
                static_cast<double>(n_tasks);
  result.ci_half_width = confidence_half_width(result.per_task);
  return result;
}

void write_embeddings_csv(const MlpEncoder& enc, const LabeledDataset& ds, Split split,
                          const EpisodeSpec& spec, std::uint64_t seed,
                          std::size_t max_points, std::ostream& out) {
  require_split(ds, split, spec);
  out << "task,role,id,class";
  for (std::size_t c = 0; c < enc.output_dim(); ++c) out << ",e" << c;
  out << '\n';
  std::size_t written = 0;
  const std::uint64_t stream = stream_id(Stream::kEvaluate, 0);
  for (std::size_t i = 0; written < max_points; ++i) {
    CounterRng rng(seed, stream, i);
    const Task task = sample_task(ds, split, spec, rng);
    auto dump = [&](const char* role, const Tensor& x, const std::vector<std::size_t>& y,
                    const std::vector<std::size_t>& rows) {
      const Tensor emb = encode(enc, x);
      const std::size_t d = emb.cols();
      for (std::size_t r = 0; r < y.size() && written < max_points; ++r, ++written) {
        out << i << ',' << role << ',' << ds.ids[rows[r]] << ','
            << ds.class_names[task.class_ids[y[r]]];
        for (std::size_t c = 0; c < d; ++c) out << ',' << text::format_double(emb.at(r, c));
        out << '\n';
      }
    };
    dump("support", task.support_x, task.support_y, task.support_rows);
    dump("query", task.query_x, task.query_y, task.query_rows);
  }
}

TrainResult train_and_evaluate(const LabeledDataset& ds, const TrainConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  TrainResult result = train(ds, config);
  result.metrics.test = evaluate(result.encoder, ds, Split::kTest, config.episode,
                                 config.eval_tasks, config.seed,
                                 {Stream::kEvaluate, 0, config.jobs});
  result.metrics.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<AblationSetting> ablation_settings() {
  auto combo = [](bool ce, bool pt, bool ic) {
    LossCombo c;
    c.cross_entropy = ce;
    c.proto_triplet = pt;
    c.icnn = ic;
    return c;
  };
  return {
      {"i", "ICNN in support", combo(false, false, true), IcnnMode::kSupportOnly},
      {"ii", "ICNN in support + query", combo(false, false, true),
       IcnnMode::kSupportPlusQuery},
      {"iii", "CE + ICNN in support", combo(true, false, true), IcnnMode::kSupportOnly},
      {"iv", "CE + ICNN in support + query", combo(true, false, true),
       IcnnMode::kSupportPlusQuery},
      {"v", "ICNN in support + query (prototypes)", combo(false, false, true),
       IcnnMode::kQueryVsPrototypes},
      {"vi", "CE + ICNN in support + query (prototypes)", combo(true, false, true),
       IcnnMode::kQueryVsPrototypes},
      {"vii", "Full ICNN", combo(false, false, true), IcnnMode::kFull},
      {"viii", "CE + full ICNN", combo(true, false, true), IcnnMode::kFull},
      {"pt1", "Proto-triplet", combo(false, true, false), IcnnMode::kFull},
      {"pt2", "CE + proto-triplet", combo(true, true, false), IcnnMode::kFull},
      {"pt3", "Proto-triplet + full ICNN", combo(false, true, true), IcnnMode::kFull},
      {"pt4", "CE + proto-triplet + full ICNN", combo(true, true, true), IcnnMode::kFull},
  };
}

std::vector<AblationRow> run_ablation_grid(const LabeledDataset& ds,
                                           const TrainConfig& base) {
  std::vector<AblationRow> rows;
  for (const AblationSetting& setting : ablation_settings()) {
    AblationRow row{setting, std::nullopt, {}};
    TrainConfig config = base;
    config.combo.cross_entropy = setting.combo.cross_entropy;
    config.combo.proto_triplet = setting.combo.proto_triplet;
    config.combo.icnn = setting.combo.icnn;
    config.icnn.mode = setting.mode;
    try {
      row.metrics = train_and_evaluate(ds, config).metrics;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out) {
  out << "id,setting,loss,icnn_mode,mean_acc,ci,best_epoch,status,error\n";
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  for (const AblationRow& row : rows) {
    const AblationSetting& s = row.setting;
    out << s.id << ',' << quote(s.label) << ',' << to_string(s.combo) << ','
        << (s.combo.icnn ? std::string(to_string(s.mode)) : std::string("none")) << ',';
    if (row.metrics && row.metrics->test) {
      out << text::format_double(row.metrics->test->mean) << ','
          << text::format_double(row.metrics->test->ci_half_width) << ','
          << row.metrics->best_epoch << ",ok,\n";
    } else {
      out << ",,,failed," << quote(row.error) << '\n';
    }
  }
}

}  // namespace icnn
