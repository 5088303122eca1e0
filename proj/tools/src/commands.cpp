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

#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "checks.hpp"
#include "config.hpp"
#include "icnnmetric/error.hpp"
#include "icnnmetric/icnn.hpp"
#include "icnnmetric/text.hpp"
#include "icnnmetric/trainer.hpp"

namespace icnn::cli {
namespace {

namespace fs = std::filesystem;

struct RunFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Key-value config file");
  cmd->add_option("--seed", flags.seed, "Overrides train.seed");
  cmd->add_option("--out", flags.out_dir, "Overrides output.dir");
  cmd->allow_extras();
  cmd->footer("Any config key can be overridden with --<section>.<key> <value>.");
}

RunConfig resolve(const RunFlags& flags, const std::vector<std::string>& extras) {
  RunConfig cfg;
  if (!flags.config_path.empty()) apply_assignments(cfg, read_config_file(flags.config_path));
  apply_assignments(cfg, parse_overrides(extras));
  if (flags.seed) cfg.train.seed = *flags.seed;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (cfg.out_dir.empty()) throw ConfigError("output.dir must not be empty");
  cfg.train.validate();
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

nlohmann::json manifest(const RunConfig& cfg, const LabeledDataset& ds,
                        const nlohmann::json& outputs) {
  return {
      {"tool", "icnnmetric"},
      {"version", kToolVersion},
      {"seed", cfg.train.seed},
      {"config", to_json(cfg)},
      {"dataset", {{"digest", dataset_digest(ds)}, {"summary", dataset_manifest(ds)}}},
      {"outputs", outputs},
  };
}

int cmd_train(const RunFlags& flags, const std::vector<std::string>& extras,
              std::ostream& out) {
  const RunConfig cfg = resolve(flags, extras);
  const LabeledDataset ds = load_dataset(cfg.dataset);
  const TrainResult result = train_and_evaluate(ds, cfg.train);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  const nlohmann::json outputs = {{"manifest", "manifest.json"},
                                  {"metrics", "metrics.jsonl"},
                                  {"checkpoint", "checkpoint.txt"},
                                  {"embeddings", "embeddings.csv"}};
  write_file(dir / "manifest.json", manifest(cfg, ds, outputs).dump(2) + "\n");
  write_file(dir / "metrics.jsonl", result.metrics.to_jsonl());
  save_checkpoint(result.encoder, dir / "checkpoint.txt");
  {
    std::ofstream emb(dir / "embeddings.csv", std::ios::binary);
    write_embeddings_csv(result.encoder, ds, Split::kTest, cfg.train.episode, cfg.train.seed,
                         cfg.embedding_points, emb);
  }

  const EvalResult& test = *result.metrics.test;
  out << "test accuracy " << text::format_double(test.mean) << " +- "
      << text::format_double(test.ci_half_width) << " over " << test.per_task.size()
      << " tasks (best epoch " << result.metrics.best_epoch << ")\n";
  char seconds[32];
  std::snprintf(seconds, sizeof seconds, "%.2f", result.metrics.wall_clock_seconds);
  out << "wall clock " << seconds << " s\n";
  out << "wrote " << dir.string() << "\n";
  return kExitOk;
}

struct ScoreFlags {
  std::string csv;
  std::string k = "auto";
  double p = 1.0;
  double q = 1.0;
  double r = 1.0;
  std::string lambda = "split";
  std::string variance = "batch";
  std::string distance = "euclidean";
  double epsilon = 1e-12;
};

int cmd_score(const ScoreFlags& flags, std::ostream& out) {
  IcnnConfig cfg;
  if (flags.k != "auto") {
    const auto k = text::parse_int(flags.k);
    if (!k || *k <= 0) throw ConfigError("--k must be a positive integer or auto");
    cfg.k_neighbors = static_cast<std::size_t>(*k);
  }
  cfg.p = flags.p;
  cfg.q = flags.q;
  cfg.r = flags.r;
  cfg.lambda_variant = lambda_variant_from_string(flags.lambda);
  cfg.variance_mode = variance_mode_from_string(flags.variance);
  cfg.distance = distance_kind_from_string(flags.distance);
  cfg.epsilon = flags.epsilon;
  cfg.validate();

  const LabeledDataset ds = load_csv(fs::path(flags.csv));
  const IcnnTerms t = icnn_score(ds.table(), ds.labels, cfg);
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    points.push_back({{"id", ds.ids[i]},
                      {"label", ds.class_names[ds.labels[i]]},
                      {"lambda", t.lambda[i]},
                      {"omega", t.omega[i]},
                      {"gamma", t.gamma[i]}});
  }
  const nlohmann::json doc = {{"score", t.score},       {"loss", t.loss},
                              {"k1", t.k1},             {"k2", t.k2},
                              {"points", points},       {"warnings", t.warnings}};
  out << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_check(const CheckOptions& options, std::ostream& out) {
  if (!options.filter.empty()) {
    const auto names = check_names();
    const bool any = std::any_of(names.begin(), names.end(), [&](const std::string& n) {
      return n.find(options.filter) != std::string::npos;
    });
    if (!any) throw ConfigError("--filter '" + options.filter + "' matches no check");
  }
  const std::vector<CheckResult> results = run_checks(options);
  bool all = true;
  for (const CheckResult& r : results) {
    char line[96];
    std::snprintf(line, sizeof line, "%-32s %-4s %7.2fs  ", r.name.c_str(),
                  r.pass ? "PASS" : "FAIL", r.seconds);
    out << line << r.detail << "\n";
    all = all && r.pass;
  }
  const auto failed = std::count_if(results.begin(), results.end(),
                                    [](const CheckResult& r) { return !r.pass; });
  out << results.size() - static_cast<std::size_t>(failed) << "/" << results.size()
      << " checks passed\n";
  return all ? kExitOk : kExitRuntime;
}

int cmd_ablate(const RunFlags& flags, const std::vector<std::string>& extras,
               std::ostream& out) {
  const RunConfig cfg = resolve(flags, extras);
  const LabeledDataset ds = load_dataset(cfg.dataset);
  const std::vector<AblationRow> rows = run_ablation_grid(ds, cfg.train);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_ablation_csv(rows, csv);
  write_file(dir / "ablation.csv", csv.str());
  const nlohmann::json outputs = {{"manifest", "manifest.json"}, {"ablation", "ablation.csv"}};
  write_file(dir / "manifest.json", manifest(cfg, ds, outputs).dump(2) + "\n");

  out << csv.str();
  const bool any_failed = std::any_of(rows.begin(), rows.end(),
                                      [](const AblationRow& r) { return !r.error.empty(); });
  return any_failed ? kExitRuntime : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot metric learning with proto-triplet and ICNN losses", "icnnmetric"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "Train, evaluate and write a run directory");
  add_run_flags(train, train_flags);

  ScoreFlags score_flags;
  CLI::App* score = app.add_subcommand("score", "ICNN score of a CSV feature table, as JSON");
  score->add_option("csv", score_flags.csv, "Dataset CSV (id,label,f0,...)")->required();
  score->add_option("--k", score_flags.k, "Neighborhood size or 'auto'")->capture_default_str();
  score->add_option("--p", score_flags.p, "Exponent on lambda")->capture_default_str();
  score->add_option("--q", score_flags.q, "Exponent on omega")->capture_default_str();
  score->add_option("--r", score_flags.r, "Exponent on gamma")->capture_default_str();
  score->add_option("--lambda", score_flags.lambda, "split | original")->capture_default_str();
  score->add_option("--variance", score_flags.variance, "batch | per_point")
      ->capture_default_str();
  score->add_option("--distance", score_flags.distance, "euclidean | squared")
      ->capture_default_str();
  score->add_option("--epsilon", score_flags.epsilon, "Clamp floor")->capture_default_str();

  CheckOptions check_options;
  CLI::App* check = app.add_subcommand("check", "Run the property suite");
  check->add_option("--filter", check_options.filter, "Only checks whose name contains this");
  check->add_option("--seeds", check_options.seeds, "Random instances per gradient check")
      ->capture_default_str();
  check->add_option("--inject-sign-error", check_options.inject_sign_error)->group("");

  RunFlags ablate_flags;
  CLI::App* ablate = app.add_subcommand("ablate", "Run the 12-setting ablation grid");
  add_run_flags(ablate, ablate_flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_flags, train->remaining(), out);
    if (score->parsed()) return cmd_score(score_flags, out);
    if (check->parsed()) return cmd_check(check_options, out);
    if (ablate->parsed()) return cmd_ablate(ablate_flags, ablate->remaining(), out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace icnn::cli
