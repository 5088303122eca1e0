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

#include "config.hpp"

#include <fstream>
#include <functional>

#include "icnnmetric/error.hpp"
#include "icnnmetric/text.hpp"

namespace icnn::cli {
namespace {

std::size_t to_count(std::string_view v) {
  const auto n = text::parse_int(text::trim(v));
  if (!n || *n < 0) throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
  return static_cast<std::size_t>(*n);
}

double to_real(std::string_view v) {
  const auto x = text::parse_double(text::trim(v));
  if (!x) throw ConfigError("expected a number, got '" + std::string(v) + "'");
  return *x;
}

std::vector<std::size_t> to_widths(std::string_view v) {
  std::vector<std::size_t> out;
  v = text::trim(v);
  if (v.empty() || v == "none") return out;
  for (std::string_view part : text::split(v, ',')) out.push_back(to_count(part));
  return out;
}

std::string from_widths(const std::vector<std::size_t>& w) {
  if (w.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(w[i]);
  }
  return out;
}

struct Binding {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Field>
Binding count_key(std::string key, Field field) {
  return {std::move(key),
          [field](RunConfig& c, std::string_view v) { field(c) = to_count(v); },
          [field](const RunConfig& c) {
            return std::to_string(field(const_cast<RunConfig&>(c)));
          }};
}

template <typename Field>
Binding real_key(std::string key, Field field) {
  return {std::move(key),
          [field](RunConfig& c, std::string_view v) { field(c) = to_real(v); },
          [field](const RunConfig& c) {
            return text::format_double(field(const_cast<RunConfig&>(c)));
          }};
}

template <typename Field, typename Parse, typename Print>
Binding enum_key(std::string key, Field field, Parse parse, Print print) {
  return {std::move(key),
          [field, parse](RunConfig& c, std::string_view v) { field(c) = parse(text::trim(v)); },
          [field, print](const RunConfig& c) {
            return std::string(print(field(const_cast<RunConfig&>(c))));
          }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    b.push_back({"dataset.kind",
                 [](RunConfig& c, std::string_view v) {
                   v = text::trim(v);
                   if (v != "synth" && v != "csv") {
                     throw ConfigError("expected synth or csv, got '" + std::string(v) + "'");
                   }
                   c.dataset.kind = std::string(v);
                 },
                 [](const RunConfig& c) { return c.dataset.kind; }});
    b.push_back({"dataset.path",
                 [](RunConfig& c, std::string_view v) { c.dataset.path = std::string(text::trim(v)); },
                 [](const RunConfig& c) { return c.dataset.path; }});
    b.push_back(count_key("dataset.classes", [](RunConfig& c) -> auto& { return c.dataset.classes; }));
    b.push_back(count_key("dataset.per_class", [](RunConfig& c) -> auto& { return c.dataset.per_class; }));
    b.push_back(count_key("dataset.dim", [](RunConfig& c) -> auto& { return c.dataset.dim; }));
    b.push_back(real_key("dataset.center_sep", [](RunConfig& c) -> auto& { return c.dataset.center_sep; }));
    b.push_back(real_key("dataset.noise", [](RunConfig& c) -> auto& { return c.dataset.noise; }));
    b.push_back(count_key("dataset.seed", [](RunConfig& c) -> auto& { return c.dataset.seed; }));
    b.push_back(count_key("dataset.split_train", [](RunConfig& c) -> auto& { return c.dataset.split_train; }));
    b.push_back(count_key("dataset.split_val", [](RunConfig& c) -> auto& { return c.dataset.split_val; }));
    b.push_back(count_key("dataset.split_test", [](RunConfig& c) -> auto& { return c.dataset.split_test; }));

    b.push_back(count_key("episode.ways", [](RunConfig& c) -> auto& { return c.train.episode.ways; }));
    b.push_back(count_key("episode.shots", [](RunConfig& c) -> auto& { return c.train.episode.shots; }));
    b.push_back(count_key("episode.queries", [](RunConfig& c) -> auto& { return c.train.episode.queries; }));

    b.push_back(count_key("train.epochs", [](RunConfig& c) -> auto& { return c.train.epochs; }));
    b.push_back(count_key("train.tasks_per_epoch", [](RunConfig& c) -> auto& { return c.train.tasks_per_epoch; }));
    b.push_back(count_key("train.val_tasks", [](RunConfig& c) -> auto& { return c.train.val_tasks; }));
    b.push_back(count_key("train.eval_tasks", [](RunConfig& c) -> auto& { return c.train.eval_tasks; }));
    b.push_back(count_key("train.seed", [](RunConfig& c) -> auto& { return c.train.seed; }));
    b.push_back({"train.loss",
                 [](RunConfig& c, std::string_view v) {
                   const LossCombo parsed = loss_combo_from_string(text::trim(v));
                   c.train.combo.cross_entropy = parsed.cross_entropy;
                   c.train.combo.proto_triplet = parsed.proto_triplet;
                   c.train.combo.icnn = parsed.icnn;
                 },
                 [](const RunConfig& c) { return to_string(c.train.combo); }});
    b.push_back(real_key("train.weight_ce", [](RunConfig& c) -> auto& { return c.train.combo.weight_ce; }));
    b.push_back(real_key("train.weight_pt", [](RunConfig& c) -> auto& { return c.train.combo.weight_pt; }));
    b.push_back(real_key("train.weight_icnn", [](RunConfig& c) -> auto& { return c.train.combo.weight_icnn; }));
    b.push_back(count_key("train.lr_step", [](RunConfig& c) -> auto& { return c.train.lr_step; }));
    b.push_back(real_key("train.lr_decay", [](RunConfig& c) -> auto& { return c.train.lr_decay; }));
    b.push_back({"train.hidden",
                 [](RunConfig& c, std::string_view v) { c.train.hidden = to_widths(v); },
                 [](const RunConfig& c) { return from_widths(c.train.hidden); }});
    b.push_back(count_key("train.embed_dim", [](RunConfig& c) -> auto& { return c.train.embed_dim; }));
    b.push_back(count_key("train.jobs", [](RunConfig& c) -> auto& { return c.train.jobs; }));

    b.push_back(enum_key("optimizer.kind", [](RunConfig& c) -> auto& { return c.train.optimizer.kind; },
                         optimizer_kind_from_string,
                         [](OptimizerKind k) { return to_string(k); }));
    b.push_back(real_key("optimizer.lr", [](RunConfig& c) -> auto& { return c.train.optimizer.learning_rate; }));
    b.push_back(real_key("optimizer.momentum", [](RunConfig& c) -> auto& { return c.train.optimizer.momentum; }));
    b.push_back(real_key("optimizer.beta1", [](RunConfig& c) -> auto& { return c.train.optimizer.beta1; }));
    b.push_back(real_key("optimizer.beta2", [](RunConfig& c) -> auto& { return c.train.optimizer.beta2; }));
    b.push_back(real_key("optimizer.epsilon", [](RunConfig& c) -> auto& { return c.train.optimizer.epsilon; }));

    b.push_back({"icnn.k",
                 [](RunConfig& c, std::string_view v) {
                   v = text::trim(v);
                   c.train.icnn.k_neighbors = v == "auto" ? kAutoNeighbors : to_count(v);
                 },
                 [](const RunConfig& c) {
                   return c.train.icnn.k_neighbors == kAutoNeighbors
                              ? std::string("auto")
                              : std::to_string(c.train.icnn.k_neighbors);
                 }});
    b.push_back(real_key("icnn.p", [](RunConfig& c) -> auto& { return c.train.icnn.p; }));
    b.push_back(real_key("icnn.q", [](RunConfig& c) -> auto& { return c.train.icnn.q; }));
    b.push_back(real_key("icnn.r", [](RunConfig& c) -> auto& { return c.train.icnn.r; }));
    b.push_back(enum_key("icnn.lambda", [](RunConfig& c) -> auto& { return c.train.icnn.lambda_variant; },
                         lambda_variant_from_string,
                         [](LambdaVariant v) { return to_string(v); }));
    b.push_back(enum_key("icnn.variance", [](RunConfig& c) -> auto& { return c.train.icnn.variance_mode; },
                         variance_mode_from_string,
                         [](VarianceMode v) { return to_string(v); }));
    b.push_back(enum_key("icnn.distance", [](RunConfig& c) -> auto& { return c.train.icnn.distance; },
                         distance_kind_from_string,
                         [](DistanceKind v) { return to_string(v); }));
    b.push_back(real_key("icnn.epsilon", [](RunConfig& c) -> auto& { return c.train.icnn.epsilon; }));
    b.push_back(enum_key("icnn.mode", [](RunConfig& c) -> auto& { return c.train.icnn.mode; },
                         icnn_mode_from_string, [](IcnnMode v) { return to_string(v); }));

    b.push_back(real_key("triplet.margin", [](RunConfig& c) -> auto& { return c.train.triplet.margin; }));
    b.push_back(count_key("triplet.k_negatives", [](RunConfig& c) -> auto& { return c.train.triplet.k_negatives; }));

    b.push_back({"output.dir",
                 [](RunConfig& c, std::string_view v) { c.out_dir = std::string(text::trim(v)); },
                 [](const RunConfig& c) { return c.out_dir; }});
    b.push_back(count_key("output.embedding_points", [](RunConfig& c) -> auto& { return c.embedding_points; }));
    return b;
  }();
  return table;
}

const Binding* find_binding(std::string_view key) {
  for (const Binding& b : bindings()) {
    if (b.key == key) return &b;
  }
  return nullptr;
}

}  // namespace

std::vector<Assignment> parse_config_text(std::istream& in, std::string_view source) {
  std::vector<Assignment> out;
  std::string section;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    const std::string origin = std::string(source) + ":" + std::to_string(number);
    std::string_view s = text::trim(line);
    if (s.empty() || s.front() == '#' || s.front() == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        throw ConfigError(origin + ": malformed section header '" + std::string(s) + "'");
      }
      section = std::string(text::trim(s.substr(1, s.size() - 2)));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ": expected 'key = value', got '" + std::string(s) + "'");
    }
    const std::string_view key = text::trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ": missing key before '='");
    std::string qualified = section.empty() || key.find('.') != std::string_view::npos
                                ? std::string(key)
                                : section + "." + std::string(key);
    out.push_back({std::move(qualified), std::string(text::trim(s.substr(eq + 1))), origin});
  }
  return out;
}

std::vector<Assignment> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config_text(in, path.string());
}

std::vector<Assignment> parse_overrides(const std::vector<std::string>& args) {
  std::vector<Assignment> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& flag = args[i];
    if (flag.rfind("--", 0) != 0 || flag.size() == 2) {
      throw ConfigError("unexpected argument '" + flag + "'");
    }
    std::string key = flag.substr(2);
    std::string value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError("flag '" + flag + "' needs a value");
      value = args[++i];
    }
    out.push_back({key, value, "--" + key});
  }
  return out;
}

void apply_assignments(RunConfig& config, const std::vector<Assignment>& assignments) {
  for (const Assignment& a : assignments) {
    const Binding* b = find_binding(a.key);
    if (b == nullptr) throw ConfigError(a.origin + ": unknown key '" + a.key + "'");
    try {
      b->set(config, a.value);
    } catch (const ConfigError& e) {
      throw ConfigError(a.origin + ": " + a.key + ": " + e.what());
    }
  }
}

std::vector<std::pair<std::string, std::string>> flatten(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Binding& b : bindings()) out.emplace_back(b.key, b.get(config));
  return out;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const Binding& b : bindings()) out.push_back(b.key);
  return out;
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : flatten(config)) out[key] = value;
  return out;
}

LabeledDataset load_dataset(const DatasetConfig& config) {
  LabeledDataset ds;
  if (config.kind == "csv") {
    if (config.path.empty()) throw ConfigError("dataset.path is required when dataset.kind = csv");
    ds = load_csv(std::filesystem::path(config.path));
  } else {
    if (config.classes == 0 || config.per_class == 0 || config.dim == 0) {
      throw ConfigError("dataset.classes, dataset.per_class and dataset.dim must be positive");
    }
    if (!(config.center_sep > 0.0) || !(config.noise >= 0.0)) {
      throw ConfigError("dataset.center_sep must be positive and dataset.noise non-negative");
    }
    ds = synth_gaussian(config.seed, config.classes, config.per_class, config.dim,
                        config.center_sep, config.noise);
  }
  return split_classes(std::move(ds), config.seed, config.split_train, config.split_val,
                       config.split_test);
}

}  // namespace icnn::cli
