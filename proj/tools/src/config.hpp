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
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icnnmetric/episodes.hpp"
#include "icnnmetric/trainer.hpp"

namespace icnn::cli {

struct DatasetConfig {
  std::string kind = "synth";  // synth | csv
  std::string path;
  std::size_t classes = 10;
  std::size_t per_class = 60;
  std::size_t dim = 32;
  double center_sep = 5.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
  std::size_t split_train = 5;
  std::size_t split_val = 0;
  std::size_t split_test = 5;
};

struct RunConfig {
  DatasetConfig dataset;
  TrainConfig train;
  std::string out_dir = "run";
  std::size_t embedding_points = 1000;
};

/// One `section.key = value` assignment with where it came from.
struct Assignment {
  std::string key;
  std::string value;
  std::string origin;  // "path:line" or "--flag"
};

/// Flat key-value text: `[section]` headers, `key = value` lines, whole-line '#' or ';'
/// comments. Keys are reported fully qualified ("train.epochs").
std::vector<Assignment> parse_config_text(std::istream& in, std::string_view source);
std::vector<Assignment> read_config_file(const std::filesystem::path& path);

/// `--key value` pairs. Throws ConfigError on a dangling key or a token that
/// is not a flag.
std::vector<Assignment> parse_overrides(const std::vector<std::string>& args);

/// Applies assignments in order. Unknown keys and malformed values throw
/// ConfigError citing the origin.
void apply_assignments(RunConfig& config, const std::vector<Assignment>& assignments);

/// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> flatten(const RunConfig& config);
std::vector<std::string> known_keys();

nlohmann::json to_json(const RunConfig& config);

/// Builds the dataset and applies the class split.
LabeledDataset load_dataset(const DatasetConfig& config);

}  // namespace icnn::cli
