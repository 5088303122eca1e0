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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icnnmetric/rng.hpp"
#include "icnnmetric/tape.hpp"

namespace icnn {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);

/// Feature table with dense class ids. Immutable once built; safe to share
/// across threads.
struct LabeledDataset {
  std::size_t dim = 0;
  std::vector<double> features;  // row-major, size() x dim
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;
  std::vector<std::string> class_names;
  std::vector<std::vector<std::size_t>> class_index;
  std::vector<Split> class_split;

  std::size_t size() const { return labels.size(); }
  std::size_t class_count() const { return class_names.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  std::vector<std::size_t> classes_in(Split split) const;
  /// Stacks the given rows into a rows.size() x dim tensor.
  Tensor gather(std::span<const std::size_t> rows) const;
  /// The full feature table as a tensor.
  Tensor table() const;
};

/// K-way C-shot episode shape with q queries per class.
struct EpisodeSpec {
  std::size_t ways = 5;
  std::size_t shots = 1;
  std::size_t queries = 15;
};

/// One episode. Labels are re-indexed 0..K-1 in class_ids order; support and
/// query rows are grouped by label in that order.
struct Task {
  Tensor support_x;
  std::vector<std::size_t> support_y;
  Tensor query_x;
  std::vector<std::size_t> query_y;
  std::vector<std::size_t> class_ids;
  std::vector<std::size_t> support_rows;
  std::vector<std::size_t> query_rows;

  std::size_t ways() const { return class_ids.size(); }
};

/// CSV with header "id,label,f0,...,f{d-1}". Labels are interned in order of
/// first appearance; all classes start in the train split.
LabeledDataset load_csv(std::istream& in);
LabeledDataset load_csv(const std::filesystem::path& path);

/// Class centers uniform on the sphere of radius center_sep; samples are
/// center + N(0, noise_sigma^2 I). noise_sigma == 0 yields coincident
/// same-class points.
LabeledDataset synth_gaussian(std::uint64_t seed, std::size_t n_classes,
                              std::size_t per_class, std::size_t dim,
                              double center_sep, double noise_sigma);

/// Random class-disjoint partition into train/val/test.
LabeledDataset split_classes(LabeledDataset ds, std::uint64_t seed,
                             std::size_t n_train, std::size_t n_val,
                             std::size_t n_test);

/// Uniform classes and rows without replacement; first `shots` drawn rows
/// of each class form the support, the rest the query.
Task sample_task(const LabeledDataset& ds, Split split, const EpisodeSpec& spec,
                 CounterRng& rng);

/// FNV-1a over ids, labels and the bit patterns of every feature.
std::string dataset_digest(const LabeledDataset& ds);

/// Row/class counts and the split assignment as a JSON document.
nlohmann::json dataset_manifest(const LabeledDataset& ds);

}  // namespace icnn
