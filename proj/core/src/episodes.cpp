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

#include "icnnmetric/episodes.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "icnnmetric/error.hpp"
#include "icnnmetric/text.hpp"

namespace icnn {
namespace {

// Partial Fisher-Yates: the first `take` entries of `pool` become a uniform
// sample without replacement.
void partial_shuffle(std::vector<std::size_t>& pool, std::size_t take,
                     CounterRng& rng) {
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
}

std::string row_error(std::size_t line, const std::string& what) {
  return "csv row " + std::to_string(line) + ": " + what;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

std::vector<std::size_t> LabeledDataset::classes_in(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < class_count(); ++c) {
    if (class_split[c] == split) out.push_back(c);
  }
  return out;
}

Tensor LabeledDataset::gather(std::span<const std::size_t> rows) const {
  std::vector<double> out;
  out.reserve(rows.size() * dim);
  for (std::size_t r : rows) {
    const auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return Tensor::matrix(rows.size(), dim, std::move(out));
}

Tensor LabeledDataset::table() const {
  return Tensor::matrix(size(), dim, features);
}

LabeledDataset load_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || text::trim(line).empty()) {
    throw DataError("csv: missing header row \"id,label,f0,...\"");
  }
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 3 || text::trim(header[0]) != "id" ||
      text::trim(header[1]) != "label") {
    throw DataError(row_error(1, "header must be \"id,label,f0,...,f{d-1}\""));
  }
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (text::trim(header[c]) != "f" + std::to_string(c - 2)) {
      throw DataError(row_error(1, "expected column f" + std::to_string(c - 2)));
    }
  }

  LabeledDataset ds;
  ds.dim = header.size() - 2;
  std::map<std::string, std::size_t, std::less<>> interned;
  std::unordered_set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto cells = text::split(body, ',');
    if (cells.size() != header.size()) {
      throw DataError(row_error(line_no, "expected " + std::to_string(header.size()) +
                                             " cells, got " +
                                             std::to_string(cells.size())));
    }
    std::string id(text::trim(cells[0]));
    if (!seen_ids.insert(id).second) {
      throw DataError(row_error(line_no, "duplicate id '" + id + "'"));
    }
    std::string label(text::trim(cells[1]));
    if (label.empty()) throw DataError(row_error(line_no, "empty label"));
    for (std::size_t c = 2; c < cells.size(); ++c) {
      const auto v = text::parse_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(row_error(line_no, "cannot parse '" +
                                               std::string(text::trim(cells[c])) +
                                               "' in column f" +
                                               std::to_string(c - 2)));
      }
      ds.features.push_back(*v);
    }
    auto [it, inserted] = interned.try_emplace(label, ds.class_names.size());
    if (inserted) {
      ds.class_names.push_back(label);
      ds.class_index.emplace_back();
    }
    ds.class_index[it->second].push_back(ds.labels.size());
    ds.labels.push_back(it->second);
    ds.ids.push_back(std::move(id));
  }
  if (ds.labels.empty()) throw DataError("csv: no data rows after header");
  ds.class_split.assign(ds.class_count(), Split::kTrain);
  return ds;
}

LabeledDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return load_csv(in);
}

LabeledDataset synth_gaussian(std::uint64_t seed, std::size_t n_classes,
                              std::size_t per_class, std::size_t dim,
                              double center_sep, double noise_sigma) {
  if (n_classes == 0 || per_class == 0 || dim == 0) {
    throw ConfigError("synth_gaussian: counts must be positive");
  }
  if (!(center_sep > 0.0) || noise_sigma < 0.0) {
    throw ConfigError("synth_gaussian: center_sep must be > 0, noise >= 0");
  }
  CounterRng rng(seed, stream_id(Stream::kData, 0));
  LabeledDataset ds;
  ds.dim = dim;
  std::vector<double> center(dim);
  for (std::size_t c = 0; c < n_classes; ++c) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : center) {
        x = rng.normal();
        norm += x * x;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : center) x *= center_sep / norm;

    ds.class_names.push_back("c" + std::to_string(c));
    ds.class_index.emplace_back();
    for (std::size_t s = 0; s < per_class; ++s) {
      for (std::size_t k = 0; k < dim; ++k) {
        ds.features.push_back(center[k] + noise_sigma * rng.normal());
      }
      ds.class_index.back().push_back(ds.labels.size());
      ds.ids.push_back(std::to_string(ds.labels.size()));
      ds.labels.push_back(c);
    }
  }
  ds.class_split.assign(n_classes, Split::kTrain);
  return ds;
}

LabeledDataset split_classes(LabeledDataset ds, std::uint64_t seed,
                             std::size_t n_train, std::size_t n_val,
                             std::size_t n_test) {
  if (n_train + n_val + n_test != ds.class_count()) {
    throw ConfigError("split_classes: " + std::to_string(n_train) + "+" +
                      std::to_string(n_val) + "+" + std::to_string(n_test) +
                      " does not equal " + std::to_string(ds.class_count()) +
                      " classes");
  }
  std::vector<std::size_t> order(ds.class_count());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed, stream_id(Stream::kSplit, 0));
  partial_shuffle(order, order.size(), rng);
  for (std::size_t i = 0; i < order.size(); ++i) {
    ds.class_split[order[i]] = i < n_train             ? Split::kTrain
                               : i < n_train + n_val   ? Split::kVal
                                                       : Split::kTest;
  }
  return ds;
}

Task sample_task(const LabeledDataset& ds, Split split, const EpisodeSpec& spec,
                 CounterRng& rng) {
  if (spec.ways == 0 || spec.shots == 0 || spec.queries == 0) {
    throw ConfigError("episode spec needs positive ways, shots and queries");
  }
  std::vector<std::size_t> classes = ds.classes_in(split);
  if (classes.size() < spec.ways) {
    throw DataError("split '" + std::string(to_string(split)) + "' has " +
                    std::to_string(classes.size()) + " classes, " +
                    std::to_string(spec.ways) + "-way tasks need more");
  }
  const std::size_t need = spec.shots + spec.queries;
  for (std::size_t c : classes) {
    if (ds.class_index[c].size() < need) {
      throw DataError("class '" + ds.class_names[c] + "' has " +
                      std::to_string(ds.class_index[c].size()) + " rows, needs " +
                      std::to_string(need));
    }
  }
  partial_shuffle(classes, spec.ways, rng);

  Task task;
  task.class_ids.assign(classes.begin(), classes.begin() + spec.ways);
  std::vector<std::vector<std::size_t>> picked(spec.ways);
  for (std::size_t k = 0; k < spec.ways; ++k) {
    std::vector<std::size_t> pool = ds.class_index[task.class_ids[k]];
    partial_shuffle(pool, need, rng);
    pool.resize(need);
    picked[k] = std::move(pool);
  }
  for (std::size_t k = 0; k < spec.ways; ++k) {
    for (std::size_t s = 0; s < spec.shots; ++s) {
      task.support_rows.push_back(picked[k][s]);
      task.support_y.push_back(k);
    }
  }
  for (std::size_t k = 0; k < spec.ways; ++k) {
    for (std::size_t s = spec.shots; s < need; ++s) {
      task.query_rows.push_back(picked[k][s]);
      task.query_y.push_back(k);
    }
  }
  task.support_x = ds.gather(task.support_rows);
  task.query_x = ds.gather(task.query_rows);
  return task;
}

std::string dataset_digest(const LabeledDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(&ds.dim, sizeof(ds.dim));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    feed(ds.ids[i].data(), ds.ids[i].size());
    const auto& name = ds.class_names[ds.labels[i]];
    feed(name.data(), name.size());
    for (double x : ds.row(i)) {
      const auto bits = std::bit_cast<std::uint64_t>(x);
      feed(&bits, sizeof(bits));
    }
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

nlohmann::json dataset_manifest(const LabeledDataset& ds) {
  nlohmann::json classes = nlohmann::json::array();
  nlohmann::json splits = {{"train", nlohmann::json::array()},
                           {"val", nlohmann::json::array()},
                           {"test", nlohmann::json::array()}};
  for (std::size_t c = 0; c < ds.class_count(); ++c) {
    classes.push_back({{"name", ds.class_names[c]},
                       {"count", ds.class_index[c].size()},
                       {"split", to_string(ds.class_split[c])}});
    splits[std::string(to_string(ds.class_split[c]))].push_back(ds.class_names[c]);
  }
  return {{"rows", ds.size()},
          {"dim", ds.dim},
          {"digest", dataset_digest(ds)},
          {"classes", std::move(classes)},
          {"splits", std::move(splits)}};
}

}  // namespace icnn
