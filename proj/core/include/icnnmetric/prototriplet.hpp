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

#include <cstddef>
#include <span>
#include <vector>

#include "icnnmetric/protonet.hpp"
#include "icnnmetric/tape.hpp"

namespace icnn {

struct TripletConfig {
  double margin = 0.5;
  std::size_t k_negatives = 1;
};

/// For each query, the indices of its k nearest different-class prototypes
/// by squared distance, ties to the lower index. Held fixed while
/// differentiating.
using NegativeSelection = std::vector<std::vector<std::size_t>>;

NegativeSelection select_negatives(const Tensor& query_emb,
                                   std::span<const std::size_t> query_y,
                                   const Prototypes& protos, std::size_t k);

/// [||q - p_true||^2 - ||q - p_neg||^2 + margin]_+ with p_neg the nearest
/// prototype of another class. `query_emb` is 1 x d.
Tensor proto_triplet(const Tensor& query_emb, const Prototypes& protos,
                     std::size_t true_class, double margin);

/// Mean hinge over the k nearest different-class prototypes.
Tensor proto_triplet_k(const Tensor& query_emb, const Prototypes& protos,
                       std::size_t true_class, double margin, std::size_t k);

/// Mean of proto_triplet_k over every query of a task.
Tensor task_proto_triplet(const Tensor& query_emb,
                          std::span<const std::size_t> query_y,
                          const Prototypes& protos, const TripletConfig& config);

/// Same, with negatives supplied instead of selected.
Tensor task_proto_triplet(const Tensor& query_emb,
                          std::span<const std::size_t> query_y,
                          const Prototypes& protos, double margin,
                          const NegativeSelection& negatives);

}  // namespace icnn
