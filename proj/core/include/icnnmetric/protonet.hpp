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

#include <span>
#include <vector>

#include "icnnmetric/tape.hpp"

namespace icnn {

/// Row k is the mean support embedding of task class k.
struct Prototypes {
  Tensor matrix;

  std::size_t ways() const { return matrix.rows(); }
};

/// Labels must cover 0..K-1 with K = max label + 1.
Prototypes compute_prototypes(const Tensor& support_emb,
                              std::span<const std::size_t> support_y);

/// logits(i, k) = -||query_i - prototype_k||^2.
Tensor classify(const Tensor& query_emb, const Prototypes& protos);

/// Mean negative log-softmax probability of the true label.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

/// Argmax per row, ties to the lowest class index.
std::vector<std::size_t> predict(const Tensor& logits);

double accuracy(const Tensor& logits, std::span<const std::size_t> labels);

}  // namespace icnn
