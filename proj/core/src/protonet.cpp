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

#include "icnnmetric/protonet.hpp"

#include <algorithm>

#include "icnnmetric/error.hpp"
#include "icnnmetric/ops.hpp"

namespace icnn {

Prototypes compute_prototypes(const Tensor& support_emb,
                              std::span<const std::size_t> support_y) {
  if (support_emb.rank() != 2 || support_emb.rows() != support_y.size()) {
    throw ShapeError("compute_prototypes: " + std::to_string(support_y.size()) +
                     " labels for embeddings " + shape_string(support_emb.shape()));
  }
  const std::size_t n = support_y.size();
  const std::size_t ways = *std::max_element(support_y.begin(), support_y.end()) + 1;
  std::vector<std::size_t> counts(ways, 0);
  for (std::size_t y : support_y) ++counts[y];
  for (std::size_t k = 0; k < ways; ++k) {
    if (counts[k] == 0) {
      throw DataError("compute_prototypes: class " + std::to_string(k) +
                      " has no support samples");
    }
  }
  std::vector<double> avg(ways * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    avg[support_y[i] * n + i] = 1.0 / static_cast<double>(counts[support_y[i]]);
  }
  return {ops::matmul(Tensor::matrix(ways, n, std::move(avg)), support_emb)};
}

Tensor classify(const Tensor& query_emb, const Prototypes& protos) {
  return ops::scale(ops::pairwise_sq_dist(query_emb, protos.matrix), -1.0);
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.rows() != labels.size()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + shape_string(logits.shape()));
  }
  const std::size_t k = logits.cols();
  std::vector<std::size_t> picks(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(labels[i]) +
                              " outside 0.." + std::to_string(k - 1));
    }
    picks[i] = i * k + labels[i];
  }
  const Tensor flat = ops::reshape(ops::log_softmax(logits), {logits.size()});
  return ops::scale(ops::mean(ops::gather_rows(flat, picks)), -1.0);
}

std::vector<std::size_t> predict(const Tensor& logits) {
  const std::size_t k = logits.cols();
  std::vector<std::size_t> out(logits.rows());
  const auto v = logits.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (v[i * k + j] > v[i * k + best]) best = j;
    }
    out[i] = best;
  }
  return out;
}

double accuracy(const Tensor& logits, std::span<const std::size_t> labels) {
  const auto pred = predict(logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace icnn
