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

#include "icnnmetric/prototriplet.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "icnnmetric/error.hpp"
#include "icnnmetric/ops.hpp"

namespace icnn {
namespace {

void check_single(const Tensor& query_emb, const Prototypes& protos,
                  std::size_t true_class) {
  if (query_emb.rank() != 2 || query_emb.rows() != 1) {
    throw ShapeError("proto_triplet: query must be 1 x d, got " +
                     shape_string(query_emb.shape()));
  }
  if (protos.ways() < 2) {
    throw DataError("proto_triplet: needs at least two prototypes");
  }
  if (true_class >= protos.ways()) {
    throw std::out_of_range("proto_triplet: class " + std::to_string(true_class) +
                            " has no prototype");
  }
}

void check_k(std::size_t k, std::size_t ways) {
  if (k == 0 || k + 1 > ways) {
    throw ConfigError("proto_triplet: k_negatives=" + std::to_string(k) +
                      " needs 1 <= k <= " + std::to_string(ways - 1));
  }
}

std::vector<std::size_t> nearest_others(std::span<const double> sq_dist,
                                        std::size_t true_class, std::size_t k) {
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < sq_dist.size(); ++j) {
    if (j != true_class) others.push_back(j);
  }
  std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    return sq_dist[a] < sq_dist[b];
  });
  others.resize(k);
  return others;
}

}  // namespace

NegativeSelection select_negatives(const Tensor& query_emb,
                                   std::span<const std::size_t> query_y,
                                   const Prototypes& protos, std::size_t k) {
  check_k(k, protos.ways());
  const Tensor d = ops::pairwise_sq_dist(query_emb.detached(),
                                         protos.matrix.detached());
  const std::size_t ways = protos.ways();
  NegativeSelection out(query_y.size());
  for (std::size_t i = 0; i < query_y.size(); ++i) {
    out[i] = nearest_others(d.data().subspan(i * ways, ways), query_y[i], k);
  }
  return out;
}

Tensor proto_triplet(const Tensor& query_emb, const Prototypes& protos,
                     std::size_t true_class, double margin) {
  check_single(query_emb, protos, true_class);
  const Tensor d = ops::reshape(ops::pairwise_sq_dist(query_emb, protos.matrix),
                                {protos.ways()});
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < protos.ways(); ++j) {
    if (j != true_class) others.push_back(j);
  }
  const std::size_t pos_idx[] = {true_class};
  const Tensor pos = ops::gather_rows(d, pos_idx);
  const Tensor neg = ops::min_over(d, {others});
  return ops::relu(ops::shift(ops::sub(pos, neg), margin));
}

Tensor proto_triplet_k(const Tensor& query_emb, const Prototypes& protos,
                       std::size_t true_class, double margin, std::size_t k) {
  check_single(query_emb, protos, true_class);
  check_k(k, protos.ways());
  const std::size_t labels[] = {true_class};
  return task_proto_triplet(query_emb, labels, protos, margin,
                            select_negatives(query_emb, labels, protos, k));
}

Tensor task_proto_triplet(const Tensor& query_emb,
                          std::span<const std::size_t> query_y,
                          const Prototypes& protos, const TripletConfig& config) {
  return task_proto_triplet(
      query_emb, query_y, protos, config.margin,
      select_negatives(query_emb, query_y, protos, config.k_negatives));
}

Tensor task_proto_triplet(const Tensor& query_emb,
                          std::span<const std::size_t> query_y,
                          const Prototypes& protos, double margin,
                          const NegativeSelection& negatives) {
  if (query_y.empty()) throw DataError("proto_triplet: no queries");
  if (query_emb.rank() != 2 || query_emb.rows() != query_y.size() ||
      negatives.size() != query_y.size()) {
    throw ShapeError("proto_triplet: " + std::to_string(query_y.size()) +
                     " labels for queries " + shape_string(query_emb.shape()));
  }
  const std::size_t ways = protos.ways();
  const Tensor d = ops::reshape(ops::pairwise_sq_dist(query_emb, protos.matrix),
                                {query_emb.rows() * ways});
  std::vector<std::size_t> pos_idx;
  std::vector<std::size_t> neg_idx;
  for (std::size_t i = 0; i < query_y.size(); ++i) {
    if (query_y[i] >= ways) {
      throw std::out_of_range("proto_triplet: label " + std::to_string(query_y[i]) +
                              " has no prototype");
    }
    for (std::size_t j : negatives[i]) {
      pos_idx.push_back(i * ways + query_y[i]);
      neg_idx.push_back(i * ways + j);
    }
  }
  const Tensor pos = ops::gather_rows(d, pos_idx);
  const Tensor neg = ops::gather_rows(d, neg_idx);
  return ops::mean(ops::relu(ops::shift(ops::sub(pos, neg), margin)));
}

}  // namespace icnn
