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

// Inter/Intra Class Nearest Neighbors score and loss.
//
// For every anchor x_i two neighborhoods are drawn from a candidate pool:
// N_same(i), the k nearest candidates with the anchor's label, and
// N_diff(i), the k nearest with any other label. Distances to the union are
// min-max normalized into h(i, p) in [0, 1], and three per-anchor factors are
// formed:
//
//   lambda(i) = sum_{N_diff} h / |N_diff| + sum_{N_same} (1 - h) / |N_same|
//               (split form; the original form divides the sum of both by
//               |N_diff u N_same|)
//   omega(i)  = k1^2 + k2^2 - [Var(lambda_diff) + Var(lambda_same)]
//   gamma(i)  = |N_same| / (|N_same| + |N_diff|)
//
// score = mean_i lambda^(1/p) omega^(1/q) gamma^(1/r), loss = -log(score).
// Neighborhood membership and the min/max picks are constants under
// differentiation; gradients flow through the selected distances.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icnnmetric/protonet.hpp"
#include "icnnmetric/tape.hpp"

namespace icnn {

enum class LambdaVariant { kOriginal, kSplit };
enum class VarianceMode { kBatch, kPerPoint };
enum class DistanceKind { kEuclidean, kSquaredEuclidean };

/// Which task points are scored, and against which neighbor pool.
enum class IcnnMode {
  kSupportOnly,        // support scored against support
  kSupportPlusQuery,   // support term + queries scored against the support
  kQueryVsPrototypes,  // support term + queries scored against prototypes
  kFull,               // support and queries pooled
};

std::string_view to_string(LambdaVariant v);
std::string_view to_string(VarianceMode v);
std::string_view to_string(DistanceKind v);
std::string_view to_string(IcnnMode v);
LambdaVariant lambda_variant_from_string(std::string_view s);
VarianceMode variance_mode_from_string(std::string_view s);
DistanceKind distance_kind_from_string(std::string_view s);
IcnnMode icnn_mode_from_string(std::string_view s);

/// k_neighbors value that selects min(5, C - 1, N - C_max) per point set,
/// floored at 1, where C is the smallest class count (not reduced by one
/// when anchors are scored against a separate pool) and C_max the largest.
inline constexpr std::size_t kAutoNeighbors = 0;

struct IcnnConfig {
  std::size_t k_neighbors = kAutoNeighbors;
  double p = 1.0;
  double q = 1.0;
  double r = 1.0;
  LambdaVariant lambda_variant = LambdaVariant::kSplit;
  VarianceMode variance_mode = VarianceMode::kBatch;
  DistanceKind distance = DistanceKind::kEuclidean;
  double epsilon = 1e-12;
  IcnnMode mode = IcnnMode::kFull;

  /// Throws ConfigError unless epsilon is in (0, 1e-6] and exponents are
  /// positive.
  void validate() const;
};

struct Neighbor {
  std::size_t index;  // row in the candidate pool
  double distance;
};

/// Per anchor, neighbors sorted ascending by distance with ties broken by
/// index. An anchor is never its own neighbor when the pool is the anchor
/// set itself.
struct NeighborhoodIndex {
  std::vector<std::vector<Neighbor>> same_class;
  std::vector<std::vector<Neighbor>> diff_class;

  std::size_t size() const { return same_class.size(); }
  /// max_i |N_diff(i)|
  std::size_t k1() const;
  /// max_i |N_same(i)|
  std::size_t k2() const;
};

/// Exact k-NN within one point set; k == kAutoNeighbors picks k from the
/// class counts. Throws DataError when a point has no different-class
/// candidate.
NeighborhoodIndex build_neighborhoods(const Tensor& emb,
                                      std::span<const std::size_t> labels,
                                      std::size_t k,
                                      DistanceKind distance = DistanceKind::kEuclidean);

/// Exact k-NN of each anchor among a separate candidate pool.
NeighborhoodIndex build_cross_neighborhoods(
    const Tensor& anchors, std::span<const std::size_t> anchor_labels,
    const Tensor& pool, std::span<const std::size_t> pool_labels, std::size_t k,
    DistanceKind distance = DistanceKind::kEuclidean);

/// Normalized distances of anchor i, same-class neighbors first (in index
/// order) followed by different-class ones.
struct NormalizedNeighborhood {
  std::vector<double> same;
  std::vector<double> diff;
};

NormalizedNeighborhood normalize_h(const NeighborhoodIndex& index, std::size_t i,
                                   double epsilon = 1e-12);

struct LambdaParts {
  double diff_sum = 0.0;  // sum of h over N_diff
  double same_sum = 0.0;  // sum of 1 - h over N_same
  double lambda = 0.0;
};

LambdaParts lambda_term(const NeighborhoodIndex& index, std::size_t i,
                        LambdaVariant variant, double epsilon = 1e-12);

/// One omega per anchor (identical entries in batch mode). Not clamped.
std::vector<double> omega_term(const NeighborhoodIndex& index,
                               const IcnnConfig& config);

double gamma_term(const NeighborhoodIndex& index, std::size_t i);

struct IcnnTerms {
  std::vector<double> lambda;
  std::vector<double> lambda_diff;
  std::vector<double> lambda_same;
  std::vector<double> omega;
  std::vector<double> gamma;
  double score = 0.0;
  double loss = 0.0;
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  std::vector<std::string> warnings;
};

/// Plain-value evaluation from an already built index.
IcnnTerms icnn_terms(const NeighborhoodIndex& index, const IcnnConfig& config);

/// Plain-value evaluation of a point set.
IcnnTerms icnn_score(const Tensor& emb, std::span<const std::size_t> labels,
                     const IcnnConfig& config);

/// Differentiable -log(max(score, epsilon)) of a point set.
Tensor icnn_loss(const Tensor& emb, std::span<const std::size_t> labels,
                 const IcnnConfig& config);
/// Same, with the neighborhoods supplied instead of selected.
Tensor icnn_loss(const Tensor& emb, std::span<const std::size_t> labels,
                 const IcnnConfig& config, const NeighborhoodIndex& frozen);

/// Intermediate tensors of the differentiable evaluation.
struct IcnnGraph {
  Tensor lambda;       // per point
  Tensor lambda_diff;  // per point, sum of h over N_diff
  Tensor lambda_same;  // per point, sum of 1 - h over N_same
  Tensor omega;        // per point, or a single entry in batch mode
  Tensor score;
  Tensor loss;
};

IcnnGraph icnn_graph(const Tensor& emb, std::span<const std::size_t> labels,
                     const IcnnConfig& config, const NeighborhoodIndex& frozen);

/// Differentiable loss of anchors scored against a separate pool.
Tensor icnn_cross_loss(const Tensor& anchors,
                       std::span<const std::size_t> anchor_labels,
                       const Tensor& pool, std::span<const std::size_t> pool_labels,
                       const IcnnConfig& config);
Tensor icnn_cross_loss(const Tensor& anchors,
                       std::span<const std::size_t> anchor_labels,
                       const Tensor& pool, std::span<const std::size_t> pool_labels,
                       const IcnnConfig& config, const NeighborhoodIndex& frozen);

/// Neighborhoods used by icnn_task_loss, captured so they can be replayed.
struct IcnnTaskSelection {
  NeighborhoodIndex primary;    // support, or support+query in full mode
  NeighborhoodIndex secondary;  // queries (modes with a query term)
};

IcnnTaskSelection select_task_neighborhoods(
    const Tensor& support_emb, std::span<const std::size_t> support_y,
    const Tensor& query_emb, std::span<const std::size_t> query_y,
    const Prototypes& protos, const IcnnConfig& config);

struct IcnnTaskLoss {
  Tensor loss;
  std::vector<std::string> warnings;
};

/// Task-level ICNN loss for config.mode. The support and query terms of the
/// two-part modes are added without weights.
IcnnTaskLoss icnn_task_loss(const Tensor& support_emb,
                            std::span<const std::size_t> support_y,
                            const Tensor& query_emb,
                            std::span<const std::size_t> query_y,
                            const Prototypes& protos, const IcnnConfig& config);
IcnnTaskLoss icnn_task_loss(const Tensor& support_emb,
                            std::span<const std::size_t> support_y,
                            const Tensor& query_emb,
                            std::span<const std::size_t> query_y,
                            const Prototypes& protos, const IcnnConfig& config,
                            const IcnnTaskSelection& frozen);

}  // namespace icnn
