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

#include "icnnmetric/icnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "icnnmetric/error.hpp"
#include "icnnmetric/ops.hpp"

namespace icnn {
namespace {

double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / n;
}

double point_distance(std::span<const double> a, std::span<const double> b,
                      DistanceKind kind) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = a[c] - b[c];
    acc += diff * diff;
  }
  return kind == DistanceKind::kEuclidean ? std::sqrt(acc) : acc;
}

void require_matrix(std::string_view what, const Tensor& t, std::size_t rows) {
  if (t.rank() != 2 || t.rows() != rows) {
    throw ShapeError(std::string(what) + ": " + std::to_string(rows) +
                     " labels for embeddings " + shape_string(t.shape()));
  }
}

std::size_t auto_neighbors(std::span<const std::size_t> pool_labels, bool self) {
  std::vector<std::size_t> counts;
  for (std::size_t y : pool_labels) {
    if (y >= counts.size()) counts.resize(y + 1, 0);
    ++counts[y];
  }
  std::size_t smallest = pool_labels.size(), largest = 0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    smallest = std::min(smallest, c);
    largest = std::max(largest, c);
  }
  const std::size_t same_cap = self ? smallest - 1 : smallest;
  const std::size_t diff_cap = pool_labels.size() - largest;
  return std::max<std::size_t>(1, std::min({std::size_t{5}, same_cap, diff_cap}));
}

// Core kNN selection. With `self` set, anchors and pool are the same rows
// and an anchor never lists itself.
NeighborhoodIndex select_neighbors(const Tensor& anchors,
                                   std::span<const std::size_t> anchor_labels,
                                   const Tensor& pool,
                                   std::span<const std::size_t> pool_labels,
                                   std::size_t k, DistanceKind kind, bool self) {
  require_matrix("build_neighborhoods", anchors, anchor_labels.size());
  require_matrix("build_neighborhoods", pool, pool_labels.size());
  if (anchors.cols() != pool.cols()) {
    throw ShapeError("build_neighborhoods: anchors " + shape_string(anchors.shape()) +
                     " and pool " + shape_string(pool.shape()) +
                     " differ in dimension");
  }
  if (self && anchor_labels.size() < 2) {
    throw DataError("build_neighborhoods: needs at least two points");
  }
  if (k == kAutoNeighbors) k = auto_neighbors(pool_labels, self);
  const std::size_t n = anchor_labels.size(), m = pool_labels.size();
  const std::size_t d = anchors.cols();
  const auto av = anchors.data();
  const auto pv = pool.data();

  NeighborhoodIndex index;
  index.same_class.resize(n);
  index.diff_class.resize(n);
  std::vector<Neighbor> same, diff;
  for (std::size_t i = 0; i < n; ++i) {
    same.clear();
    diff.clear();
    const auto a = av.subspan(i * d, d);
    for (std::size_t j = 0; j < m; ++j) {
      if (self && j == i) continue;
      const Neighbor nb{j, point_distance(a, pv.subspan(j * d, d), kind)};
      (pool_labels[j] == anchor_labels[i] ? same : diff).push_back(nb);
    }
    if (diff.empty()) {
      throw DataError("build_neighborhoods: point " + std::to_string(i) +
                      " has no different-class candidate");
    }
    auto by_distance = [](const Neighbor& x, const Neighbor& y) {
      return x.distance < y.distance || (x.distance == y.distance && x.index < y.index);
    };
    for (auto* list : {&same, &diff}) {
      const std::size_t take = std::min(k, list->size());
      std::partial_sort(list->begin(), list->begin() + take, list->end(), by_distance);
      list->resize(take);
    }
    index.same_class[i] = same;
    index.diff_class[i] = diff;
  }
  return index;
}

Tensor factor(const Tensor& x, double exponent, double eps) {
  return ops::power(ops::clamp_min(x, eps), 1.0 / exponent);
}

// Differentiable graph given frozen neighborhoods. `pool` may be the same
// tensor as `anchors`.
IcnnGraph graph_from_index(const Tensor& anchors, const Tensor& pool,
                           const NeighborhoodIndex& idx, const IcnnConfig& cfg) {
  cfg.validate();
  const std::size_t n = idx.size();
  const std::size_t m = pool.rows();
  if (anchors.rows() != n) {
    throw ShapeError("icnn_loss: neighborhood index covers " + std::to_string(n) +
                     " points, embeddings have " + std::to_string(anchors.rows()));
  }
  std::vector<std::size_t> entries, owner;
  std::vector<std::vector<std::size_t>> sets(n);
  std::vector<double> cnt_same(n), cnt_diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (idx.diff_class[i].empty()) {
      throw DataError("icnn_loss: point " + std::to_string(i) +
                      " has an empty different-class neighborhood");
    }
    for (const auto* list : {&idx.same_class[i], &idx.diff_class[i]}) {
      for (const Neighbor& nb : *list) {
        sets[i].push_back(entries.size());
        entries.push_back(i * m + nb.index);
        owner.push_back(i);
      }
    }
    cnt_same[i] = static_cast<double>(idx.same_class[i].size());
    cnt_diff[i] = static_cast<double>(idx.diff_class[i].size());
  }
  const std::size_t e_count = entries.size();

  // Selector matrices summing entries per anchor.
  std::vector<double> sel_same(n * e_count, 0.0), sel_diff(n * e_count, 0.0);
  {
    std::size_t e = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < idx.same_class[i].size(); ++s) sel_same[i * e_count + e++] = 1.0;
      for (std::size_t s = 0; s < idx.diff_class[i].size(); ++s) sel_diff[i * e_count + e++] = 1.0;
    }
  }
  const Tensor s_same = Tensor::matrix(n, e_count, std::move(sel_same));
  const Tensor s_diff = Tensor::matrix(n, e_count, std::move(sel_diff));
  auto per_anchor = [n, e_count](const Tensor& selector, const Tensor& per_entry) {
    return ops::reshape(ops::matmul(selector, ops::reshape(per_entry, {e_count, 1})), {n});
  };
  auto inverse = [](const std::vector<double>& counts) {
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      out[i] = counts[i] > 0.0 ? 1.0 / counts[i] : 0.0;
    }
    return Tensor::vector(std::move(out));
  };

  const Tensor sq = ops::reshape(ops::pairwise_sq_dist(anchors, pool), {n * m});
  Tensor dist = ops::gather_rows(sq, entries);
  if (cfg.distance == DistanceKind::kEuclidean) dist = ops::sqrt(dist);

  const Tensor theta = ops::gather_rows(ops::min_over(dist, sets), owner);
  const Tensor alpha = ops::gather_rows(ops::max_over(dist, sets), owner);
  const Tensor h = ops::divide(ops::sub(dist, theta),
                               ops::clamp_min(ops::sub(alpha, theta), cfg.epsilon));

  const Tensor lam_diff = per_anchor(s_diff, h);
  const Tensor lam_same = per_anchor(s_same, ops::shift(ops::scale(h, -1.0), 1.0));
  const Tensor inv_same = inverse(cnt_same);
  const Tensor inv_diff = inverse(cnt_diff);

  Tensor lambda;
  if (cfg.lambda_variant == LambdaVariant::kSplit) {
    lambda = ops::add(ops::mul(lam_diff, inv_diff), ops::mul(lam_same, inv_same));
  } else {
    std::vector<double> union_size(n);
    for (std::size_t i = 0; i < n; ++i) union_size[i] = cnt_same[i] + cnt_diff[i];
    lambda = ops::mul(ops::add(lam_diff, lam_same), inverse(union_size));
  }

  const double k1 = static_cast<double>(idx.k1());
  const double k2 = static_cast<double>(idx.k2());
  const double bound = k1 * k1 + k2 * k2;
  Tensor omega;
  if (cfg.variance_mode == VarianceMode::kBatch) {
    auto variance = [](const Tensor& v) {
      return ops::mean(ops::square(ops::sub(v, ops::mean(v))));
    };
    omega = ops::shift(ops::scale(ops::add(variance(lam_diff), variance(lam_same)), -1.0),
                       bound);
  } else {
    const Tensor mean_diff = ops::mul(lam_diff, inv_diff);
    const Tensor mean_same = ops::mul(per_anchor(s_same, h), inv_same);
    const Tensor dev_diff = per_anchor(
        s_diff, ops::square(ops::sub(h, ops::gather_rows(mean_diff, owner))));
    const Tensor dev_same = per_anchor(
        s_same, ops::square(ops::sub(h, ops::gather_rows(mean_same, owner))));
    // |N|^2 Var = |N| * sum of squared deviations.
    omega = ops::shift(
        ops::scale(ops::add(ops::mul(dev_diff, Tensor::vector(cnt_diff)),
                            ops::mul(dev_same, Tensor::vector(cnt_same))),
                   -1.0),
        bound);
  }

  std::vector<double> gamma(n);
  for (std::size_t i = 0; i < n; ++i) gamma[i] = cnt_same[i] / (cnt_same[i] + cnt_diff[i]);

  const Tensor prod = ops::mul(
      ops::mul(factor(lambda, cfg.p, cfg.epsilon), factor(omega, cfg.q, cfg.epsilon)),
      factor(Tensor::vector(std::move(gamma)), cfg.r, cfg.epsilon));
  IcnnGraph graph;
  graph.score = ops::mean(prod);
  graph.loss = ops::scale(ops::log(ops::clamp_min(graph.score, cfg.epsilon)), -1.0);
  graph.lambda = std::move(lambda);
  graph.lambda_diff = lam_diff;
  graph.lambda_same = lam_same;
  graph.omega = std::move(omega);
  return graph;
}

std::vector<std::size_t> iota_labels(std::size_t k) {
  std::vector<std::size_t> out(k);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::vector<std::size_t> concat_labels(std::span<const std::size_t> a,
                                       std::span<const std::size_t> b) {
  std::vector<std::size_t> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

bool all_gamma_zero(const NeighborhoodIndex& idx) {
  for (const auto& same : idx.same_class) {
    if (!same.empty()) return false;
  }
  return true;
}

const char* kDegenerateGamma =
    "no point has a same-class neighbor: gamma is 0 everywhere and the score "
    "is epsilon-scale";

}  // namespace

std::string_view to_string(LambdaVariant v) {
  return v == LambdaVariant::kSplit ? "split" : "original";
}

std::string_view to_string(VarianceMode v) {
  return v == VarianceMode::kBatch ? "batch" : "per_point";
}

std::string_view to_string(DistanceKind v) {
  return v == DistanceKind::kEuclidean ? "euclidean" : "squared";
}

std::string_view to_string(IcnnMode v) {
  switch (v) {
    case IcnnMode::kSupportOnly:
      return "support_only";
    case IcnnMode::kSupportPlusQuery:
      return "support_plus_query";
    case IcnnMode::kQueryVsPrototypes:
      return "query_vs_prototypes";
    case IcnnMode::kFull:
      return "full";
  }
  return "full";
}

LambdaVariant lambda_variant_from_string(std::string_view s) {
  if (s == "split") return LambdaVariant::kSplit;
  if (s == "original") return LambdaVariant::kOriginal;
  throw ConfigError("unknown lambda variant '" + std::string(s) +
                    "' (expected split or original)");
}

VarianceMode variance_mode_from_string(std::string_view s) {
  if (s == "batch") return VarianceMode::kBatch;
  if (s == "per_point") return VarianceMode::kPerPoint;
  throw ConfigError("unknown variance mode '" + std::string(s) +
                    "' (expected batch or per_point)");
}

DistanceKind distance_kind_from_string(std::string_view s) {
  if (s == "euclidean") return DistanceKind::kEuclidean;
  if (s == "squared") return DistanceKind::kSquaredEuclidean;
  throw ConfigError("unknown distance '" + std::string(s) +
                    "' (expected euclidean or squared)");
}

IcnnMode icnn_mode_from_string(std::string_view s) {
  for (IcnnMode m : {IcnnMode::kSupportOnly, IcnnMode::kSupportPlusQuery,
                     IcnnMode::kQueryVsPrototypes, IcnnMode::kFull}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown icnn mode '" + std::string(s) +
                    "' (expected support_only, support_plus_query, "
                    "query_vs_prototypes or full)");
}

void IcnnConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1e-6)) {
    throw ConfigError("icnn.epsilon must lie in (0, 1e-6]");
  }
  if (!(p > 0.0 && q > 0.0 && r > 0.0)) {
    throw ConfigError("icnn exponents p, q, r must be positive");
  }
}

std::size_t NeighborhoodIndex::k1() const {
  std::size_t k = 0;
  for (const auto& l : diff_class) k = std::max(k, l.size());
  return k;
}

std::size_t NeighborhoodIndex::k2() const {
  std::size_t k = 0;
  for (const auto& l : same_class) k = std::max(k, l.size());
  return k;
}

NeighborhoodIndex build_neighborhoods(const Tensor& emb,
                                      std::span<const std::size_t> labels,
                                      std::size_t k, DistanceKind distance) {
  return select_neighbors(emb, labels, emb, labels, k, distance, true);
}

NeighborhoodIndex build_cross_neighborhoods(
    const Tensor& anchors, std::span<const std::size_t> anchor_labels,
    const Tensor& pool, std::span<const std::size_t> pool_labels, std::size_t k,
    DistanceKind distance) {
  return select_neighbors(anchors, anchor_labels, pool, pool_labels, k, distance,
                          false);
}

NormalizedNeighborhood normalize_h(const NeighborhoodIndex& index, std::size_t i,
                                   double epsilon) {
  const auto& same = index.same_class.at(i);
  const auto& diff = index.diff_class.at(i);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto* list : {&same, &diff}) {
    for (const Neighbor& nb : *list) {
      lo = std::min(lo, nb.distance);
      hi = std::max(hi, nb.distance);
    }
  }
  NormalizedNeighborhood out;
  const double span = std::max(hi - lo, epsilon);
  for (const Neighbor& nb : same) out.same.push_back((nb.distance - lo) / span);
  for (const Neighbor& nb : diff) out.diff.push_back((nb.distance - lo) / span);
  return out;
}

LambdaParts lambda_term(const NeighborhoodIndex& index, std::size_t i,
                        LambdaVariant variant, double epsilon) {
  const NormalizedNeighborhood h = normalize_h(index, i, epsilon);
  LambdaParts parts;
  for (double x : h.diff) parts.diff_sum += x;
  for (double x : h.same) parts.same_sum += 1.0 - x;
  const double nd = static_cast<double>(h.diff.size());
  const double ns = static_cast<double>(h.same.size());
  if (variant == LambdaVariant::kSplit) {
    parts.lambda = (nd > 0 ? parts.diff_sum / nd : 0.0) +
                   (ns > 0 ? parts.same_sum / ns : 0.0);
  } else {
    parts.lambda = (parts.diff_sum + parts.same_sum) / (nd + ns);
  }
  return parts;
}

std::vector<double> omega_term(const NeighborhoodIndex& index,
                               const IcnnConfig& config) {
  const std::size_t n = index.size();
  const double k1 = static_cast<double>(index.k1());
  const double k2 = static_cast<double>(index.k2());
  const double bound = k1 * k1 + k2 * k2;
  std::vector<double> out(n);
  if (config.variance_mode == VarianceMode::kBatch) {
    std::vector<double> diff(n), same(n);
    for (std::size_t i = 0; i < n; ++i) {
      const LambdaParts parts = lambda_term(index, i, config.lambda_variant, config.epsilon);
      diff[i] = parts.diff_sum;
      same[i] = parts.same_sum;
    }
    std::fill(out.begin(), out.end(),
              bound - (population_variance(diff) + population_variance(same)));
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const NormalizedNeighborhood h = normalize_h(index, i, config.epsilon);
    const double nd = static_cast<double>(h.diff.size());
    const double ns = static_cast<double>(h.same.size());
    // Var(1 - h) == Var(h).
    out[i] = bound - nd * nd * population_variance(h.diff) -
             ns * ns * population_variance(h.same);
  }
  return out;
}

double gamma_term(const NeighborhoodIndex& index, std::size_t i) {
  const double ns = static_cast<double>(index.same_class.at(i).size());
  const double nd = static_cast<double>(index.diff_class.at(i).size());
  return ns / (ns + nd);
}

IcnnTerms icnn_terms(const NeighborhoodIndex& index, const IcnnConfig& config) {
  config.validate();
  const std::size_t n = index.size();
  IcnnTerms terms;
  terms.k1 = index.k1();
  terms.k2 = index.k2();
  terms.omega = omega_term(index, config);
  double acc = 0.0;
  const double eps = config.epsilon;
  for (std::size_t i = 0; i < n; ++i) {
    if (index.diff_class[i].empty()) {
      throw DataError("icnn_score: point " + std::to_string(i) +
                      " has an empty different-class neighborhood");
    }
    const LambdaParts parts = lambda_term(index, i, config.lambda_variant, eps);
    terms.lambda.push_back(parts.lambda);
    terms.lambda_diff.push_back(parts.diff_sum);
    terms.lambda_same.push_back(parts.same_sum);
    terms.gamma.push_back(gamma_term(index, i));
    acc += std::pow(std::max(parts.lambda, eps), 1.0 / config.p) *
           std::pow(std::max(terms.omega[i], eps), 1.0 / config.q) *
           std::pow(std::max(terms.gamma[i], eps), 1.0 / config.r);
  }
  terms.score = acc / static_cast<double>(n);
  terms.loss = -std::log(std::max(terms.score, eps));
  if (all_gamma_zero(index)) terms.warnings.emplace_back(kDegenerateGamma);
  return terms;
}

IcnnTerms icnn_score(const Tensor& emb, std::span<const std::size_t> labels,
                     const IcnnConfig& config) {
  config.validate();
  return icnn_terms(build_neighborhoods(emb.detached(), labels, config.k_neighbors,
                                        config.distance),
                    config);
}

Tensor icnn_loss(const Tensor& emb, std::span<const std::size_t> labels,
                 const IcnnConfig& config) {
  config.validate();
  return icnn_loss(emb, labels, config,
                   build_neighborhoods(emb.detached(), labels, config.k_neighbors,
                                       config.distance));
}

Tensor icnn_loss(const Tensor& emb, std::span<const std::size_t> labels,
                 const IcnnConfig& config, const NeighborhoodIndex& frozen) {
  require_matrix("icnn_loss", emb, labels.size());
  return graph_from_index(emb, emb, frozen, config).loss;
}

IcnnGraph icnn_graph(const Tensor& emb, std::span<const std::size_t> labels,
                     const IcnnConfig& config, const NeighborhoodIndex& frozen) {
  require_matrix("icnn_graph", emb, labels.size());
  return graph_from_index(emb, emb, frozen, config);
}

Tensor icnn_cross_loss(const Tensor& anchors,
                       std::span<const std::size_t> anchor_labels,
                       const Tensor& pool, std::span<const std::size_t> pool_labels,
                       const IcnnConfig& config) {
  config.validate();
  return icnn_cross_loss(
      anchors, anchor_labels, pool, pool_labels, config,
      build_cross_neighborhoods(anchors.detached(), anchor_labels, pool.detached(),
                                pool_labels, config.k_neighbors, config.distance));
}

Tensor icnn_cross_loss(const Tensor& anchors,
                       std::span<const std::size_t> anchor_labels,
                       const Tensor& pool, std::span<const std::size_t> pool_labels,
                       const IcnnConfig& config, const NeighborhoodIndex& frozen) {
  require_matrix("icnn_cross_loss", anchors, anchor_labels.size());
  require_matrix("icnn_cross_loss", pool, pool_labels.size());
  return graph_from_index(anchors, pool, frozen, config).loss;
}

IcnnTaskSelection select_task_neighborhoods(
    const Tensor& support_emb, std::span<const std::size_t> support_y,
    const Tensor& query_emb, std::span<const std::size_t> query_y,
    const Prototypes& protos, const IcnnConfig& config) {
  config.validate();
  const std::size_t k = config.k_neighbors;
  const Tensor support = support_emb.detached();
  IcnnTaskSelection sel;
  if (config.mode != IcnnMode::kSupportOnly && query_y.empty()) {
    throw DataError(std::string("icnn mode ") + std::string(to_string(config.mode)) +
                    " needs a non-empty query set");
  }
  switch (config.mode) {
    case IcnnMode::kSupportOnly:
      sel.primary = build_neighborhoods(support, support_y, k, config.distance);
      break;
    case IcnnMode::kSupportPlusQuery:
      sel.primary = build_neighborhoods(support, support_y, k, config.distance);
      sel.secondary = build_cross_neighborhoods(query_emb.detached(), query_y,
                                                support, support_y, k, config.distance);
      break;
    case IcnnMode::kQueryVsPrototypes: {
      sel.primary = build_neighborhoods(support, support_y, k, config.distance);
      const auto proto_y = iota_labels(protos.ways());
      sel.secondary = build_cross_neighborhoods(query_emb.detached(), query_y,
                                                protos.matrix.detached(), proto_y, k,
                                                config.distance);
      break;
    }
    case IcnnMode::kFull: {
      const auto labels = concat_labels(support_y, query_y);
      sel.primary = build_neighborhoods(
          ops::concat_rows(support, query_emb.detached()), labels, k, config.distance);
      break;
    }
  }
  return sel;
}

IcnnTaskLoss icnn_task_loss(const Tensor& support_emb,
                            std::span<const std::size_t> support_y,
                            const Tensor& query_emb,
                            std::span<const std::size_t> query_y,
                            const Prototypes& protos, const IcnnConfig& config) {
  return icnn_task_loss(support_emb, support_y, query_emb, query_y, protos, config,
                        select_task_neighborhoods(support_emb, support_y, query_emb,
                                                  query_y, protos, config));
}

IcnnTaskLoss icnn_task_loss(const Tensor& support_emb,
                            std::span<const std::size_t> support_y,
                            const Tensor& query_emb,
                            std::span<const std::size_t> query_y,
                            const Prototypes& protos, const IcnnConfig& config,
                            const IcnnTaskSelection& frozen) {
  IcnnTaskLoss out;
  if (config.mode != IcnnMode::kSupportOnly && query_y.empty()) {
    throw DataError(std::string("icnn mode ") + std::string(to_string(config.mode)) +
                    " needs a non-empty query set");
  }
  switch (config.mode) {
    case IcnnMode::kSupportOnly:
      out.loss = icnn_loss(support_emb, support_y, config, frozen.primary);
      break;
    case IcnnMode::kSupportPlusQuery:
      out.loss = ops::add(
          icnn_loss(support_emb, support_y, config, frozen.primary),
          icnn_cross_loss(query_emb, query_y, support_emb, support_y, config,
                          frozen.secondary));
      break;
    case IcnnMode::kQueryVsPrototypes: {
      const auto proto_y = iota_labels(protos.ways());
      out.loss = ops::add(
          icnn_loss(support_emb, support_y, config, frozen.primary),
          icnn_cross_loss(query_emb, query_y, protos.matrix, proto_y, config,
                          frozen.secondary));
      break;
    }
    case IcnnMode::kFull: {
      const auto labels = concat_labels(support_y, query_y);
      out.loss = icnn_loss(ops::concat_rows(support_emb, query_emb), labels, config,
                           frozen.primary);
      break;
    }
  }
  if (config.mode != IcnnMode::kFull && all_gamma_zero(frozen.primary)) {
    out.warnings.emplace_back(std::string("support term: ") + kDegenerateGamma);
  }
  return out;
}

}  // namespace icnn
