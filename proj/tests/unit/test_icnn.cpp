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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "icnnmetric/error.hpp"
#include "icnnmetric/icnn.hpp"
#include "icnnmetric/ops.hpp"
#include "icnnmetric/rng.hpp"

namespace icnn {
namespace {

const Tensor kFourPoints = Tensor::matrix(4, 1, {0.0, 0.1, 1.0, 1.1});
const std::vector<std::size_t> kFourLabels{0, 0, 1, 1};

// Brute-force reference built from the definitions, sharing no code with the
// library.
struct Reference {
  std::vector<double> lambda;
  std::vector<double> omega;
  std::vector<double> gamma;
  double score = 0.0;
};

double population_variance(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

Reference reference(const std::vector<std::vector<double>>& x,
                    const std::vector<std::size_t>& y, std::size_t k, bool split,
                    bool batch, double p = 1, double q = 1, double r = 1) {
  const std::size_t n = x.size();
  const double eps = 1e-12;
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t j = 0; j < x[a].size(); ++j) s += (x[a][j] - x[b][j]) * (x[a][j] - x[b][j]);
    return std::sqrt(s);
  };
  std::vector<std::vector<double>> h_same(n), h_diff(n);
  std::vector<double> l_same(n), l_diff(n);
  Reference out;
  std::size_t k1 = 0, k2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> same, diff;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      (y[j] == y[i] ? same : diff).push_back({dist(i, j), j});
    }
    std::sort(same.begin(), same.end());
    std::sort(diff.begin(), diff.end());
    if (same.size() > k) same.resize(k);
    if (diff.size() > k) diff.resize(k);
    double lo = 1e300, hi = -1e300;
    for (auto& e : same) lo = std::min(lo, e.first), hi = std::max(hi, e.first);
    for (auto& e : diff) lo = std::min(lo, e.first), hi = std::max(hi, e.first);
    const double span = std::max(hi - lo, eps);
    for (auto& e : same) h_same[i].push_back((e.first - lo) / span);
    for (auto& e : diff) h_diff[i].push_back((e.first - lo) / span);
    double sd = 0.0, ss = 0.0;
    for (double h : h_diff[i]) sd += h;
    for (double h : h_same[i]) ss += 1.0 - h;
    l_diff[i] = sd;
    l_same[i] = ss;
    double lam;
    if (split) {
      lam = sd / static_cast<double>(diff.size()) +
            (same.empty() ? 0.0 : ss / static_cast<double>(same.size()));
    } else {
      lam = (sd + ss) / static_cast<double>(diff.size() + same.size());
    }
    out.lambda.push_back(lam);
    out.gamma.push_back(static_cast<double>(same.size()) /
                        static_cast<double>(same.size() + diff.size()));
    k1 = std::max(k1, diff.size());
    k2 = std::max(k2, same.size());
  }
  const double base = static_cast<double>(k1 * k1 + k2 * k2);
  for (std::size_t i = 0; i < n; ++i) {
    if (batch) {
      out.omega.push_back(base - population_variance(l_diff) - population_variance(l_same));
    } else {
      std::vector<double> one_minus;
      for (double h : h_same[i]) one_minus.push_back(1.0 - h);
      const double nd = static_cast<double>(h_diff[i].size());
      const double ns = static_cast<double>(h_same[i].size());
      out.omega.push_back(base - nd * nd * population_variance(h_diff[i]) -
                          ns * ns * population_variance(one_minus));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.score += std::pow(std::max(out.lambda[i], eps), 1.0 / p) *
                 std::pow(std::max(out.omega[i], eps), 1.0 / q) *
                 std::pow(std::max(out.gamma[i], eps), 1.0 / r);
  }
  out.score /= static_cast<double>(n);
  return out;
}

struct RandomBatch {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> labels;
  Tensor tensor;
};

RandomBatch random_batch(std::uint64_t seed) {
  CounterRng rng(seed, 77);
  const std::size_t classes = 2 + rng.below(3);
  const std::size_t n = classes + 2 + rng.below(10);
  const std::size_t d = 1 + rng.below(3);
  RandomBatch b;
  std::vector<double> flat;
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(i < classes ? i : rng.below(classes));
    std::vector<double> row(d);
    for (double& v : row) v = rng.normal() + static_cast<double>(b.labels.back());
    flat.insert(flat.end(), row.begin(), row.end());
    b.rows.push_back(std::move(row));
  }
  b.tensor = Tensor::matrix(n, d, flat);
  return b;
}

TEST(IcnnFixture, FourPointNeighborhoods) {
  const NeighborhoodIndex idx = build_neighborhoods(kFourPoints, kFourLabels, 1);
  ASSERT_EQ(idx.size(), 4u);
  ASSERT_EQ(idx.same_class[0].size(), 1u);
  EXPECT_EQ(idx.same_class[0][0].index, 1u);
  EXPECT_EQ(idx.diff_class[0][0].index, 2u);
  const NormalizedNeighborhood h = normalize_h(idx, 0);
  EXPECT_DOUBLE_EQ(h.same[0], 0.0);
  EXPECT_DOUBLE_EQ(h.diff[0], 1.0);
  EXPECT_DOUBLE_EQ(lambda_term(idx, 0, LambdaVariant::kSplit).lambda, 2.0);
}

TEST(IcnnFixture, FourPointScoreUnderDefaults) {
  const IcnnTerms t = icnn_score(kFourPoints, kFourLabels, IcnnConfig{});
  EXPECT_NEAR(t.score, 2.0, 1e-12);
  EXPECT_NEAR(t.loss, -std::log(2.0), 1e-12);
  EXPECT_EQ(t.k1, 1u);
  EXPECT_EQ(t.k2, 1u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(t.lambda[i], 2.0);
    EXPECT_DOUBLE_EQ(t.omega[i], 2.0);
    EXPECT_DOUBLE_EQ(t.gamma[i], 0.5);
  }
  EXPECT_NEAR(icnn_loss(kFourPoints, kFourLabels, IcnnConfig{}).item(), -std::log(2.0), 1e-12);
}

TEST(Icnn, MatchesReferenceOnRandomBatches) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const RandomBatch b = random_batch(seed);
    IcnnConfig cfg;
    cfg.k_neighbors = 1 + seed % 4;
    cfg.lambda_variant = seed % 2 ? LambdaVariant::kOriginal : LambdaVariant::kSplit;
    cfg.variance_mode = seed % 3 ? VarianceMode::kBatch : VarianceMode::kPerPoint;
    cfg.p = 1.0 + static_cast<double>(seed % 3);
    cfg.q = 1.5;
    cfg.r = 0.5 + static_cast<double>(seed % 2);
    const Reference want = reference(b.rows, b.labels, cfg.k_neighbors,
                                     cfg.lambda_variant == LambdaVariant::kSplit,
                                     cfg.variance_mode == VarianceMode::kBatch, cfg.p,
                                     cfg.q, cfg.r);
    const IcnnTerms got = icnn_score(b.tensor, b.labels, cfg);
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      ASSERT_NEAR(got.lambda[i], want.lambda[i], 1e-12) << "seed " << seed;
      ASSERT_NEAR(got.omega[i], want.omega[i], 1e-12) << "seed " << seed;
      ASSERT_NEAR(got.gamma[i], want.gamma[i], 1e-15) << "seed " << seed;
    }
    ASSERT_NEAR(got.score, want.score, 1e-10 * std::max(1.0, want.score)) << "seed " << seed;
    ASSERT_NEAR(got.loss, -std::log(std::max(want.score, 1e-12)), 1e-10) << "seed " << seed;
    ASSERT_NEAR(icnn_loss(b.tensor, b.labels, cfg).item(), got.loss, 1e-12);
  }
}

TEST(Icnn, BoundsHoldOnRandomBatches) {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const RandomBatch b = random_batch(seed + 5000);
    IcnnConfig cfg;
    cfg.k_neighbors = 1 + seed % 5;
    cfg.lambda_variant = seed % 2 ? LambdaVariant::kOriginal : LambdaVariant::kSplit;
    const IcnnTerms t = icnn_score(b.tensor, b.labels, cfg);
    const NeighborhoodIndex idx = build_neighborhoods(b.tensor, b.labels, cfg.k_neighbors);
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      ASSERT_GE(t.lambda[i], 0.0);
      ASSERT_LE(t.lambda[i], 2.0);
      ASSERT_GE(t.gamma[i], 0.0);
      ASSERT_LE(t.gamma[i], 1.0);
      ASSERT_GE(t.omega[i], 0.0);
      ASSERT_EQ(t.gamma[i] == 0.0, idx.same_class[i].empty());
    }
  }
}

TEST(Icnn, GammaZeroExactlyWhenNoSameClassNeighbor) {
  const Tensor x = Tensor::matrix(3, 1, {0.0, 1.0, 2.0});
  const std::vector<std::size_t> y{0, 1, 1};
  IcnnConfig cfg;
  cfg.k_neighbors = 2;
  const IcnnTerms t = icnn_score(x, y, cfg);
  EXPECT_EQ(t.gamma[0], 0.0);
  EXPECT_DOUBLE_EQ(t.gamma[1], 0.5);
  const NeighborhoodIndex idx = build_neighborhoods(x, y, 2);
  EXPECT_DOUBLE_EQ(gamma_term(idx, 2), 0.5);
}

TEST(Icnn, GammaThreeQuarters) {
  const Tensor x = Tensor::matrix(5, 1, {0.0, 0.1, 0.2, 0.3, 5.0});
  const std::vector<std::size_t> y{0, 0, 0, 0, 1};
  const NeighborhoodIndex idx = build_neighborhoods(x, y, 3);
  EXPECT_DOUBLE_EQ(gamma_term(idx, 0), 0.75);
}

TEST(Icnn, NeighborListsAreSortedCappedAndExcludeSelf) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RandomBatch b = random_batch(seed + 900);
    const NeighborhoodIndex idx = build_neighborhoods(b.tensor, b.labels, 3);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (const auto* list : {&idx.same_class[i], &idx.diff_class[i]}) {
        EXPECT_LE(list->size(), 3u);
        for (std::size_t a = 0; a < list->size(); ++a) {
          EXPECT_NE((*list)[a].index, i);
          if (a > 0) {
            const Neighbor& p = (*list)[a - 1];
            const Neighbor& c = (*list)[a];
            EXPECT_TRUE(p.distance < c.distance ||
                        (p.distance == c.distance && p.index < c.index));
          }
        }
      }
      for (const Neighbor& nb : idx.same_class[i]) EXPECT_EQ(b.labels[nb.index], b.labels[i]);
      for (const Neighbor& nb : idx.diff_class[i]) EXPECT_NE(b.labels[nb.index], b.labels[i]);
    }
  }
}

TEST(Icnn, DuplicatesAreNeighborsAtDistanceZero) {
  const Tensor x = Tensor::matrix(3, 1, {1.0, 1.0, 4.0});
  const std::vector<std::size_t> y{0, 0, 1};
  const NeighborhoodIndex idx = build_neighborhoods(x, y, 1);
  EXPECT_EQ(idx.same_class[0][0].index, 1u);
  EXPECT_EQ(idx.same_class[0][0].distance, 0.0);
}

TEST(Icnn, EquidistantNeighborsNormalizeToZero) {
  const Tensor x = Tensor::matrix(3, 2, {0.0, 0.0, 1.0, 0.0, 0.0, 1.0});
  const std::vector<std::size_t> y{0, 0, 1};
  const NeighborhoodIndex idx = build_neighborhoods(x, y, 1);
  const NormalizedNeighborhood h = normalize_h(idx, 0);
  EXPECT_EQ(h.same[0], 0.0);
  EXPECT_EQ(h.diff[0], 0.0);
}

TEST(Icnn, SingleClassIsRejected) {
  const Tensor x = Tensor::matrix(3, 1, {0.0, 1.0, 2.0});
  const std::vector<std::size_t> y{0, 0, 0};
  EXPECT_THROW(build_neighborhoods(x, y, 1), DataError);
  EXPECT_THROW(icnn_score(x, y, IcnnConfig{}), DataError);
}

TEST(Icnn, ScaleInvarianceOfLambdaGammaAndPerPointOmega) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RandomBatch b = random_batch(seed + 300);
    IcnnConfig cfg;
    cfg.k_neighbors = 3;
    cfg.variance_mode = VarianceMode::kPerPoint;
    const IcnnTerms a = icnn_score(b.tensor, b.labels, cfg);
    const IcnnTerms s = icnn_score(ops::scale(b.tensor, 10.0), b.labels, cfg);
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      EXPECT_NEAR(a.lambda[i], s.lambda[i], 1e-12);
      EXPECT_EQ(a.gamma[i], s.gamma[i]);
      EXPECT_NEAR(a.omega[i], s.omega[i], 1e-12);
    }
  }
}

TEST(Icnn, ConstantLambdaGivesFullOmega) {
  const IcnnTerms t = icnn_score(kFourPoints, kFourLabels, IcnnConfig{});
  const NeighborhoodIndex idx = build_neighborhoods(kFourPoints, kFourLabels, 1);
  IcnnConfig per_point;
  per_point.variance_mode = VarianceMode::kPerPoint;
  for (double w : omega_term(idx, per_point)) EXPECT_DOUBLE_EQ(w, 2.0);
  EXPECT_DOUBLE_EQ(t.omega[0], 2.0);
}

TEST(Icnn, LargeExponentsDriveScoreToOne) {
  const RandomBatch b = random_batch(42);
  IcnnConfig cfg;
  cfg.k_neighbors = 2;
  cfg.p = cfg.q = cfg.r = 1e9;
  const IcnnTerms t = icnn_score(b.tensor, b.labels, cfg);
  // gamma may be clamped at epsilon; eps^(1e-9) is still within 3e-8 of 1.
  EXPECT_NEAR(t.score, 1.0, 1e-7);
}

TEST(Icnn, ConfigValidation) {
  IcnnConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epsilon = 1e-3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.q = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(icnn_mode_from_string("query_vs_prototypes"), IcnnMode::kQueryVsPrototypes);
  EXPECT_EQ(to_string(IcnnMode::kSupportPlusQuery), "support_plus_query");
  EXPECT_THROW(icnn_mode_from_string("everything"), ConfigError);
  EXPECT_THROW(lambda_variant_from_string("fancy"), ConfigError);
}

TEST(Icnn, AutoNeighborsFollowsClassCounts) {
  // 5-way 5-shot support: k = min(5, 5 - 1, 25 - 5) = 4
  std::vector<double> v;
  std::vector<std::size_t> y;
  for (std::size_t c = 0; c < 5; ++c) {
    for (std::size_t s = 0; s < 5; ++s) {
      v.push_back(static_cast<double>(c * 10 + s));
      y.push_back(c);
    }
  }
  const NeighborhoodIndex idx = build_neighborhoods(Tensor::matrix(25, 1, v), y, kAutoNeighbors);
  EXPECT_EQ(idx.k2(), 4u);
  EXPECT_EQ(idx.k1(), 4u);
}

TEST(Icnn, GradientMatchesCentralDifferenceWithFrozenSelection) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const RandomBatch b = random_batch(seed + 2000);
    IcnnConfig cfg;
    cfg.k_neighbors = 1 + seed % 3;
    cfg.variance_mode = seed % 2 ? VarianceMode::kPerPoint : VarianceMode::kBatch;
    cfg.lambda_variant = seed % 4 < 2 ? LambdaVariant::kSplit : LambdaVariant::kOriginal;
    const NeighborhoodIndex frozen =
        build_neighborhoods(b.tensor, b.labels, cfg.k_neighbors, cfg.distance);
    const IcnnTerms t = icnn_terms(frozen, cfg);
    if (t.score <= 1e-6) continue;  // clamp region has no gradient to compare
    auto f = [&](const Tensor& e) { return icnn_loss(e, b.labels, cfg, frozen); };
    EXPECT_LE(finite_diff_check(f, b.tensor), 1e-5) << "seed " << seed;
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(IcnnCross, QueryAtOwnPrototypeHasLambdaTwo) {
  const Tensor protos = Tensor::matrix(3, 2, {0.0, 0.0, 10.0, 0.0, 0.0, 10.0});
  const std::vector<std::size_t> pool_y{0, 1, 2};
  const Tensor q = Tensor::matrix(1, 2, {0.0, 0.0});
  const std::vector<std::size_t> qy{0};
  for (std::size_t k : {kAutoNeighbors, std::size_t{2}}) {
    const NeighborhoodIndex idx = build_cross_neighborhoods(q, qy, protos, pool_y, k);
    EXPECT_EQ(idx.same_class[0].size(), 1u);
    EXPECT_EQ(idx.diff_class[0].size(), k == kAutoNeighbors ? 1u : 2u);
    EXPECT_DOUBLE_EQ(lambda_term(idx, 0, LambdaVariant::kSplit).lambda, 2.0);
  }
}

TEST(IcnnTask, FullModeEqualsLossOnConcatenation) {
  const Tensor s = Tensor::matrix(4, 1, {0.0, 0.2, 1.0, 1.3});
  const std::vector<std::size_t> sy{0, 0, 1, 1};
  const Tensor q = Tensor::matrix(2, 1, {0.1, 1.1});
  const std::vector<std::size_t> qy{0, 1};
  const Prototypes p = compute_prototypes(s, sy);
  IcnnConfig cfg;
  cfg.mode = IcnnMode::kFull;
  const double task = icnn_task_loss(s, sy, q, qy, p, cfg).loss.item();
  const Tensor all = Tensor::matrix(6, 1, {0.0, 0.2, 1.0, 1.3, 0.1, 1.1});
  const std::vector<std::size_t> ally{0, 0, 1, 1, 0, 1};
  EXPECT_DOUBLE_EQ(task, icnn_loss(all, ally, cfg).item());
}

TEST(IcnnTask, TwoPartModesSumSupportAndQueryTerms) {
  const Tensor s = Tensor::matrix(4, 1, {0.0, 0.2, 1.0, 1.3});
  const std::vector<std::size_t> sy{0, 0, 1, 1};
  const Tensor q = Tensor::matrix(2, 1, {0.1, 1.1});
  const std::vector<std::size_t> qy{0, 1};
  const Prototypes p = compute_prototypes(s, sy);
  IcnnConfig cfg;
  const double support = icnn_loss(s, sy, cfg).item();
  cfg.mode = IcnnMode::kSupportPlusQuery;
  EXPECT_DOUBLE_EQ(icnn_task_loss(s, sy, q, qy, p, cfg).loss.item(),
                   support + icnn_cross_loss(q, qy, s, sy, cfg).item());
  cfg.mode = IcnnMode::kQueryVsPrototypes;
  const std::vector<std::size_t> py{0, 1};
  EXPECT_DOUBLE_EQ(icnn_task_loss(s, sy, q, qy, p, cfg).loss.item(),
                   support + icnn_cross_loss(q, qy, p.matrix, py, cfg).item());
  cfg.mode = IcnnMode::kSupportOnly;
  EXPECT_DOUBLE_EQ(icnn_task_loss(s, sy, q, qy, p, cfg).loss.item(), support);
}

TEST(IcnnTask, OneShotSupportOnlyIsDegenerateWithWarning) {
  const Tensor s = Tensor::matrix(3, 1, {0.0, 1.0, 2.0});
  const std::vector<std::size_t> sy{0, 1, 2};
  const Tensor q = Tensor::matrix(3, 1, {0.1, 1.1, 2.1});
  const std::vector<std::size_t> qy{0, 1, 2};
  IcnnConfig cfg;
  cfg.mode = IcnnMode::kSupportOnly;
  const IcnnTaskLoss out = icnn_task_loss(s, sy, q, qy, compute_prototypes(s, sy), cfg);
  EXPECT_FALSE(out.warnings.empty());
  EXPECT_GT(out.loss.item(), 20.0);
}

TEST(IcnnTask, ReplayedSelectionGivesSameLoss) {
  const Tensor s = Tensor::matrix(6, 2, {0, 0, 0.3, 0.1, 2, 2, 2.2, 1.9, -2, 1, -1.7, 1.2});
  const std::vector<std::size_t> sy{0, 0, 1, 1, 2, 2};
  const Tensor q = Tensor::matrix(3, 2, {0.1, 0.2, 2.1, 2.3, -1.9, 0.8});
  const std::vector<std::size_t> qy{0, 1, 2};
  const Prototypes p = compute_prototypes(s, sy);
  for (IcnnMode mode : {IcnnMode::kSupportOnly, IcnnMode::kSupportPlusQuery,
                        IcnnMode::kQueryVsPrototypes, IcnnMode::kFull}) {
    IcnnConfig cfg;
    cfg.mode = mode;
    const IcnnTaskSelection sel = select_task_neighborhoods(s, sy, q, qy, p, cfg);
    EXPECT_EQ(icnn_task_loss(s, sy, q, qy, p, cfg).loss.item(),
              icnn_task_loss(s, sy, q, qy, p, cfg, sel).loss.item());
  }
}

}  // namespace
}  // namespace icnn
