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

#include <cstring>
#include <vector>

#include "icnnmetric/error.hpp"
#include "icnnmetric/ops.hpp"
#include "icnnmetric/prototriplet.hpp"
#include "icnnmetric/rng.hpp"

namespace icnn {
namespace {

const Prototypes kProtos{Tensor::matrix(3, 2, {1, 0, 0, 2, 3, 0})};

TEST(ProtoTriplet, HandValues) {
  const Tensor q = Tensor::matrix(1, 2, {0.5, 0.0});
  // d(true=2) = 6.25, d(0) = 0.25, d(1) = 4.25
  EXPECT_DOUBLE_EQ(proto_triplet(q, kProtos, 2, 0.5).item(), 6.5);
  EXPECT_DOUBLE_EQ(proto_triplet_k(q, kProtos, 2, 0.5, 2).item(), 4.5);
  // true=0 is already closest with room to spare
  EXPECT_DOUBLE_EQ(proto_triplet(q, kProtos, 0, 0.5).item(), 0.0);
}

TEST(ProtoTriplet, GradientWrtQuery) {
  Tape tape;
  const Tensor q = tape.variable(Tensor::matrix(1, 2, {0.5, 0.0}));
  const Tensor g = tape.backward(proto_triplet(q, kProtos, 2, 0.5)).of(q);
  // 2 (p_neg - p_true) with p_neg = (1, 0), p_true = (3, 0)
  EXPECT_DOUBLE_EQ(g[0], -4.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(ProtoTriplet, InactiveHingeHasZeroGradient) {
  Tape tape;
  const Tensor q = tape.variable(Tensor::matrix(1, 2, {0.9, 0.0}));
  const Tensor g = tape.backward(proto_triplet(q, kProtos, 0, 0.5)).of(q);
  EXPECT_EQ(g.values(), (std::vector<double>{0.0, 0.0}));
}

TEST(ProtoTriplet, SingleNegativeEqualsBaseBitForBit) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    CounterRng rng(seed);
    const std::size_t ways = 2 + rng.below(5);
    const std::size_t d = 1 + rng.below(6);
    std::vector<double> p(ways * d);
    std::vector<double> q(d);
    for (double& x : p) x = rng.normal();
    for (double& x : q) x = rng.normal();
    const Prototypes protos{Tensor::matrix(ways, d, p)};
    const Tensor query = Tensor::matrix(1, d, q);
    const std::size_t truth = rng.below(ways);
    const double margin = rng.uniform() * 2.0;
    const double a = proto_triplet(query, protos, truth, margin).item();
    const double b = proto_triplet_k(query, protos, truth, margin, 1).item();
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0) << "seed " << seed;
  }
}

TEST(ProtoTriplet, MoreNegativesNeverIncreasesBeyondHardest) {
  // The hardest negative gives the largest hinge, so the K-mean is bounded by it.
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CounterRng rng(seed + 1000);
    std::vector<double> p(5 * 3);
    for (double& x : p) x = rng.normal();
    const Prototypes protos{Tensor::matrix(5, 3, p)};
    const Tensor q = Tensor::matrix(1, 3, {rng.normal(), rng.normal(), rng.normal()});
    const double one = proto_triplet_k(q, protos, 0, 1.0, 1).item();
    for (std::size_t k = 2; k <= 4; ++k) {
      EXPECT_LE(proto_triplet_k(q, protos, 0, 1.0, k).item(), one + 1e-12);
    }
  }
}

TEST(ProtoTriplet, GradientThroughSupportMatchesCentralDifference) {
  const std::vector<std::size_t> sy{0, 0, 1, 1, 2, 2};
  const std::vector<std::size_t> qy{0, 1, 2, 2};
  const Tensor query = Tensor::matrix(4, 2, {0.3, 0.1, 1.2, -0.7, -0.9, 0.4, 0.0, 0.8});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed);
    std::vector<double> v(12);
    for (double& x : v) x = rng.normal();
    const Tensor support = Tensor::matrix(6, 2, v);
    const Prototypes base = compute_prototypes(support, sy);
    const NegativeSelection neg = select_negatives(query, qy, base, 2);
    auto f = [&](const Tensor& s) {
      return task_proto_triplet(query, qy, compute_prototypes(s, sy), 2.0, neg);
    };
    EXPECT_LE(finite_diff_check(f, support), 1e-5) << "seed " << seed;
  }
}

TEST(ProtoTriplet, SelectNegativesOrdersByDistance) {
  const Tensor q = Tensor::matrix(1, 2, {0.5, 0.0});
  const std::vector<std::size_t> y{2};
  const NegativeSelection sel = select_negatives(q, y, kProtos, 2);
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0], (std::vector<std::size_t>{0, 1}));
}

TEST(ProtoTriplet, Preconditions) {
  const Tensor q = Tensor::matrix(1, 2, {0.0, 0.0});
  EXPECT_THROW(proto_triplet_k(q, kProtos, 0, 0.5, 3), ConfigError);
  EXPECT_THROW(proto_triplet(Tensor::matrix(2, 1, {0, 0}), kProtos, 0, 0.5), ShapeError);
  const Prototypes single{Tensor::matrix(1, 2, {0, 0})};
  EXPECT_THROW(proto_triplet(q, single, 0, 0.5), DataError);
}

TEST(TaskProtoTriplet, MeanOverQueries) {
  const Tensor q = Tensor::matrix(2, 2, {0.5, 0.0, 0.5, 0.0});
  const std::vector<std::size_t> y{2, 0};
  TripletConfig cfg;
  EXPECT_DOUBLE_EQ(task_proto_triplet(q, y, kProtos, cfg).item(), (6.5 + 0.0) / 2.0);
}

}  // namespace
}  // namespace icnn
