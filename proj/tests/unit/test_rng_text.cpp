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

#include <cmath>
#include <limits>
#include <vector>

#include "icnnmetric/rng.hpp"
#include "icnnmetric/text.hpp"

namespace icnn {
namespace {

TEST(CounterRng, SameKeySameSequence) {
  CounterRng a(42, 3, 9);
  CounterRng b(42, 3, 9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(CounterRng, StreamsDiffer) {
  CounterRng a(42, stream_id(Stream::kTrain, 1), 0);
  CounterRng b(42, stream_id(Stream::kTrain, 1), 1);
  CounterRng c(42, stream_id(Stream::kEvaluate, 1), 0);
  CounterRng d(43, stream_id(Stream::kTrain, 1), 0);
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_NE(x, d.next_u64());
}

TEST(CounterRng, UniformInHalfOpenUnitInterval) {
  CounterRng rng(7);
  double total = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    total += u;
  }
  EXPECT_NEAR(total / n, 0.5, 0.005);
}

TEST(CounterRng, NormalMoments) {
  CounterRng rng(11);
  const int n = 200000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(s2 / n - mean * mean, 1.0, 0.02);
}

TEST(CounterRng, BelowCoversRangeEvenly) {
  CounterRng rng(5);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, n / 7, 400);
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(Text, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    const auto parsed = text::parse_double(text::format_double(v));
    ASSERT_TRUE(parsed.has_value());
    EXPECT_EQ(*parsed, v);
  }
  EXPECT_EQ(text::format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(text::format_double(std::nan("")), "nan");
}

TEST(Text, ParseRejectsTrailingGarbage) {
  EXPECT_FALSE(text::parse_double("1.5x").has_value());
  EXPECT_FALSE(text::parse_double("").has_value());
  EXPECT_EQ(text::parse_double(" +2.5 "), 2.5);
  EXPECT_EQ(text::parse_int("12"), 12);
  EXPECT_FALSE(text::parse_int("1.0").has_value());
}

TEST(Text, SplitKeepsEmptyFields) {
  const auto parts = text::split("a,,b,", ',');
  ASSERT_EQ(parts.size(), 4u);
  EXPECT_EQ(parts[1], "");
  EXPECT_EQ(parts[3], "");
  EXPECT_EQ(text::trim("  x y\t\n"), "x y");
}

}  // namespace
}  // namespace icnn
