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
#include <functional>
#include <span>
#include <vector>

#include "icnnmetric/tape.hpp"

// Differentiable operations. Each op records itself on the tape of its
// tracked operands; with only constant operands the result is a constant.
//
// Binary elementwise ops accept a right operand of the same shape, a
// single-element tensor, or a row (size == cols of a 2-D left operand) that
// is broadcast over every row.

namespace icnn::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor divide(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// a + c for a constant c.
Tensor shift(const Tensor& a, double offset);

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
/// Throws std::domain_error on any non-positive entry.
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
/// Gradient at 0 is taken as 0.
Tensor sqrt(const Tensor& a);
/// a^exponent for positive a.
Tensor power(const Tensor& a, double exponent);
/// max(a, floor) elementwise; clamped entries pass no gradient.
Tensor clamp_min(const Tensor& a, double floor);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// One output entry per set: the max (min) of the flat entries of `a`
/// listed in that set. Ties go to the lowest flat index. Gradient flows only
/// to the selected entry. Every set must be non-empty.
Tensor max_over(const Tensor& a, const std::vector<std::vector<std::size_t>>& sets);
Tensor min_over(const Tensor& a, const std::vector<std::vector<std::size_t>>& sets);
/// Scalar max / min over all entries.
Tensor max_over(const Tensor& a);
Tensor min_over(const Tensor& a);

/// Row-wise log-softmax of a 2-D tensor, stabilized by max subtraction.
Tensor log_softmax(const Tensor& a);

/// Rows of a 2-D tensor, or entries of a 1-D tensor, in the given order.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);

Tensor reshape(const Tensor& a, Shape shape);
/// Stacks 2-D tensors with equal column counts.
Tensor concat_rows(const Tensor& a, const Tensor& b);

/// out(i, j) = sum_k (a(i, k) - b(j, k))^2 for a: n x d, b: m x d.
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);

}  // namespace icnn::ops

namespace icnn {

struct GradientComparison {
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Analytic gradient of `f` at `x` next to a central-difference estimate with
/// step 1e-6 * max(1, |x_i|). `f` must accept both tracked and constant
/// inputs and return a single-element tensor.
GradientComparison compare_gradients(
    const std::function<Tensor(const Tensor&)>& f, const Tensor& x);

/// max_i |analytic_i - numeric_i| / max(1, |analytic_i|); +inf when either
/// side holds a NaN.
double max_relative_error(const GradientComparison& cmp);

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                         const Tensor& x);

}  // namespace icnn
