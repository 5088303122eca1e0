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

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "icnnmetric/icnn.hpp"
#include "icnnmetric/tape.hpp"

namespace icnn {

/// Mean over unordered class pairs of the mean Euclidean distance between
/// their members. Throws DataError with fewer than two classes.
double inter_class_distance(const Tensor& emb, std::span<const std::size_t> labels);

/// Mean over classes of the mean within-class pairwise Euclidean distance;
/// singleton classes count as 0.
double intra_class_distance(const Tensor& emb, std::span<const std::size_t> labels);

/// Var(lambda_diff) + Var(lambda_same) over the batch (population variance).
double lambda_variance_sum(const Tensor& emb, std::span<const std::size_t> labels,
                           const IcnnConfig& config);

struct ClassSeparability {
  std::size_t label = 0;
  std::size_t count = 0;
  double intra = 0.0;  // mean within-class pairwise distance
  double nearest_other = 0.0;  // smallest mean distance to another class
};

struct SeparabilityReport {
  double inter_class_mean = 0.0;
  double intra_class_mean = 0.0;
  std::vector<ClassSeparability> per_class;
  double lambda_variance_sum = 0.0;
};

SeparabilityReport separability_report(const Tensor& emb,
                                       std::span<const std::size_t> labels,
                                       const IcnnConfig& config);

/// Fixed 2-D toy used by the proposition harnesses: class centers on the x
/// axis `spacing` apart, Gaussian noise with separate scales along and
/// across that axis, fed through a linear 2x2 encoder initialised to the
/// identity. Both objectives are invariant to the encoder's scale, so after
/// every step the encoder is rescaled to its initial Frobenius norm.
struct ToyProblem {
  std::size_t classes = 3;
  std::size_t per_class = 30;
  double spacing = 3.0;
  double noise_along = 0.5;
  double noise_across = 2.0;
  double learning_rate = 0.1;
  std::size_t k_neighbors = 5;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  double inter = 0.0;
  double intra = 0.0;
  double var_sum = 0.0;
  double lambda_mean = 0.0;
};

struct PropositionReport {
  std::vector<TrajectoryPoint> trajectory;  // steps 0..steps
  bool pass = false;
};

/// Toy samples and labels for a seed.
Tensor toy_points(const ToyProblem& toy, std::uint64_t seed,
                  std::vector<std::size_t>& labels);

/// Gradient ascent on mean lambda (split variant); passes iff the final
/// inter-class distance exceeds the initial one and the final intra-class
/// distance is below it.
PropositionReport verify_proposition_1(std::uint64_t seed, std::size_t steps,
                                       const ToyProblem& toy = {});

/// Gradient descent on the ICNN loss (default config); passes iff the final
/// Var(lambda_diff) + Var(lambda_same) is below the initial one.
PropositionReport verify_proposition_2(std::uint64_t seed, std::size_t steps,
                                       const ToyProblem& toy = {});

/// CSV with header step,inter,intra,var_sum,lambda_mean.
void write_trajectory_csv(const PropositionReport& report, std::ostream& out);

}  // namespace icnn
