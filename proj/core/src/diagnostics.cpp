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

#include "icnnmetric/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icnnmetric/error.hpp"
#include "icnnmetric/ops.hpp"
#include "icnnmetric/rng.hpp"
#include "icnnmetric/text.hpp"

namespace icnn {
namespace {

std::vector<std::vector<std::size_t>> members_by_class(
    std::span<const std::size_t> labels) {
  std::size_t classes = 0;
  for (std::size_t y : labels) classes = std::max(classes, y + 1);
  std::vector<std::vector<std::size_t>> out(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

double euclid(const Tensor& emb, std::size_t a, std::size_t b) {
  const std::size_t d = emb.cols();
  const auto v = emb.data();
  double acc = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double diff = v[a * d + c] - v[b * d + c];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

double mean_between(const Tensor& emb, const std::vector<std::size_t>& a,
                    const std::vector<std::size_t>& b) {
  double acc = 0.0;
  for (std::size_t i : a) {
    for (std::size_t j : b) acc += euclid(emb, i, j);
  }
  return acc / static_cast<double>(a.size() * b.size());
}

double mean_within(const Tensor& emb, const std::vector<std::size_t>& a) {
  if (a.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) {
    for (std::size_t y = x + 1; y < a.size(); ++y) acc += euclid(emb, a[x], a[y]);
  }
  return acc / static_cast<double>(a.size() * (a.size() - 1) / 2);
}

double variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

IcnnConfig toy_config(const ToyProblem& toy) {
  IcnnConfig cfg;
  cfg.k_neighbors = toy.k_neighbors;
  cfg.lambda_variant = LambdaVariant::kSplit;
  return cfg;
}

TrajectoryPoint measure(std::size_t step, const Tensor& emb,
                        std::span<const std::size_t> labels, const IcnnConfig& cfg) {
  const IcnnTerms terms = icnn_score(emb, labels, cfg);
  double lambda_mean = 0.0;
  for (double x : terms.lambda) lambda_mean += x;
  lambda_mean /= static_cast<double>(terms.lambda.size());
  return {step, inter_class_distance(emb, labels), intra_class_distance(emb, labels),
          variance(terms.lambda_diff) + variance(terms.lambda_same), lambda_mean};
}

// Frobenius norm of the identity initialisation.
const double kToyNorm = std::sqrt(2.0);

enum class Objective { kAscendLambda, kDescendLoss };

PropositionReport run_toy(std::uint64_t seed, std::size_t steps, const ToyProblem& toy,
                          Objective objective) {
  std::vector<std::size_t> labels;
  const Tensor points = toy_points(toy, seed, labels);
  const IcnnConfig cfg = toy_config(toy);
  Tensor weights = Tensor::matrix(2, 2, {1.0, 0.0, 0.0, 1.0});

  PropositionReport report;
  for (std::size_t step = 0;; ++step) {
    const Tensor emb = ops::matmul(points, weights);
    report.trajectory.push_back(measure(step, emb, labels, cfg));
    if (step == steps) break;

    Tape tape;
    const Tensor w = tape.variable(weights);
    const Tensor tracked = ops::matmul(points, w);
    const NeighborhoodIndex idx = build_neighborhoods(emb, labels, cfg.k_neighbors);
    const IcnnGraph graph = icnn_graph(tracked, labels, cfg, idx);
    const Tensor objective_value =
        objective == Objective::kAscendLambda ? ops::mean(graph.lambda) : graph.loss;
    const Tensor grad = tape.backward(objective_value).of(w);
    const double direction = objective == Objective::kAscendLambda ? 1.0 : -1.0;
    auto wv = weights.mutable_data();
    for (std::size_t i = 0; i < wv.size(); ++i) {
      wv[i] += direction * toy.learning_rate * grad[i];
    }
    double norm = 0.0;
    for (double v : wv) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : wv) v *= kToyNorm / norm;
    }
  }
  return report;
}

}  // namespace

double inter_class_distance(const Tensor& emb, std::span<const std::size_t> labels) {
  const auto classes = members_by_class(labels);
  std::vector<std::size_t> present;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (!classes[c].empty()) present.push_back(c);
  }
  if (present.size() < 2) {
    throw DataError("inter_class_distance: needs at least two classes");
  }
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < present.size(); ++a) {
    for (std::size_t b = a + 1; b < present.size(); ++b) {
      acc += mean_between(emb, classes[present[a]], classes[present[b]]);
      ++pairs;
    }
  }
  return acc / static_cast<double>(pairs);
}

double intra_class_distance(const Tensor& emb, std::span<const std::size_t> labels) {
  const auto classes = members_by_class(labels);
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& members : classes) {
    if (members.empty()) continue;
    acc += mean_within(emb, members);
    ++count;
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

double lambda_variance_sum(const Tensor& emb, std::span<const std::size_t> labels,
                           const IcnnConfig& config) {
  const IcnnTerms terms = icnn_score(emb, labels, config);
  return variance(terms.lambda_diff) + variance(terms.lambda_same);
}

SeparabilityReport separability_report(const Tensor& emb,
                                       std::span<const std::size_t> labels,
                                       const IcnnConfig& config) {
  SeparabilityReport report;
  report.inter_class_mean = inter_class_distance(emb, labels);
  report.intra_class_mean = intra_class_distance(emb, labels);
  report.lambda_variance_sum = lambda_variance_sum(emb, labels, config);
  const auto classes = members_by_class(labels);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].empty()) continue;
    ClassSeparability row;
    row.label = c;
    row.count = classes[c].size();
    row.intra = mean_within(emb, classes[c]);
    row.nearest_other = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < classes.size(); ++o) {
      if (o == c || classes[o].empty()) continue;
      row.nearest_other = std::min(row.nearest_other, mean_between(emb, classes[c], classes[o]));
    }
    report.per_class.push_back(row);
  }
  return report;
}

Tensor toy_points(const ToyProblem& toy, std::uint64_t seed,
                  std::vector<std::size_t>& labels) {
  CounterRng rng(seed, stream_id(Stream::kToy, 0));
  labels.clear();
  std::vector<double> xy;
  const double mid = (static_cast<double>(toy.classes) - 1.0) / 2.0;
  for (std::size_t c = 0; c < toy.classes; ++c) {
    const double cx = (static_cast<double>(c) - mid) * toy.spacing;
    for (std::size_t s = 0; s < toy.per_class; ++s) {
      xy.push_back(cx + toy.noise_along * rng.normal());
      xy.push_back(toy.noise_across * rng.normal());
      labels.push_back(c);
    }
  }
  return Tensor::matrix(labels.size(), 2, std::move(xy));
}

PropositionReport verify_proposition_1(std::uint64_t seed, std::size_t steps,
                                       const ToyProblem& toy) {
  PropositionReport report = run_toy(seed, steps, toy, Objective::kAscendLambda);
  const auto& first = report.trajectory.front();
  const auto& last = report.trajectory.back();
  report.pass = last.inter > first.inter && last.intra < first.intra;
  return report;
}

PropositionReport verify_proposition_2(std::uint64_t seed, std::size_t steps,
                                       const ToyProblem& toy) {
  PropositionReport report = run_toy(seed, steps, toy, Objective::kDescendLoss);
  report.pass = report.trajectory.back().var_sum < report.trajectory.front().var_sum;
  return report;
}

void write_trajectory_csv(const PropositionReport& report, std::ostream& out) {
  out << "step,inter,intra,var_sum,lambda_mean\n";
  for (const auto& p : report.trajectory) {
    out << p.step << ',' << text::format_double(p.inter) << ','
        << text::format_double(p.intra) << ',' << text::format_double(p.var_sum) << ','
        << text::format_double(p.lambda_mean) << '\n';
  }
}

}  // namespace icnn
