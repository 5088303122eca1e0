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

#include "checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "icnnmetric/diagnostics.hpp"
#include "icnnmetric/icnn.hpp"
#include "icnnmetric/ops.hpp"
#include "icnnmetric/protonet.hpp"
#include "icnnmetric/prototriplet.hpp"
#include "icnnmetric/rng.hpp"
#include "icnnmetric/text.hpp"

namespace icnn::cli {
namespace {

constexpr double kGradTolerance = 1e-5;
constexpr std::uint64_t kCheckStream = 0xC4EC;

Tensor random_matrix(CounterRng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal();
  return Tensor::matrix(rows, cols, std::move(v));
}

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out(end - begin);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

/// Support rows first (grouped by class), then query rows.
struct TaskLayout {
  std::size_t ways;
  std::size_t shots;
  std::size_t queries;
  std::vector<std::size_t> support_y;
  std::vector<std::size_t> query_y;

  TaskLayout(std::size_t w, std::size_t s, std::size_t q) : ways(w), shots(s), queries(q) {
    for (std::size_t c = 0; c < w; ++c) {
      support_y.insert(support_y.end(), s, c);
      query_y.insert(query_y.end(), q, c);
    }
  }
  std::size_t ns() const { return support_y.size(); }
  std::size_t nq() const { return query_y.size(); }
  Tensor support(const Tensor& x) const { return ops::gather_rows(x, range(0, ns())); }
  Tensor query(const Tensor& x) const { return ops::gather_rows(x, range(ns(), ns() + nq())); }
};

struct GradOutcome {
  double worst = 0.0;
  std::size_t cases = 0;
};

/// Checks `f` at `x`; a pending sign injection flips the analytic side.
void check_gradient(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                    bool inject, GradOutcome& out) {
  GradientComparison cmp = compare_gradients(f, x);
  if (inject) {
    for (double& g : cmp.analytic) g = -g;
  }
  out.worst = std::max(out.worst, max_relative_error(cmp));
  ++out.cases;
}

CheckResult gradient_result(std::string name, std::string_view op, const GradOutcome& g) {
  CheckResult r;
  r.name = std::move(name);
  r.pass = g.worst <= kGradTolerance;
  r.detail = std::string(op) + ": max_rel_err=" + text::format_double(g.worst) + " over " +
             std::to_string(g.cases) + " seeds";
  return r;
}

CheckResult grad_cross_entropy(const CheckOptions& opt, bool inject) {
  GradOutcome g;
  const TaskLayout layout(4, 2, 3);
  for (std::size_t seed = 0; seed < opt.seeds; ++seed) {
    CounterRng rng(seed, kCheckStream, 1);
    const Tensor x = random_matrix(rng, layout.ns() + layout.nq(), 3);
    auto f = [&](const Tensor& e) {
      const Prototypes p = compute_prototypes(layout.support(e), layout.support_y);
      return cross_entropy(classify(layout.query(e), p), layout.query_y);
    };
    check_gradient(f, x, inject, g);
  }
  return gradient_result("grad_cross_entropy", "cross_entropy", g);
}

/// Smallest |hinge argument| over the given (query, negative) pairs.
double kink_distance(const Tensor& query, std::span<const std::size_t> labels,
                     const Prototypes& protos, const NegativeSelection& negatives,
                     double margin) {
  const Tensor d = ops::pairwise_sq_dist(query.detached(), protos.matrix.detached());
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j : negatives[i]) {
      closest = std::min(closest, std::abs(d.at(i, labels[i]) - d.at(i, j) + margin));
    }
  }
  return closest;
}

CheckResult grad_proto_triplet(const CheckOptions& opt, bool inject, std::size_t k) {
  GradOutcome g;
  const TaskLayout layout(4, 2, 1);
  for (std::size_t seed = 0; seed < opt.seeds; ++seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      CounterRng rng(seed, kCheckStream + k, attempt);
      const Tensor x = random_matrix(rng, layout.ns() + layout.nq(), 3);
      const double margin = 2.0 * rng.uniform();
      const std::size_t label = rng.below(layout.ways);
      const std::size_t labels[] = {label};
      const std::size_t qrow[] = {layout.ns() + label};
      const Prototypes p0 = compute_prototypes(layout.support(x), layout.support_y);
      const Tensor q0 = ops::gather_rows(x, qrow);
      const NegativeSelection negatives = select_negatives(q0, labels, p0, k);
      if (kink_distance(q0, labels, p0, negatives, margin) < 1e-3) continue;
      auto f = [&](const Tensor& e) {
        const Prototypes p = compute_prototypes(layout.support(e), layout.support_y);
        const Tensor q = ops::gather_rows(e, qrow);
        return k == 1 ? proto_triplet(q, p, label, margin)
                      : proto_triplet_k(q, p, label, margin, k);
      };
      check_gradient(f, x, inject, g);
      break;
    }
  }
  return k == 1 ? gradient_result("grad_proto_triplet", "proto_triplet", g)
                : gradient_result("grad_proto_triplet_k", "proto_triplet_k", g);
}

CheckResult grad_icnn(const CheckOptions& opt, bool inject, IcnnMode mode) {
  GradOutcome g;
  const TaskLayout layout(3, 3, 3);
  for (std::size_t seed = 0; seed < opt.seeds; ++seed) {
    CounterRng rng(seed, kCheckStream + 16, static_cast<std::uint64_t>(mode));
    const Tensor x = random_matrix(rng, layout.ns() + layout.nq(), 3);
    IcnnConfig cfg;
    cfg.mode = mode;
    cfg.k_neighbors = 2 + seed % 2;
    cfg.lambda_variant = seed % 2 == 0 ? LambdaVariant::kSplit : LambdaVariant::kOriginal;
    cfg.variance_mode = (seed / 2) % 2 == 0 ? VarianceMode::kBatch : VarianceMode::kPerPoint;
    cfg.distance = (seed / 4) % 2 == 0 ? DistanceKind::kEuclidean : DistanceKind::kSquaredEuclidean;
    cfg.p = 1.0 + rng.uniform();
    cfg.q = 1.0 + rng.uniform();
    cfg.r = 1.0 + rng.uniform();
    const Tensor s0 = layout.support(x);
    const Tensor q0 = layout.query(x);
    const Prototypes p0 = compute_prototypes(s0, layout.support_y);
    const IcnnTaskSelection frozen = select_task_neighborhoods(
        s0, layout.support_y, q0, layout.query_y, p0, cfg);
    auto f = [&](const Tensor& e) {
      const Tensor s = layout.support(e);
      const Prototypes p = compute_prototypes(s, layout.support_y);
      return icnn_task_loss(s, layout.support_y, layout.query(e), layout.query_y, p, cfg,
                            frozen)
          .loss;
    };
    check_gradient(f, x, inject, g);
  }
  return gradient_result("grad_icnn_" + std::string(to_string(mode)),
                         "icnn_loss[" + std::string(to_string(mode)) + "]", g);
}

CheckResult bounds(const CheckOptions&) {
  constexpr std::size_t kBatches = 10000;
  std::size_t violations = 0;
  for (std::size_t b = 0; b < kBatches; ++b) {
    CounterRng rng(b, kCheckStream + 32, 0);
    const std::size_t classes = 2 + rng.below(3);
    const std::size_t n = classes + 2 + rng.below(12);
    const std::size_t d = 1 + rng.below(4);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i < classes ? i : rng.below(classes);
    const Tensor emb = ops::scale(random_matrix(rng, n, d), 0.1 + 10.0 * rng.uniform());
    IcnnConfig cfg;
    cfg.k_neighbors = 1 + rng.below(6);
    cfg.lambda_variant = rng.below(2) == 0 ? LambdaVariant::kSplit : LambdaVariant::kOriginal;
    cfg.variance_mode = VarianceMode::kBatch;
    const IcnnTerms t = icnn_score(emb, labels, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(t.lambda[i] >= 0.0 && t.lambda[i] <= 2.0)) ++violations;
      if (!(t.gamma[i] >= 0.0 && t.gamma[i] <= 1.0)) ++violations;
      if (!(t.omega[i] >= 0.0)) ++violations;
    }
  }
  return {"bounds", violations == 0,
          std::to_string(violations) + " violations over " + std::to_string(kBatches) +
              " batches",
          0.0};
}

CheckResult k1_equivalence(const CheckOptions&) {
  constexpr std::size_t kInstances = 1000;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < kInstances; ++i) {
    CounterRng rng(i, kCheckStream + 48, 0);
    const std::size_t ways = 2 + rng.below(5);
    const std::size_t d = 1 + rng.below(5);
    const Prototypes protos{random_matrix(rng, ways, d)};
    const Tensor q = random_matrix(rng, 1, d);
    const std::size_t label = rng.below(ways);
    const double margin = 2.0 * rng.uniform();
    const double a = proto_triplet(q, protos, label, margin).item();
    const double b = proto_triplet_k(q, protos, label, margin, 1).item();
    if (std::memcmp(&a, &b, sizeof(double)) != 0) ++mismatches;
  }
  return {"k1_equivalence", mismatches == 0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(kInstances) +
              " instances",
          0.0};
}

CheckResult hand_fixture(const CheckOptions&) {
  const Tensor emb = Tensor::matrix(4, 1, {0.0, 0.1, 1.0, 1.1});
  const std::vector<std::size_t> labels = {0, 0, 1, 1};
  const IcnnTerms t = icnn_score(emb, labels, IcnnConfig{});
  const bool pass = std::abs(t.score - 2.0) <= 1e-12 && std::abs(t.loss + std::log(2.0)) <= 1e-12;
  return {"hand_fixture", pass,
          "score=" + text::format_double(t.score) + " loss=" + text::format_double(t.loss), 0.0};
}

CheckResult proposition(int which) {
  const PropositionReport r =
      which == 1 ? verify_proposition_1(0, 200) : verify_proposition_2(0, 200);
  const TrajectoryPoint& a = r.trajectory.front();
  const TrajectoryPoint& b = r.trajectory.back();
  std::string detail =
      which == 1 ? "inter " + text::format_double(a.inter) + " -> " +
                       text::format_double(b.inter) + ", intra " +
                       text::format_double(a.intra) + " -> " + text::format_double(b.intra)
                 : "var_sum " + text::format_double(a.var_sum) + " -> " +
                       text::format_double(b.var_sum);
  return {which == 1 ? "prop1" : "prop2", r.pass, std::move(detail), 0.0};
}

struct Entry {
  std::string name;
  std::function<CheckResult(const CheckOptions&, bool)> run;
};

std::vector<Entry> registry() {
  std::vector<Entry> e;
  e.push_back({"grad_cross_entropy", grad_cross_entropy});
  e.push_back({"grad_proto_triplet",
               [](const CheckOptions& o, bool inj) { return grad_proto_triplet(o, inj, 1); }});
  e.push_back({"grad_proto_triplet_k",
               [](const CheckOptions& o, bool inj) { return grad_proto_triplet(o, inj, 2); }});
  for (IcnnMode m : {IcnnMode::kSupportOnly, IcnnMode::kSupportPlusQuery,
                     IcnnMode::kQueryVsPrototypes, IcnnMode::kFull}) {
    e.push_back({"grad_icnn_" + std::string(to_string(m)),
                 [m](const CheckOptions& o, bool inj) { return grad_icnn(o, inj, m); }});
  }
  e.push_back({"bounds", [](const CheckOptions& o, bool) { return bounds(o); }});
  e.push_back({"k1_equivalence", [](const CheckOptions& o, bool) { return k1_equivalence(o); }});
  e.push_back({"hand_fixture", [](const CheckOptions& o, bool) { return hand_fixture(o); }});
  e.push_back({"prop1", [](const CheckOptions&, bool) { return proposition(1); }});
  e.push_back({"prop2", [](const CheckOptions&, bool) { return proposition(2); }});
  return e;
}

}  // namespace

std::vector<std::string> check_names() {
  std::vector<std::string> out;
  for (const Entry& e : registry()) out.push_back(e.name);
  return out;
}

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  std::vector<CheckResult> results;
  for (const Entry& e : registry()) {
    if (!options.filter.empty() && e.name.find(options.filter) == std::string::npos) continue;
    const auto started = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = e.run(options, options.inject_sign_error == e.name);
    } catch (const std::exception& ex) {
      r = {e.name, false, std::string("threw: ") + ex.what(), 0.0};
    }
    r.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace icnn::cli
