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

#include "icnnmetric/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "icnnmetric/error.hpp"

namespace icnn::ops {
namespace {

Tape* common_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (t->tape() == nullptr) continue;
    if (tape != nullptr && tape != t->tape()) {
      throw std::logic_error("operands live on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

Tensor finish(std::string_view kind, Tensor result,
              std::initializer_list<const Tensor*> inputs,
              BackwardFn backward) {
  Tape* tape = common_tape(inputs);
  if (tape == nullptr) return result;
  const std::vector<const Tensor*> list(inputs);
  return tape->record(kind, std::move(result), list, std::move(backward));
}

enum class Broadcast { kSame, kScalar, kRow };

Broadcast broadcast_kind(std::string_view op, const Tensor& a,
                         const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.size() == 1) return Broadcast::kScalar;
  if (a.rank() == 2 && b.size() == a.cols() &&
      (b.rank() == 1 || (b.rank() == 2 && b.shape()[0] == 1))) {
    return Broadcast::kRow;
  }
  throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) +
                   " and " + shape_string(b.shape()) + " do not conform");
}

inline std::size_t bindex(Broadcast kind, std::size_t i, std::size_t cols) {
  switch (kind) {
    case Broadcast::kSame:
      return i;
    case Broadcast::kScalar:
      return 0;
    case Broadcast::kRow:
      return i % cols;
  }
  return i;
}

// fwd(x, y) -> z; da(x, y) and db(x, y) give dz/dx and dz/dy.
template <typename Fwd, typename Da, typename Db>
Tensor binary(std::string_view kind, const Tensor& a, const Tensor& b, Fwd fwd,
              Da da, Db db) {
  const Broadcast bk = broadcast_kind(kind, a, b);
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = fwd(av[i], bv[bindex(bk, i, cols)]);
  }
  std::vector<double> xs(av.begin(), av.end());
  std::vector<double> ys(bv.begin(), bv.end());
  return finish(kind, Tensor(a.shape(), std::move(out)), {&a, &b},
                [xs = std::move(xs), ys = std::move(ys), bk, cols, da, db](
                    std::span<const double> g, GradSinks sinks) {
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    const std::size_t j = bindex(bk, i, cols);
                    if (!sinks[0].empty()) sinks[0][i] += g[i] * da(xs[i], ys[j]);
                    if (!sinks[1].empty()) sinks[1][j] += g[i] * db(xs[i], ys[j]);
                  }
                });
}

// fwd(x) -> y; dfn(x, y) -> dy/dx.
template <typename Fwd, typename Dfn>
Tensor unary(std::string_view kind, const Tensor& a, Fwd fwd, Dfn dfn) {
  std::vector<double> out(a.size());
  const auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
  std::vector<double> xs(av.begin(), av.end());
  std::vector<double> ys = out;
  return finish(kind, Tensor(a.shape(), std::move(out)), {&a},
                [xs = std::move(xs), ys = std::move(ys), dfn](
                    std::span<const double> g, GradSinks sinks) {
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    sinks[0][i] += g[i] * dfn(xs[i], ys[i]);
                  }
                });
}

void require_rank2(std::string_view op, const Tensor& a) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " +
                     shape_string(a.shape()));
  }
}

Tensor select_over(std::string_view kind, const Tensor& a,
                   const std::vector<std::vector<std::size_t>>& sets,
                   bool want_max) {
  if (sets.empty()) throw ShapeError(std::string(kind) + ": no sets given");
  const auto av = a.data();
  std::vector<double> out(sets.size());
  std::vector<std::size_t> chosen(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& set = sets[s];
    if (set.empty()) throw ShapeError(std::string(kind) + ": empty set");
    std::size_t best = set[0];
    for (std::size_t idx : set) {
      if (idx >= av.size()) {
        throw ShapeError(std::string(kind) + ": index " + std::to_string(idx) +
                         " outside " + shape_string(a.shape()));
      }
      const bool better = want_max ? av[idx] > av[best] : av[idx] < av[best];
      if (better || (av[idx] == av[best] && idx < best)) best = idx;
    }
    chosen[s] = best;
    out[s] = av[best];
  }
  return finish(kind, Tensor::vector(std::move(out)), {&a},
                [chosen = std::move(chosen)](std::span<const double> g,
                                             GradSinks sinks) {
                  for (std::size_t s = 0; s < g.size(); ++s) {
                    sinks[0][chosen[s]] += g[s];
                  }
                });
}

std::vector<std::vector<std::size_t>> everything(const Tensor& a) {
  std::vector<std::size_t> all(a.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return {std::move(all)};
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "subtract", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "multiply", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor divide(const Tensor& a, const Tensor& b) {
  for (double y : b.data()) {
    if (y == 0.0) throw std::domain_error("divide: zero divisor");
  }
  return binary(
      "divide", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor shift(const Tensor& a, double offset) {
  return unary(
      "shift", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " do not conform");
  }
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += x * bv[p * m + j];
    }
  }
  std::vector<double> as(av.begin(), av.end());
  std::vector<double> bs(bv.begin(), bv.end());
  return finish(
      "matmul", Tensor({n, m}, std::move(out)), {&a, &b},
      [as = std::move(as), bs = std::move(bs), n, k, m](
          std::span<const double> g, GradSinks sinks) {
        if (!sinks[0].empty()) {
          // dA = G * B^T
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * bs[p * m + j];
              sinks[0][i * k + p] += acc;
            }
          }
        }
        if (!sinks[1].empty()) {
          // dB = A^T * G
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const double x = as[i * k + p];
              if (x == 0.0) continue;
              for (std::size_t j = 0; j < m; ++j) sinks[1][p * m + j] += x * g[i * m + j];
            }
          }
        }
      });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double x : a.data()) {
    if (!(x > 0.0)) {
      throw std::domain_error("log: non-positive argument " + std::to_string(x));
    }
  }
  return unary(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  for (double x : a.data()) {
    if (x < 0.0) throw std::domain_error("sqrt: negative argument");
  }
  return unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor power(const Tensor& a, double exponent) {
  for (double x : a.data()) {
    if (!(x > 0.0)) throw std::domain_error("power: non-positive base");
  }
  return unary(
      "power", a, [exponent](double x) { return std::pow(x, exponent); },
      [exponent](double x, double y) { return exponent * y / x; });
}

Tensor clamp_min(const Tensor& a, double floor) {
  return unary(
      "clamp_min", a, [floor](double x) { return x > floor ? x : floor; },
      [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  return finish("sum", Tensor::scalar(acc), {&a},
                [](std::span<const double> g, GradSinks sinks) {
                  for (double& s : sinks[0]) s += g[0];
                });
}

Tensor mean(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  const double n = static_cast<double>(a.size());
  return finish("mean", Tensor::scalar(acc / n), {&a},
                [n](std::span<const double> g, GradSinks sinks) {
                  for (double& s : sinks[0]) s += g[0] / n;
                });
}

Tensor max_over(const Tensor& a,
                const std::vector<std::vector<std::size_t>>& sets) {
  return select_over("max_over", a, sets, true);
}

Tensor min_over(const Tensor& a,
                const std::vector<std::vector<std::size_t>>& sets) {
  return select_over("min_over", a, sets, false);
}

Tensor max_over(const Tensor& a) { return max_over(a, everything(a)); }
Tensor min_over(const Tensor& a) { return min_over(a, everything(a)); }

Tensor log_softmax(const Tensor& a) {
  require_rank2("log_softmax", a);
  const std::size_t n = a.shape()[0], k = a.shape()[1];
  const auto av = a.data();
  std::vector<double> out(n * k);
  std::vector<double> probs(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = av.data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double lz = std::log(z) + mx;
    for (std::size_t j = 0; j < k; ++j) {
      out[i * k + j] = row[j] - lz;
      probs[i * k + j] = std::exp(out[i * k + j]);
    }
  }
  return finish("log_softmax", Tensor({n, k}, std::move(out)), {&a},
                [probs = std::move(probs), n, k](std::span<const double> g,
                                                 GradSinks sinks) {
                  for (std::size_t i = 0; i < n; ++i) {
                    double gs = 0.0;
                    for (std::size_t j = 0; j < k; ++j) gs += g[i * k + j];
                    for (std::size_t j = 0; j < k; ++j) {
                      sinks[0][i * k + j] += g[i * k + j] - probs[i * k + j] * gs;
                    }
                  }
                });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  if (index.empty()) throw ShapeError("gather_rows: empty index");
  if (a.rank() != 1 && a.rank() != 2) {
    throw ShapeError("gather_rows: expected 1-D or 2-D, got " +
                     shape_string(a.shape()));
  }
  const std::size_t rows = a.shape()[0];
  const std::size_t width = a.rank() == 2 ? a.shape()[1] : 1;
  const auto av = a.data();
  std::vector<double> out(index.size() * width);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= rows) {
      throw ShapeError("gather_rows: row " + std::to_string(index[r]) +
                       " outside " + shape_string(a.shape()));
    }
    std::copy_n(av.begin() + index[r] * width, width, out.begin() + r * width);
  }
  Shape shape = a.rank() == 2 ? Shape{index.size(), width} : Shape{index.size()};
  std::vector<std::size_t> idx(index.begin(), index.end());
  return finish("gather_rows", Tensor(std::move(shape), std::move(out)), {&a},
                [idx = std::move(idx), width](std::span<const double> g,
                                              GradSinks sinks) {
                  for (std::size_t r = 0; r < idx.size(); ++r) {
                    for (std::size_t c = 0; c < width; ++c) {
                      sinks[0][idx[r] * width + c] += g[r * width + c];
                    }
                  }
                });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) +
                     " as " + shape_string(shape));
  }
  return finish("reshape", Tensor(std::move(shape), a.values()), {&a},
                [](std::span<const double> g, GradSinks sinks) {
                  for (std::size_t i = 0; i < g.size(); ++i) sinks[0][i] += g[i];
                });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_rank2("concat_rows", a);
  require_rank2("concat_rows", b);
  if (a.cols() != b.cols()) {
    throw ShapeError("concat_rows: shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) + " do not conform");
  }
  std::vector<double> out(a.values());
  out.insert(out.end(), b.values().begin(), b.values().end());
  const std::size_t split = a.size();
  return finish("concat_rows",
                Tensor({a.rows() + b.rows(), a.cols()}, std::move(out)),
                {&a, &b}, [split](std::span<const double> g, GradSinks sinks) {
                  if (!sinks[0].empty()) {
                    for (std::size_t i = 0; i < split; ++i) sinks[0][i] += g[i];
                  }
                  if (!sinks[1].empty()) {
                    for (std::size_t i = split; i < g.size(); ++i) {
                      sinks[1][i - split] += g[i];
                    }
                  }
                });
}

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
  require_rank2("pairwise_sq_dist", a);
  require_rank2("pairwise_sq_dist", b);
  const std::size_t n = a.shape()[0], d = a.shape()[1], m = b.shape()[0];
  if (b.shape()[1] != d) {
    throw ShapeError("pairwise_sq_dist: shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) +
                     " differ in inner dimension");
  }
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = av[i * d + c] - bv[j * d + c];
        acc += diff * diff;
      }
      out[i * m + j] = acc;
    }
  }
  std::vector<double> as(av.begin(), av.end());
  std::vector<double> bs(bv.begin(), bv.end());
  return finish("pairwise_sq_dist", Tensor({n, m}, std::move(out)), {&a, &b},
                [as = std::move(as), bs = std::move(bs), n, d, m](
                    std::span<const double> g, GradSinks sinks) {
                  for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < m; ++j) {
                      const double gij = g[i * m + j];
                      if (gij == 0.0) continue;
                      for (std::size_t c = 0; c < d; ++c) {
                        const double diff = 2.0 * gij * (as[i * d + c] - bs[j * d + c]);
                        if (!sinks[0].empty()) sinks[0][i * d + c] += diff;
                        if (!sinks[1].empty()) sinks[1][j * d + c] -= diff;
                      }
                    }
                  }
                });
}

}  // namespace icnn::ops

namespace icnn {

GradientComparison compare_gradients(
    const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
  GradientComparison cmp;
  {
    Tape tape;
    const Tensor xv = tape.variable(x);
    const Tensor y = f(xv);
    const Gradients grads = tape.backward(y);
    cmp.analytic = grads.of(xv).values();
  }
  cmp.numeric.resize(x.size());
  Tensor probe = x.detached();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    const double h = 1e-6 * std::max(1.0, std::abs(x0));
    probe.mutable_data()[i] = x0 + h;
    const double up = f(probe).item();
    probe.mutable_data()[i] = x0 - h;
    const double down = f(probe).item();
    probe.mutable_data()[i] = x0;
    cmp.numeric[i] = (up - down) / (2.0 * h);
  }
  return cmp;
}

double max_relative_error(const GradientComparison& cmp) {
  double worst = 0.0;
  for (std::size_t i = 0; i < cmp.analytic.size(); ++i) {
    const double a = cmp.analytic[i];
    const double n = cmp.numeric[i];
    if (std::isnan(a) || std::isnan(n)) {
      return std::numeric_limits<double>::infinity();
    }
    worst = std::max(worst, std::abs(a - n) / std::max(1.0, std::abs(a)));
  }
  return worst;
}

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                         const Tensor& x) {
  try {
    return max_relative_error(compare_gradients(f, x));
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace icnn
