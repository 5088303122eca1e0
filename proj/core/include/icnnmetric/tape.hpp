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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace icnn {

using Shape = std::vector<std::size_t>;
using NodeId = std::size_t;

class Tape;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles. A tensor that carries a node handle
/// participates in differentiation on the tape that produced it; a tensor
/// without one is a constant.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t row, std::size_t col) const;
  /// Value of a single-element tensor.
  double item() const;

  Tape* tape() const { return tape_; }
  std::optional<NodeId> node() const;
  bool tracked() const { return tape_ != nullptr; }

  /// Same values, no tape handle.
  Tensor detached() const { return Tensor(shape_, data_); }

 private:
  friend class Tape;

  Shape shape_;
  std::vector<double> data_;
  Tape* tape_ = nullptr;
  NodeId node_ = 0;
};

/// Gradient accumulation buffers for the inputs of one node, in input order.
/// Entries for constant inputs are empty spans.
using GradSinks = std::span<const std::span<double>>;
using BackwardFn =
    std::function<void(std::span<const double> grad_out, GradSinks sinks)>;

class Gradients;

/// Append-only record of tracked operations. One tape per differentiation
/// pass; not shared across threads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a leaf that gradients are reported for.
  Tensor variable(const Tensor& value);

  /// Records the result of an operation. Inputs that are constants (or live
  /// on no tape) receive no gradient. Every tracked input must belong to
  /// this tape.
  Tensor record(std::string_view kind, Tensor result,
                std::span<const Tensor* const> inputs, BackwardFn backward);

  /// Reverse-mode pass from a scalar loss produced on this tape.
  Gradients backward(const Tensor& loss) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::string_view kind(NodeId id) const { return nodes_.at(id).kind; }

 private:
  struct Node {
    std::string kind;
    Shape shape;
    std::vector<std::optional<NodeId>> inputs;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

/// Map node -> d(loss)/d(node). Nodes off every path to the loss report the
/// zero tensor of their own shape.
class Gradients {
 public:
  Tensor of(const Tensor& t) const;
  bool reached(const Tensor& t) const;

 private:
  friend class Tape;

  const Tape* tape_ = nullptr;
  std::vector<std::vector<double>> buffers_;
};

}  // namespace icnn
