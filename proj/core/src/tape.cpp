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

#include "icnnmetric/tape.hpp"

#include <sstream>
#include <utility>

#include "icnnmetric/error.hpp"

namespace icnn {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t e : shape_) {
    if (e == 0) {
      throw ShapeError("tensor extents must be positive, got " +
                       shape_string(shape_));
    }
  }
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " needs " +
                     std::to_string(shape_size(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? shape_[0] : shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() < 2) return 1;
  return shape_[1];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return data_.at(row * cols() + col);
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() needs a single-element tensor, got " +
                     shape_string(shape_));
  }
  return data_[0];
}

std::optional<NodeId> Tensor::node() const {
  if (tape_ == nullptr) return std::nullopt;
  return node_;
}

Tensor Tape::variable(const Tensor& value) {
  Tensor out = value.detached();
  nodes_.push_back(Node{"variable", out.shape(), {}, nullptr});
  out.tape_ = this;
  out.node_ = nodes_.size() - 1;
  return out;
}

Tensor Tape::record(std::string_view kind, Tensor result,
                    std::span<const Tensor* const> inputs,
                    BackwardFn backward) {
  Node node{std::string(kind), result.shape(), {}, std::move(backward)};
  node.inputs.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    if (in->tape_ == nullptr) {
      node.inputs.emplace_back(std::nullopt);
    } else if (in->tape_ != this) {
      throw std::logic_error(std::string(kind) +
                             ": operand belongs to a different tape");
    } else {
      node.inputs.emplace_back(in->node_);
    }
  }
  nodes_.push_back(std::move(node));
  result.tape_ = this;
  result.node_ = nodes_.size() - 1;
  return result;
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " +
                     shape_string(loss.shape()));
  }
  if (loss.tape_ != this) {
    throw std::logic_error("backward: loss was not produced on this tape");
  }
  Gradients grads;
  grads.tape_ = this;
  grads.buffers_.resize(nodes_.size());
  grads.buffers_[loss.node_].assign(1, 1.0);

  std::vector<std::span<double>> sinks;
  for (NodeId id = loss.node_ + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (grads.buffers_[id].empty() || !node.backward) continue;
    sinks.assign(node.inputs.size(), std::span<double>());
    bool any = false;
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      if (!node.inputs[k]) continue;
      auto& buf = grads.buffers_[*node.inputs[k]];
      if (buf.empty()) buf.assign(shape_size(nodes_[*node.inputs[k]].shape), 0.0);
      sinks[k] = buf;
      any = true;
    }
    if (any) node.backward(grads.buffers_[id], sinks);
  }
  return grads;
}

Tensor Gradients::of(const Tensor& t) const {
  if (reached(t)) return Tensor(t.shape(), buffers_[*t.node()]);
  return Tensor::zeros(t.shape());
}

bool Gradients::reached(const Tensor& t) const {
  if (t.tape() != tape_ || !t.node()) return false;
  const NodeId id = *t.node();
  return id < buffers_.size() && !buffers_[id].empty();
}

}  // namespace icnn
