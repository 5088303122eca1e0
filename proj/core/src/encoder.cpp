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

#include "icnnmetric/encoder.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "icnnmetric/error.hpp"
#include "icnnmetric/ops.hpp"
#include "icnnmetric/rng.hpp"
#include "icnnmetric/text.hpp"

namespace icnn {

std::vector<Tensor> MlpEncoder::parameters() const {
  std::vector<Tensor> out;
  out.reserve(2 * weights.size());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  return out;
}

std::vector<Tensor> MlpEncoder::bind(Tape& tape) const {
  std::vector<Tensor> out;
  out.reserve(2 * weights.size());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(tape.variable(weights[l]));
    out.push_back(tape.variable(biases[l]));
  }
  return out;
}

bool MlpEncoder::operator==(const MlpEncoder& other) const {
  if (dims != other.dims) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].values() != other.weights[l].values()) return false;
    if (biases[l].values() != other.biases[l].values()) return false;
  }
  return true;
}

MlpEncoder encoder_init(std::uint64_t seed, std::span<const std::size_t> dims) {
  if (dims.size() < 2) {
    throw ConfigError("encoder needs at least an input and an output dim");
  }
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("encoder layer dims must be positive");
  }
  MlpEncoder enc;
  enc.dims.assign(dims.begin(), dims.end());
  CounterRng rng(seed, stream_id(Stream::kInit, 0));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(fan_in * fan_out);
    for (double& x : w) x = bound * (2.0 * rng.uniform() - 1.0);
    enc.weights.push_back(Tensor::matrix(fan_in, fan_out, std::move(w)));
    enc.biases.push_back(Tensor::zeros({1, fan_out}));
  }
  return enc;
}

Tensor encode(const MlpEncoder& enc, std::span<const Tensor> params,
              const Tensor& batch) {
  if (batch.rank() != 2 || batch.cols() != enc.input_dim()) {
    throw ShapeError("encode: batch " + shape_string(batch.shape()) +
                     " does not match input dim " +
                     std::to_string(enc.input_dim()));
  }
  if (params.size() != 2 * enc.layer_count()) {
    throw ShapeError("encode: expected " + std::to_string(2 * enc.layer_count()) +
                     " parameter tensors, got " + std::to_string(params.size()));
  }
  Tensor h = batch;
  for (std::size_t l = 0; l < enc.layer_count(); ++l) {
    h = ops::add(ops::matmul(h, params[2 * l]), params[2 * l + 1]);
    if (l + 1 < enc.layer_count()) h = ops::relu(h);
  }
  return h;
}

Tensor encode(const MlpEncoder& enc, const Tensor& batch) {
  const std::vector<Tensor> params = enc.parameters();
  return encode(enc, params, batch);
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd" || name == "sgd-momentum") return OptimizerKind::kSgdMomentum;
  throw ConfigError("unknown optimizer '" + std::string(name) +
                    "' (expected adam or sgd)");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {}

void Optimizer::apply_update(MlpEncoder& enc, std::span<const Tensor> grads) {
  const std::size_t count = 2 * enc.layer_count();
  if (grads.size() != count) {
    throw ShapeError("apply_update: " + std::to_string(count) +
                     " parameters but " + std::to_string(grads.size()) +
                     " gradients");
  }
  auto param = [&enc](std::size_t i) -> Tensor& {
    return i % 2 == 0 ? enc.weights[i / 2] : enc.biases[i / 2];
  };
  for (std::size_t i = 0; i < count; ++i) {
    if (grads[i].shape() != param(i).shape()) {
      throw ShapeError("apply_update: gradient " + std::to_string(i) +
                       " has shape " + shape_string(grads[i].shape()) +
                       ", parameter has " + shape_string(param(i).shape()));
    }
  }
  if (first_.empty()) {
    for (std::size_t i = 0; i < count; ++i) {
      first_.emplace_back(param(i).size(), 0.0);
      second_.emplace_back(param(i).size(), 0.0);
    }
  }
  ++step_count_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::kSgdMomentum) {
    for (std::size_t i = 0; i < count; ++i) {
      auto w = param(i).mutable_data();
      auto& v = first_[i];
      const auto g = grads[i].data();
      for (std::size_t j = 0; j < w.size(); ++j) {
        v[j] = config_.momentum * v[j] + g[j];
        w[j] -= lr * v[j];
      }
    }
    return;
  }
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < count; ++i) {
    auto w = param(i).mutable_data();
    auto& m = first_[i];
    auto& v = second_[i];
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

void save_checkpoint(const MlpEncoder& enc, std::ostream& out) {
  out << kCheckpointMagic << '\n';
  out << "dims";
  for (std::size_t d : enc.dims) out << ' ' << d;
  out << '\n';
  auto write_tensor = [&out](std::string_view tag, std::size_t layer,
                             const Tensor& t) {
    out << tag << ' ' << layer;
    for (double x : t.data()) out << ' ' << text::format_double(x);
    out << '\n';
  };
  for (std::size_t l = 0; l < enc.layer_count(); ++l) {
    write_tensor("weight", l, enc.weights[l]);
    write_tensor("bias", l, enc.biases[l]);
  }
}

void save_checkpoint(const MlpEncoder& enc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  save_checkpoint(enc, out);
}

MlpEncoder load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != kCheckpointMagic) {
    throw DataError("checkpoint: missing magic string " +
                    std::string(kCheckpointMagic));
  }
  if (!std::getline(in, line)) throw DataError("checkpoint: missing dims line");
  std::istringstream dims_line(line);
  std::string tag;
  dims_line >> tag;
  if (tag != "dims") throw DataError("checkpoint: expected dims line");
  MlpEncoder enc;
  std::size_t d;
  while (dims_line >> d) enc.dims.push_back(d);
  if (enc.dims.size() < 2) throw DataError("checkpoint: too few dims");

  auto read_tensor = [&in, &line](std::string_view want, std::size_t layer,
                                  std::size_t rows, std::size_t cols) {
    if (!std::getline(in, line)) {
      throw DataError("checkpoint: truncated before " + std::string(want) +
                      " " + std::to_string(layer));
    }
    const auto fields = text::split(text::trim(line), ' ');
    if (fields.size() != 2 + rows * cols || fields[0] != want ||
        text::parse_int(fields[1]) != static_cast<long long>(layer)) {
      throw DataError("checkpoint: malformed " + std::string(want) + " " +
                      std::to_string(layer));
    }
    std::vector<double> values;
    values.reserve(rows * cols);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      const auto v = text::parse_double(fields[i]);
      if (!v) throw DataError("checkpoint: bad number '" + std::string(fields[i]) + "'");
      values.push_back(*v);
    }
    return Tensor::matrix(rows, cols, std::move(values));
  };
  for (std::size_t l = 0; l + 1 < enc.dims.size(); ++l) {
    enc.weights.push_back(read_tensor("weight", l, enc.dims[l], enc.dims[l + 1]));
    enc.biases.push_back(read_tensor("bias", l, 1, enc.dims[l + 1]));
  }
  return enc;
}

MlpEncoder load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace icnn
