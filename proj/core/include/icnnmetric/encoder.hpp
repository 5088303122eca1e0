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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "icnnmetric/tape.hpp"

namespace icnn {

/// Fully connected embedding network: relu on hidden layers, identity on
/// the output layer. weights[l] is dims[l] x dims[l+1]; biases[l] is
/// 1 x dims[l+1].
struct MlpEncoder {
  std::vector<std::size_t> dims;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }
  std::size_t layer_count() const { return weights.size(); }

  /// Parameters in update order: w0, b0, w1, b1, ...
  std::vector<Tensor> parameters() const;
  /// The same parameters registered as variables on `tape`.
  std::vector<Tensor> bind(Tape& tape) const;

  bool operator==(const MlpEncoder& other) const;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
MlpEncoder encoder_init(std::uint64_t seed, std::span<const std::size_t> dims);

/// Forward pass with explicit parameters (as returned by bind()).
Tensor encode(const MlpEncoder& enc, std::span<const Tensor> params,
              const Tensor& batch);
/// Forward pass with the encoder's own (constant) parameters.
Tensor encode(const MlpEncoder& enc, const Tensor& batch);

enum class OptimizerKind { kSgdMomentum, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  /// One update of every encoder parameter. `grads` holds one tensor per
  /// parameter, in MlpEncoder::parameters() order.
  void apply_update(MlpEncoder& enc, std::span<const Tensor> grads);

  const OptimizerConfig& config() const { return config_; }
  double learning_rate() const { return config_.learning_rate; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::uint64_t step_count() const { return step_count_; }

 private:
  OptimizerConfig config_;
  std::uint64_t step_count_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

/// Text checkpoint: magic "ICNNMETRIC1", the layer dims, then each layer's
/// weights and biases row-major in shortest round-trip decimal form.
void save_checkpoint(const MlpEncoder& enc, std::ostream& out);
void save_checkpoint(const MlpEncoder& enc, const std::filesystem::path& path);
MlpEncoder load_checkpoint(std::istream& in);
MlpEncoder load_checkpoint(const std::filesystem::path& path);

inline constexpr std::string_view kCheckpointMagic = "ICNNMETRIC1";

}  // namespace icnn
