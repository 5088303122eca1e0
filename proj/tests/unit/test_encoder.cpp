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
#include <sstream>
#include <vector>

#include "icnnmetric/encoder.hpp"
#include "icnnmetric/error.hpp"
#include "icnnmetric/ops.hpp"

namespace icnn {
namespace {

const std::vector<std::size_t> kDims{3, 4, 2};

TEST(Encoder, InitShapesAndBounds) {
  const MlpEncoder enc = encoder_init(1, kDims);
  ASSERT_EQ(enc.layer_count(), 2u);
  EXPECT_EQ(enc.weights[0].shape(), (Shape{3, 4}));
  EXPECT_EQ(enc.biases[1].shape(), (Shape{1, 2}));
  const double bound0 = 1.0 / std::sqrt(3.0);
  for (double w : enc.weights[0].values()) EXPECT_LE(std::abs(w), bound0);
  for (double b : enc.biases[0].values()) EXPECT_EQ(b, 0.0);
  EXPECT_TRUE(enc == encoder_init(1, kDims));
  EXPECT_FALSE(enc == encoder_init(2, kDims));
}

TEST(Encoder, RejectsBadDims) {
  EXPECT_THROW(encoder_init(0, std::vector<std::size_t>{3}), ConfigError);
  EXPECT_THROW(encoder_init(0, std::vector<std::size_t>{3, 0, 2}), ConfigError);
}

TEST(Encoder, ForwardMatchesHandComputation) {
  MlpEncoder enc = encoder_init(3, kDims);
  enc.biases[0] = Tensor::matrix(1, 4, {0.1, -0.2, 0.3, 0.0});
  enc.biases[1] = Tensor::matrix(1, 2, {0.05, -0.05});
  const Tensor x = Tensor::matrix(2, 3, {0.5, -1.0, 2.0, 1.5, 0.25, -0.75});
  const Tensor y = encode(enc, x);
  ASSERT_EQ(y.shape(), (Shape{2, 2}));
  for (std::size_t r = 0; r < 2; ++r) {
    std::vector<double> h(4);
    for (std::size_t j = 0; j < 4; ++j) {
      double s = enc.biases[0][j];
      for (std::size_t k = 0; k < 3; ++k) s += x.at(r, k) * enc.weights[0].at(k, j);
      h[j] = s > 0 ? s : 0.0;
    }
    for (std::size_t j = 0; j < 2; ++j) {
      double s = enc.biases[1][j];
      for (std::size_t k = 0; k < 4; ++k) s += h[k] * enc.weights[1].at(k, j);
      EXPECT_NEAR(y.at(r, j), s, 1e-14);
    }
  }
}

TEST(Encoder, ParameterGradientsMatchCentralDifference) {
  const MlpEncoder enc = encoder_init(5, kDims);
  const Tensor x = Tensor::matrix(2, 3, {0.5, -1.0, 2.0, 1.5, 0.25, -0.75});
  for (std::size_t p = 0; p < 4; ++p) {
    auto f = [&](const Tensor& value) {
      std::vector<Tensor> params = enc.parameters();
      params[p] = value;
      return ops::sum(ops::square(encode(enc, params, x)));
    };
    EXPECT_LE(finite_diff_check(f, enc.parameters()[p]), 1e-6) << "param " << p;
  }
}

TEST(Encoder, BindRegistersEveryParameter) {
  const MlpEncoder enc = encoder_init(5, kDims);
  Tape tape;
  const auto params = enc.bind(tape);
  ASSERT_EQ(params.size(), 4u);
  for (const Tensor& t : params) EXPECT_TRUE(t.tracked());
  EXPECT_THROW(encode(enc, Tensor::zeros({2, 4})), ShapeError);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  MlpEncoder enc = encoder_init(0, std::vector<std::size_t>{2, 1});
  const MlpEncoder before = enc;
  Optimizer opt({OptimizerKind::kAdam, 0.01});
  const std::vector<Tensor> grads{Tensor::matrix(2, 1, {3.0, -0.5}), Tensor::matrix(1, 1, {2.0})};
  opt.apply_update(enc, grads);
  // m_hat = g, v_hat = g^2 on the first step, so the move is lr * g / (|g| + eps).
  auto moved = [](double g) { return 0.01 * g / (std::abs(g) + 1e-8); };
  EXPECT_NEAR(enc.weights[0][0], before.weights[0][0] - moved(3.0), 1e-15);
  EXPECT_NEAR(enc.weights[0][1], before.weights[0][1] - moved(-0.5), 1e-15);
  EXPECT_NEAR(enc.biases[0][0], -moved(2.0), 1e-15);
  EXPECT_EQ(opt.step_count(), 1u);
}

TEST(Optimizer, SgdMomentumTwoSteps) {
  MlpEncoder enc = encoder_init(0, std::vector<std::size_t>{1, 1});
  const double w0 = enc.weights[0][0];
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kSgdMomentum;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.9;
  Optimizer opt(cfg);
  const std::vector<Tensor> grads{Tensor::matrix(1, 1, {1.0}), Tensor::matrix(1, 1, {0.0})};
  opt.apply_update(enc, grads);
  opt.apply_update(enc, grads);
  // v1 = 1, v2 = 1.9
  EXPECT_NEAR(enc.weights[0][0], w0 - 0.1 * (1.0 + 1.9), 1e-14);
}

TEST(Optimizer, RejectsMismatchedGradients) {
  MlpEncoder enc = encoder_init(0, kDims);
  Optimizer opt({});
  const std::vector<Tensor> too_few{Tensor::zeros({3, 4})};
  EXPECT_THROW(opt.apply_update(enc, too_few), ShapeError);
  EXPECT_EQ(optimizer_kind_from_string("sgd"), OptimizerKind::kSgdMomentum);
  EXPECT_THROW(optimizer_kind_from_string("rmsprop"), ConfigError);
}

TEST(Checkpoint, RoundTripIsExact) {
  const MlpEncoder enc = encoder_init(9, std::vector<std::size_t>{5, 7, 3});
  std::stringstream ss;
  save_checkpoint(enc, ss);
  EXPECT_EQ(ss.str().rfind(std::string(kCheckpointMagic), 0), 0u);
  const MlpEncoder back = load_checkpoint(ss);
  EXPECT_TRUE(back == enc);
}

TEST(Checkpoint, CorruptInputThrows) {
  std::istringstream bad_magic("NOPE\ndims 2 1\n");
  EXPECT_THROW(load_checkpoint(bad_magic), DataError);
  const MlpEncoder enc = encoder_init(9, std::vector<std::size_t>{2, 1});
  std::stringstream ss;
  save_checkpoint(enc, ss);
  const std::string text = ss.str();
  std::istringstream truncated(text.substr(0, text.size() / 2));
  EXPECT_THROW(load_checkpoint(truncated), DataError);
  EXPECT_THROW(load_checkpoint(std::filesystem::path("/nonexistent/ckpt.txt")), DataError);
}

}  // namespace
}  // namespace icnn
