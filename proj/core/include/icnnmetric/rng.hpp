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

namespace icnn {

/// Counter-based generator: output k of stream (seed, a, b) is a SplitMix64
/// finalizer applied to key(seed, a, b) + k * golden-gamma. Any (seed, epoch,
/// task) triple yields an independent stream, so tasks can be enumerated in
/// any order. Distributions are implemented here rather than borrowed from
/// <random> so results are identical across standard libraries.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream_a = 0,
             std::uint64_t stream_b = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, bound), bound > 0, without modulo bias.
  std::uint64_t below(std::uint64_t bound);
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stream tags keep training, validation and evaluation draws apart.
enum class Stream : std::uint64_t {
  kInit = 1,
  kData = 2,
  kSplit = 3,
  kTrain = 4,
  kValidate = 5,
  kEvaluate = 6,
  kToy = 7,
};

inline std::uint64_t stream_id(Stream s, std::uint64_t index) {
  return (static_cast<std::uint64_t>(s) << 56) ^ index;
}

}  // namespace icnn
