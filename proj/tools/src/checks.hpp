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
#include <string>
#include <vector>

namespace icnn::cli {

struct CheckOptions {
  std::string filter;             // substring of the check name; empty = all
  std::string inject_sign_error;  // gradient check whose analytic side is negated
  std::size_t seeds = 100;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<std::string> check_names();

std::vector<CheckResult> run_checks(const CheckOptions& options);

}  // namespace icnn::cli
