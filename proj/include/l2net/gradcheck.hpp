/* Copyright (c) 2026 The l2net Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "l2net/layers.hpp"
#include "l2net/pyramid.hpp"
#include "l2net/tensor.hpp"

namespace l2net {

// f maps a list of inputs to an arbitrary-shaped output. The check contracts
// the output with fixed random weights to get a scalar, then compares tape
// gradients against central differences for every input.
using MultiInputFn = std::function<Tensor(const std::vector<Tensor>&)>;

double gradient_relative_error(const MultiInputFn& f,
                               const std::vector<Tensor>& inputs, Rng& rng,
                               double h = 1e-5);

enum class CheckStatus { kPass, kFail, kExpectedFail, kUnexpectedPass };

std::string to_string(CheckStatus status);

struct SuiteResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;  // trials with rel error >= tolerance
  double max_rel_error = 0.0;
  double min_rel_error = 0.0;
  // Informational suites document a known wrong gradient; they pass when at
  // least `expected_failures` trials disagree by more than 1e-2.
  bool informational = false;
  std::size_t expected_failures = 0;
  std::size_t discrepancies = 0;
  CheckStatus status = CheckStatus::kPass;
};

struct GradcheckOptions {
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  std::size_t trials = 100;
};

// Scopes: "l2", "layers", "pyramid", "all".
std::vector<SuiteResult> run_gradcheck(const std::string& scope,
                                       const GradcheckOptions& opts);

// Individual suites, exposed for tests.
SuiteResult check_l2_pool(const GradcheckOptions& opts);
SuiteResult check_global_l2_pool(const GradcheckOptions& opts);
SuiteResult check_l2_pool_paper_literal(const GradcheckOptions& opts);
SuiteResult check_conv2d(const GradcheckOptions& opts);
SuiteResult check_max_pool(const GradcheckOptions& opts);
SuiteResult check_residual(const GradcheckOptions& opts, ResidualVariant variant);
SuiteResult check_dense(const GradcheckOptions& opts);
SuiteResult check_softmax_ce(const GradcheckOptions& opts);
SuiteResult check_hinge(const GradcheckOptions& opts);
SuiteResult check_smooth_l1(const GradcheckOptions& opts);
SuiteResult check_pyramid(const GradcheckOptions& opts, PoolKind pool);

// Human-readable table, one suite per line.
std::string gradcheck_table(const std::vector<SuiteResult>& results);
// {"seed":..,"tolerance":..,"trials":..,"suites":[{name, status, ...}]}
std::string gradcheck_to_json(const std::vector<SuiteResult>& results,
                              const GradcheckOptions& opts);
// True when no suite has status FAIL or UNEXPECTED PASS.
bool gradcheck_ok(const std::vector<SuiteResult>& results);

}  // namespace l2net
