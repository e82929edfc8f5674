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

#include <string>
#include <vector>

#include "l2net/train.hpp"

namespace l2net {

// One seeded detection run per modality subset; Dice on the test split.
struct ModalityRow {
  std::vector<std::string> subset;
  double dice = 0.0;
};

std::vector<ModalityRow> run_modality_ablation(const RunConfig& cfg, const Dataset& data,
                                               const Logger& log = {});
// Modalities that appear in any subset, in canonical modality order.
std::vector<std::string> ablation_columns(const std::vector<std::vector<std::string>>& subsets);
// Flag columns (x / -) for every modality in `columns`, then dice.
std::string modality_ablation_csv(const std::vector<ModalityRow>& rows,
                                  const std::vector<std::string>& columns);

// Paired seeded detection runs with l2 and max pooling.
struct PoolingRow {
  PoolKind pool = PoolKind::kL2;
  double dice = 0.0;
  double accuracy = 0.0;
  double kappa = 0.0;
};

std::vector<PoolingRow> run_pooling_ablation(const RunConfig& cfg, const Dataset& data,
                                             const Logger& log = {});
std::string pooling_ablation_csv(const std::vector<PoolingRow>& rows);

std::string steps_csv(const std::vector<StepLog>& steps);

}  // namespace l2net
