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

#include "l2net/experiments.hpp"

#include <algorithm>
#include <cstdio>

#include "l2net/error.hpp"

namespace l2net {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ModalityRow> run_modality_ablation(const RunConfig& cfg, const Dataset& data,
                                               const Logger& log) {
  check(!cfg.ablation_subsets.empty(), ErrorCode::kBadSubset, "no modality subsets given");
  std::vector<ModalityRow> rows;
  for (const auto& subset : cfg.ablation_subsets) {
    check(!subset.empty(), ErrorCode::kBadSubset, "empty modality subset");
    RunConfig run = cfg;
    run.modalities = subset;
    std::string name;
    for (const auto& m : subset) name += (name.empty() ? "" : "+") + m;
    if (log) log("subset " + name);
    const auto res = train_detector(run, data, log);
    rows.push_back({subset, res.report.dice.value_or(0.0)});
  }
  return rows;
}

std::vector<std::string> ablation_columns(const std::vector<std::vector<std::string>>& subsets) {
  std::vector<std::string> columns;
  for (const auto& m : modality_names()) {
    for (const auto& sub : subsets) {
      if (std::find(sub.begin(), sub.end(), m) != sub.end()) {
        columns.push_back(m);
        break;
      }
    }
  }
  return columns;
}

std::string modality_ablation_csv(const std::vector<ModalityRow>& rows,
                                  const std::vector<std::string>& columns) {
  std::string s;
  for (const auto& c : columns) s += c + ",";
  s += "dice\n";
  for (const auto& r : rows) {
    for (const auto& c : columns) {
      s += std::find(r.subset.begin(), r.subset.end(), c) != r.subset.end() ? "x," : "-,";
    }
    s += fmt17(r.dice) + "\n";
  }
  return s;
}

std::vector<PoolingRow> run_pooling_ablation(const RunConfig& cfg, const Dataset& data,
                                             const Logger& log) {
  std::vector<PoolingRow> rows;
  for (PoolKind kind : {PoolKind::kL2, PoolKind::kMax}) {
    RunConfig run = cfg;
    run.pooling = kind;
    if (log) log("pooling " + to_string(kind));
    const auto res = train_detector(run, data, log);
    rows.push_back({kind, res.report.dice.value_or(0.0), res.report.accuracy, res.report.kappa});
  }
  return rows;
}

std::string pooling_ablation_csv(const std::vector<PoolingRow>& rows) {
  std::string s = "method,pooling,dice,accuracy,kappa\n";
  for (const auto& r : rows) {
    s += std::string(r.pool == PoolKind::kL2 ? "with l2-norm" : "without l2-norm") + "," +
         to_string(r.pool) + "," + fmt17(r.dice) + "," + fmt17(r.accuracy) + "," +
         fmt17(r.kappa) + "\n";
  }
  return s;
}

std::string steps_csv(const std::vector<StepLog>& steps) {
  std::string s = "step,cls_loss,bbox_loss,total\n";
  for (const auto& st : steps) {
    s += std::to_string(st.step) + "," + fmt17(st.cls_loss) + "," + fmt17(st.bbox_loss) + "," +
         fmt17(st.total) + "\n";
  }
  return s;
}

}  // namespace l2net
